// Copyright 2026 The qdecomp Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "support.h"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>

namespace qdecomp::testing {

namespace fs = std::filesystem;

fs::path TempDir(const std::string& tag) {
  static std::uint64_t counter = 0;
  const fs::path dir = fs::temp_directory_path() /
                       ("qdecomp-" + tag + "-" + std::to_string(::getpid()) +
                        "-" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

double Gaussian(Rng& rng) {
  double u1 = rng.Uniform01();
  while (u1 <= 0.0) u1 = rng.Uniform01();
  const double u2 = rng.Uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

ToyWorld MakeToyWorld(const FloatRows& rows, const FloatRows& queries,
                      std::vector<std::string> ids) {
  const std::size_t dim = rows.empty() ? queries.at(0).size() : rows[0].size();
  if (ids.empty()) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      ids.push_back(FormatId(i, 3, "s"));
    }
  }
  auto table = std::make_shared<VectorTable>(dim);
  QuestionCorpus corpus;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string word = "row" + std::to_string(i);
    table->Add(word, rows[i]);
    corpus.Add(Question(ids[i], word));
  }
  std::vector<Question> qs;
  for (std::size_t j = 0; j < queries.size(); ++j) {
    const std::string word = "query" + std::to_string(j);
    table->Add(word, queries[j]);
    qs.emplace_back("q" + std::to_string(j), word);
  }
  std::shared_ptr<const VectorTable> shared = table;
  auto index = EmbeddedIndex::Build(corpus, Encoder::WordVectors(shared),
                                    IndexFilters{1, 100});
  return {shared, std::move(index), std::move(qs), rows, queries,
          std::move(ids)};
}

FloatRows RandomGaussianRows(std::size_t count, std::size_t dim, Rng& rng) {
  FloatRows rows(count, std::vector<float>(dim));
  for (auto& r : rows) {
    for (auto& x : r) x = static_cast<float>(Gaussian(rng));
  }
  return rows;
}

FloatRows RandomIntegerRows(std::size_t count, std::size_t dim, int lo, int hi,
                            Rng& rng) {
  FloatRows rows(count, std::vector<float>(dim));
  for (auto& r : rows) {
    bool nonzero = false;
    while (!nonzero) {
      for (auto& x : r) {
        x = static_cast<float>(lo + static_cast<int>(rng.UniformBelow(
                                        static_cast<std::uint64_t>(hi - lo + 1))));
        nonzero = nonzero || x != 0.0f;
      }
    }
  }
  return rows;
}

double OracleCosine(const std::vector<float>& a, const std::vector<float>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<double>(a[i]) * b[i];
    aa += static_cast<double>(a[i]) * a[i];
    bb += static_cast<double>(b[i]) * b[i];
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

namespace {

std::vector<std::string> SortedIds(const ToyWorld& world,
                                   const std::vector<std::size_t>& rows) {
  std::vector<std::string> ids;
  for (std::size_t r : rows) ids.push_back(world.ids[r]);
  std::sort(ids.begin(), ids.end());
  return ids;
}

// Calls visit(subset) for every size-n subset of {0..m-1}, recursively.
template <typename Visit>
void ForEachSubset(std::size_t m, std::size_t n, std::size_t start,
                   std::vector<std::size_t>& current, Visit& visit) {
  if (current.size() == n) {
    visit(current);
    return;
  }
  for (std::size_t i = start; i < m; ++i) {
    current.push_back(i);
    ForEachSubset(m, n, i + 1, current, visit);
    current.pop_back();
  }
}

}  // namespace

std::vector<std::string> OracleBestPair(
    const ToyWorld& world, std::size_t query,
    const std::vector<std::size_t>& candidates) {
  const auto& q = world.query_vectors[query];
  double best = -1e300;
  std::vector<std::string> best_ids;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t j = i + 1; j < candidates.size(); ++j) {
      const auto& a = world.rows[candidates[i]];
      const auto& b = world.rows[candidates[j]];
      const double score =
          OracleCosine(q, a) + OracleCosine(q, b) - OracleCosine(a, b);
      auto ids = SortedIds(world, {candidates[i], candidates[j]});
      if (score > best || (score == best && ids < best_ids)) {
        best = score;
        best_ids = ids;
      }
    }
  }
  return best_ids;
}

std::vector<std::string> OracleBestSubset(
    const ToyWorld& world, std::size_t query,
    const std::vector<std::size_t>& candidates, std::size_t n) {
  const auto& q = world.query_vectors[query];
  double best = -1e300;
  std::vector<std::string> best_ids;
  std::vector<std::size_t> current;
  auto visit = [&](const std::vector<std::size_t>& subset) {
    double score = 0.0;
    for (std::size_t i = 0; i < subset.size(); ++i) {
      score += OracleCosine(q, world.rows[candidates[subset[i]]]);
      for (std::size_t j = i + 1; j < subset.size(); ++j) {
        score -= OracleCosine(world.rows[candidates[subset[i]]],
                              world.rows[candidates[subset[j]]]);
      }
    }
    std::vector<std::size_t> rows;
    for (std::size_t s : subset) rows.push_back(candidates[s]);
    auto ids = SortedIds(world, rows);
    if (score > best || (score == best && ids < best_ids)) {
      best = score;
      best_ids = ids;
    }
  };
  ForEachSubset(candidates.size(), n, 0, current, visit);
  return best_ids;
}

std::pair<std::vector<std::string>, double> OracleBestResidual(
    const ToyWorld& world, std::size_t query,
    const std::vector<std::size_t>& candidates, std::size_t max_n) {
  const auto& q = world.query_vectors[query];
  double best = 1e300;
  std::vector<std::string> best_ids;
  for (std::size_t n = 1; n <= std::min(max_n, candidates.size()); ++n) {
    std::vector<std::size_t> current;
    auto visit = [&](const std::vector<std::size_t>& subset) {
      double sq = 0.0;
      for (std::size_t d = 0; d < q.size(); ++d) {
        double r = q[d];
        for (std::size_t s : subset) r -= world.rows[candidates[s]][d];
        sq += r * r;
      }
      std::vector<std::size_t> rows;
      for (std::size_t s : subset) rows.push_back(candidates[s]);
      auto ids = SortedIds(world, rows);
      // Larger subsets only replace on a strictly smaller residual.
      if (sq < best || (sq == best && ids.size() == best_ids.size() &&
                        ids < best_ids)) {
        best = sq;
        best_ids = ids;
      }
    };
    ForEachSubset(candidates.size(), n, 0, current, visit);
  }
  return {best_ids, std::sqrt(best)};
}

std::vector<std::size_t> OracleRanking(const ToyWorld& world,
                                       std::size_t query) {
  std::vector<std::size_t> order(world.rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> cos(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    cos[i] = OracleCosine(world.query_vectors[query], world.rows[i]);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (cos[a] != cos[b]) return cos[a] > cos[b];
    return world.ids[a] < world.ids[b];
  });
  return order;
}

double OracleBleu(const std::vector<std::vector<std::string>>& hyps,
                  const std::vector<std::vector<std::string>>& refs,
                  std::size_t max_n) {
  double hyp_len = 0.0, ref_len = 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    double matched = 0.0, total = 0.0;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      auto grams = [n](const std::vector<std::string>& t) {
        std::vector<std::vector<std::string>> g;
        for (std::size_t s = 0; s + n <= t.size(); ++s) {
          g.emplace_back(t.begin() + static_cast<std::ptrdiff_t>(s),
                         t.begin() + static_cast<std::ptrdiff_t>(s + n));
        }
        std::sort(g.begin(), g.end());
        return g;
      };
      const auto h = grams(hyps[i]);
      const auto r = grams(refs[i]);
      total += static_cast<double>(h.size());
      // Multiset intersection size of two sorted lists equals the
      // clipped match count.
      std::vector<std::vector<std::string>> common;
      std::set_intersection(h.begin(), h.end(), r.begin(), r.end(),
                            std::back_inserter(common));
      matched += static_cast<double>(common.size());
    }
    if (total == 0.0) continue;
    if (matched == 0.0) return 0.0;
    log_sum += std::log(matched / total);
  }
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    hyp_len += static_cast<double>(hyps[i].size());
    ref_len += static_cast<double>(refs[i].size());
  }
  if (hyp_len == 0.0) return ref_len == 0.0 ? 1.0 : 0.0;
  const double bp = hyp_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
  return bp * std::exp(log_sum / static_cast<double>(max_n));
}

std::size_t OracleEditDistance(const std::vector<std::string>& a,
                               const std::vector<std::string>& b) {
  std::vector<std::vector<long>> memo(a.size() + 1,
                                      std::vector<long>(b.size() + 1, -1));
  std::function<long(std::size_t, std::size_t)> d = [&](std::size_t i,
                                                        std::size_t j) -> long {
    if (i == a.size()) return static_cast<long>(b.size() - j);
    if (j == b.size()) return static_cast<long>(a.size() - i);
    long& m = memo[i][j];
    if (m >= 0) return m;
    const long sub = d(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
    m = std::min({sub, d(i + 1, j) + 1, d(i, j + 1) + 1});
    return m;
  };
  return static_cast<std::size_t>(d(0, 0));
}

std::string PseudoWord(std::size_t n) {
  static constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l",
                                            "m", "n", "p", "r", "s", "t",
                                            "v", "z", "ch", "sh"};
  static constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai"};
  std::string word;
  // Bijective base-96 syllables, at least two.
  std::size_t x = n;
  int syllables = 0;
  do {
    const std::size_t s = x % 96;
    word += kOnsets[s / 6];
    word += kVowels[s % 6];
    x /= 96;
    ++syllables;
  } while (x > 0 || syllables < 2);
  return word;
}

namespace {

const std::vector<std::string>& WhWords() {
  static const std::vector<std::string> words = {"who", "what", "which",
                                                 "where", "when"};
  return words;
}

const std::vector<std::string>& FunctionWords() {
  static const std::vector<std::string> words = {
      "the", "of", "in", "was", "is", "did", "a", "by", "for", "to",
      "from", "with", "on", "at", "an", "that", "first", "its", "has", "as"};
  return words;
}

// Zipf(1) over [0, n): inverse-CDF on cumulative harmonic weights.
std::size_t ZipfDraw(Rng& rng, std::size_t n) {
  static std::vector<double> cdf;
  if (cdf.size() != n) {
    cdf.assign(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += 1.0 / static_cast<double>(i + 1);
      cdf[i] = total;
    }
    for (auto& c : cdf) c /= total;
  }
  const double u = rng.Uniform01();
  return static_cast<std::size_t>(
      std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
}

}  // namespace

std::string SyntheticQuestion(Rng& rng, std::size_t content_vocab) {
  const auto& wh = WhWords();
  const auto& fw = FunctionWords();
  std::string text = wh[rng.UniformBelow(wh.size())];
  text[0] = static_cast<char>(text[0] - 'a' + 'A');
  const std::size_t body = 4 + rng.UniformBelow(6);
  for (std::size_t i = 0; i < body; ++i) {
    text += ' ';
    if (rng.Bernoulli(0.35)) {
      text += fw[rng.UniformBelow(fw.size())];
    } else {
      // Skip the head of the Zipf curve so content words stay informative.
      text += PseudoWord(20 + ZipfDraw(rng, content_vocab));
    }
  }
  text += '?';
  return text;
}

SyntheticWorld MakeSyntheticWorld(std::size_t questions, std::size_t dim,
                                  std::uint64_t seed) {
  constexpr std::size_t kContentVocab = 4000;
  Rng rng = Rng::Substream(seed, "synthetic-world");
  SyntheticWorld world;
  std::set<std::string> seen;
  while (world.singles.size() < questions) {
    std::string text = SyntheticQuestion(rng, kContentVocab);
    if (!seen.insert(text).second) continue;
    world.singles.Add(Question(FormatId(world.singles.size(), 6, "s"), text));
  }

  std::vector<std::string> words = {"?", "and"};
  for (const auto& w : WhWords()) words.push_back(w);
  for (const auto& w : FunctionWords()) words.push_back(w);
  const std::size_t function_count = words.size();
  for (std::size_t i = 0; i < kContentVocab; ++i) {
    words.push_back(PseudoWord(20 + i));
  }

  Rng vec_rng = Rng::Substream(seed, "synthetic-vectors");
  std::vector<double> common(dim);
  double norm = 0.0;
  for (auto& x : common) {
    x = Gaussian(vec_rng);
    norm += x * x;
  }
  for (auto& x : common) x /= std::sqrt(norm);

  auto table = std::make_shared<VectorTable>(dim);
  std::ostringstream text;
  text << words.size() << ' ' << dim << '\n';
  const double spread = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t w = 0; w < words.size(); ++w) {
    const bool function = w < function_count;
    const double shared = function ? 0.8 : 0.25;
    const double own = function ? 0.35 : 1.0;
    std::vector<float> v(dim);
    text << words[w];
    for (std::size_t d = 0; d < dim; ++d) {
      v[d] = static_cast<float>(shared * common[d] +
                                own * spread * Gaussian(vec_rng));
      char buf[32];
      std::snprintf(buf, sizeof(buf), " %.6g", static_cast<double>(v[d]));
      text << buf;
      v[d] = std::stof(buf + 1);
    }
    text << '\n';
    table->Add(words[w], v);
  }
  world.vectors_text = text.str();
  world.table = table;
  return world;
}

ClassFixture MakeClassFixture(std::size_t per_label_train,
                              std::size_t per_label_heldout,
                              bool shared_vocabulary,
                              std::size_t shared_only_every,
                              std::uint64_t seed, double shared_rate) {
  constexpr std::size_t kPool = 40;
  const std::vector<std::string> labels = {"single-hop", "multi-hop"};
  Rng rng = Rng::Substream(seed, "class-fixture");
  auto make_text = [&](std::size_t label, bool shared_only) {
    std::string text;
    const std::size_t len = 5 + rng.UniformBelow(4);
    // Informative examples always carry at least one label word.
    const std::size_t anchor = rng.UniformBelow(len);
    for (std::size_t i = 0; i < len; ++i) {
      if (i > 0) text += ' ';
      const bool use_shared =
          shared_vocabulary &&
          (shared_only || (i != anchor && rng.Bernoulli(shared_rate)));
      const std::size_t base = use_shared ? 2 * kPool : label * kPool;
      text += PseudoWord(base + rng.UniformBelow(kPool));
    }
    return text + " ?";
  };
  ClassFixture fixture;
  for (std::size_t label = 0; label < labels.size(); ++label) {
    LabeledCorpus train{labels[label], QuestionCorpus(labels[label])};
    LabeledCorpus heldout{labels[label], QuestionCorpus(labels[label])};
    for (std::size_t i = 0; i < per_label_train + per_label_heldout; ++i) {
      const bool shared_only =
          shared_only_every > 0 && (i + 1) % shared_only_every == 0;
      Question q(labels[label] + "-" + std::to_string(i),
                 make_text(label, shared_only));
      (i < per_label_train ? train : heldout).corpus.Add(std::move(q));
    }
    fixture.train.push_back(std::move(train));
    fixture.heldout.push_back(std::move(heldout));
  }
  return fixture;
}

}  // namespace qdecomp::testing
