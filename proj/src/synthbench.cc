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

#include "qdecomp/synthbench.h"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <set>
#include <thread>

#include "qdecomp/error.h"
#include "qdecomp/random.h"

namespace qdecomp {
namespace {

std::string_view StripQuestionMarks(std::string_view text) {
  auto is_trailing = [](char c) {
    return c == '?' || c == ' ' || c == '\t' || c == '\r' || c == '\n';
  };
  while (!text.empty() && is_trailing(text.back())) text.remove_suffix(1);
  return text;
}

bool NextCombination(std::vector<std::size_t>& c, std::size_t m) {
  const std::size_t n = c.size();
  for (std::size_t i = n; i-- > 0;) {
    if (c[i] < m - n + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < n; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

std::string ComposeQuestions(std::span<const std::string> texts) {
  std::string out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (i > 0) out += " and ";
    out += StripQuestionMarks(texts[i]);
  }
  out += '?';
  return out;
}

std::vector<SyntheticComposite> BuildSyntheticCompositional(
    const QuestionCorpus& singles, std::size_t n, std::size_t count,
    std::uint64_t seed) {
  if (n < 2 || n > 3) throw UsageError("composites combine 2 or 3 questions");
  if (count < 1) throw UsageError("benchmark needs at least one composite");
  if (singles.size() < n) {
    throw DataError("corpus has " + std::to_string(singles.size()) +
                    " questions, composites need " + std::to_string(n));
  }
  std::vector<SyntheticComposite> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    Rng rng = Rng::Substream(seed, "synthetic-compositional", c);
    std::vector<std::string> texts;
    std::vector<std::string> ids;
    for (std::size_t i : SampleWithoutReplacement(singles.size(), n, rng)) {
      texts.push_back(singles[i].raw_text());
      ids.push_back(singles[i].id());
    }
    out.push_back({Question(FormatId(c, 6, "synth-"), ComposeQuestions(texts)),
                   std::move(ids)});
  }
  return out;
}

std::string_view ObjectiveName(RankObjective objective) {
  return objective == RankObjective::kEuclidean ? "eq2" : "eq1";
}

RankObjective ParseObjective(std::string_view name) {
  if (name == "eq1") return RankObjective::kSimilarityDiversity;
  if (name == "eq2") return RankObjective::kEuclidean;
  throw UsageError("unknown objective '" + std::string(name) +
                   "' (expected eq1 or eq2)");
}

std::uint64_t DecompositionRank(RankObjective objective,
                                const Question& composite,
                                std::span<const std::string> gold_sub_ids,
                                const EmbeddedIndex& index, std::size_t k) {
  const std::size_t n = gold_sub_ids.size();
  if (n < 1 || n > 3) throw UsageError("gold decomposition must have 1-3 ids");
  std::vector<std::size_t> gold_rows;
  for (const auto& id : gold_sub_ids) {
    auto row = index.FindRow(id);
    if (!row) throw DataError("gold sub-question '" + id + "' is not indexed");
    gold_rows.push_back(*row);
  }
  if (std::set<std::size_t>(gold_rows.begin(), gold_rows.end()).size() != n) {
    throw DataError("gold sub-question ids repeat");
  }
  auto query = index.encoder().Encode(composite.tokens());
  if (!query) {
    throw ZeroVectorError("composite '" + composite.id() +
                          "' has no in-vocabulary token");
  }
  const CandidatePool pool = MakeCandidatePool(index, *query, k);
  const std::uint64_t worst = Binomial(pool.size(), n) + 1;
  std::vector<std::size_t> gold;
  for (std::size_t row : gold_rows) {
    auto pos = pool.PositionOfRow(row);
    if (!pos) return worst;
    gold.push_back(*pos);
  }
  std::sort(gold.begin(), gold.end());

  auto score = [&](std::span<const std::size_t> members) {
    return objective == RankObjective::kEuclidean
               ? pool.SquaredResidual(members)
               : pool.SimilarityDiversityScore(members);
  };
  const double gold_score = score(gold);
  std::uint64_t better = 0;
  std::vector<std::size_t> combo(n);
  std::iota(combo.begin(), combo.end(), 0);
  do {
    const double s = score(combo);
    const bool wins = objective == RankObjective::kEuclidean ? s < gold_score
                                                             : s > gold_score;
    if (wins) ++better;
  } while (NextCombination(combo, pool.size()));
  return better + 1;
}

double MeanReciprocalRank(std::span<const std::uint64_t> ranks) {
  if (ranks.empty()) throw DataError("MRR over an empty benchmark");
  double sum = 0.0;
  for (auto r : ranks) {
    if (r == 0) throw DataError("rank must be >= 1");
    sum += 1.0 / static_cast<double>(r);
  }
  return sum / static_cast<double>(ranks.size());
}

MrrResult MrrEval(RankObjective objective,
                  std::span<const SyntheticComposite> benchmark,
                  const EmbeddedIndex& index, std::size_t k,
                  std::size_t workers) {
  if (benchmark.empty()) throw DataError("MRR over an empty benchmark");
  MrrResult result;
  result.ranks.assign(benchmark.size(), 0);
  std::vector<std::string> errors(benchmark.size());
  auto run_one = [&](std::size_t i) {
    try {
      result.ranks[i] = DecompositionRank(objective, benchmark[i].composite,
                                          benchmark[i].gold_sub_ids, index, k);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, benchmark.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < benchmark.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < benchmark.size(); i = next++) {
          run_one(i);
        }
      });
    }
    for (auto& t : threads) t.join();
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) {
      throw DataError(benchmark[i].composite.id() + ": " + errors[i]);
    }
  }
  result.mrr = MeanReciprocalRank(result.ranks);
  return result;
}

}  // namespace qdecomp
