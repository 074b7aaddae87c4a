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

#include "qdecomp/retrieval.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <set>
#include <thread>

#include "qdecomp/error.h"

namespace qdecomp {
namespace {

constexpr char kIndexMagic[8] = {'Q', 'D', 'C', 'I', 'D', 'X', '0', '1'};

template <typename T>
void WritePod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T ReadPod(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw DataError("index file is truncated");
  }
  return value;
}

void WriteString(std::ostream& out, const std::string& s) {
  WritePod<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string ReadString(std::istream& in) {
  const auto n = ReadPod<std::uint64_t>(in);
  if (n > (1ULL << 32)) throw DataError("index file has a corrupt string");
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), static_cast<std::streamsize>(n))) {
    throw DataError("index file is truncated");
  }
  return s;
}

template <typename T>
void WriteArray(std::ostream& out, const std::vector<T>& v) {
  WritePod<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
std::vector<T> ReadArray(std::istream& in) {
  const auto n = ReadPod<std::uint64_t>(in);
  if (n > (1ULL << 40) / sizeof(T)) {
    throw DataError("index file has a corrupt array");
  }
  std::vector<T> v(n);
  if (n > 0 && !in.read(reinterpret_cast<char*>(v.data()),
                        static_cast<std::streamsize>(n * sizeof(T)))) {
    throw DataError("index file is truncated");
  }
  return v;
}

// Candidate ordering: higher cosine first, then lower id.
struct BetterCandidate {
  const EmbeddedIndex* index;
  bool operator()(const Candidate& a, const Candidate& b) const {
    if (a.score != b.score) return a.score > b.score;
    return index->id_rank(a.row) < index->id_rank(b.row);
  }
};

std::vector<Candidate> ScanRange(const EmbeddedIndex& index,
                                 const Embedding& query, std::size_t k,
                                 std::size_t begin, std::size_t end) {
  BetterCandidate better{&index};
  // Worst retained candidate on top.
  std::priority_queue<Candidate, std::vector<Candidate>, BetterCandidate>
      heap(better);
  for (std::size_t row = begin; row < end; ++row) {
    const double cos = std::clamp(
        index.QueryDot(query, row) / (query.norm * index.norm(row)), -1.0,
        1.0);
    Candidate c{row, cos};
    if (heap.size() < k) {
      heap.push(c);
    } else if (better(c, heap.top())) {
      heap.pop();
      heap.push(c);
    }
  }
  std::vector<Candidate> out;
  out.reserve(heap.size());
  while (!heap.empty()) {
    out.push_back(heap.top());
    heap.pop();
  }
  return out;
}

PseudoDecomposition MakeResult(const EmbeddedIndex& index,
                               const Question& question,
                               const CandidatePool& pool,
                               std::span<const std::size_t> members,
                               double score, DecompositionMethod method,
                               SearchMode search) {
  PseudoDecomposition d;
  d.question_id = question.id();
  for (std::size_t m : members) {
    d.sub_question_ids.push_back(index.id(pool.row(m)));
    d.sub_texts.push_back(index.text(pool.row(m)));
  }
  d.objective_score = score;
  d.method = method;
  d.search = search;
  return d;
}

Embedding EmbedQuestion(const EmbeddedIndex& index, const Question& q) {
  auto e = index.encoder().Encode(q.tokens());
  if (!e) {
    throw ZeroVectorError("question '" + q.id() +
                          "' has no in-vocabulary token");
  }
  return std::move(*e);
}

// Advances `c` (ascending indices < m) to the next combination in
// lexicographic order. Returns false after the last one.
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

EmbeddedIndex EmbeddedIndex::Build(const QuestionCorpus& corpus,
                                   Encoder encoder,
                                   const IndexFilters& filters,
                                   IndexBuildStats* stats) {
  if (corpus.empty()) throw DataError("cannot index an empty corpus");
  EmbeddedIndex index;
  index.encoder_ = std::move(encoder);
  index.dim_ = index.encoder_.dim();
  const bool sparse = index.source() == EmbeddingSource::kTfidf;
  if (sparse) index.row_ptr_.push_back(0);
  IndexBuildStats local;
  for (const auto& q : corpus) {
    ++local.input;
    const std::size_t n = q.tokens().size();
    if (n < filters.min_tokens) {
      ++local.too_short;
      continue;
    }
    if (n > filters.max_tokens) {
      ++local.too_long;
      continue;
    }
    auto e = index.encoder_.Encode(q.tokens());
    double sq = 0.0;
    if (e && sparse) {
      for (double v : e->sparse.values) {
        const double f = static_cast<float>(v);
        sq += f * f;
      }
    } else if (e) {
      for (double v : e->dense) {
        const double f = static_cast<float>(v);
        sq += f * f;
      }
    }
    if (!e || sq == 0.0) {
      ++local.unembeddable;
      continue;
    }
    index.ids_.push_back(q.id());
    index.texts_.push_back(q.raw_text());
    if (sparse) {
      index.cols_.insert(index.cols_.end(), e->sparse.indices.begin(),
                         e->sparse.indices.end());
      for (double v : e->sparse.values) {
        index.vals_.push_back(static_cast<float>(v));
      }
      index.row_ptr_.push_back(index.cols_.size());
    } else {
      for (double v : e->dense) index.dense_.push_back(static_cast<float>(v));
    }
  }
  local.kept = index.ids_.size();
  if (stats) *stats = local;
  if (index.ids_.empty()) {
    throw DataError("index is empty after filtering (" +
                    std::to_string(local.too_short) + " too short, " +
                    std::to_string(local.too_long) + " too long, " +
                    std::to_string(local.unembeddable) + " unembeddable)");
  }
  index.FinishRows();
  return index;
}

void EmbeddedIndex::FinishRows() {
  const std::size_t n = ids_.size();
  norms_.resize(n);
  for (std::size_t r = 0; r < n; ++r) norms_[r] = std::sqrt(RowDot(r, r));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ids_[a] < ids_[b]; });
  id_rank_.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    id_rank_[order[i]] = static_cast<std::uint32_t>(i);
  }
  by_id_.clear();
  for (std::size_t r = 0; r < n; ++r) {
    if (!by_id_.emplace(ids_[r], r).second) {
      throw DataError("duplicate id '" + ids_[r] + "' in index");
    }
  }
}

std::optional<std::size_t> EmbeddedIndex::FindRow(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

double EmbeddedIndex::QueryDot(const Embedding& query, std::size_t row) const {
  double s = 0.0;
  if (source() == EmbeddingSource::kTfidf) {
    const auto& qi = query.sparse.indices;
    const auto& qv = query.sparse.values;
    std::size_t i = 0;
    std::size_t j = row_ptr_[row];
    const std::size_t end = row_ptr_[row + 1];
    while (i < qi.size() && j < end) {
      if (qi[i] < cols_[j]) {
        ++i;
      } else if (qi[i] > cols_[j]) {
        ++j;
      } else {
        s += qv[i++] * static_cast<double>(vals_[j++]);
      }
    }
    return s;
  }
  const float* r = dense_.data() + row * dim_;
  for (std::size_t i = 0; i < dim_; ++i) {
    s += query.dense[i] * static_cast<double>(r[i]);
  }
  return s;
}

double EmbeddedIndex::RowDot(std::size_t a, std::size_t b) const {
  double s = 0.0;
  if (source() == EmbeddingSource::kTfidf) {
    std::size_t i = row_ptr_[a], ie = row_ptr_[a + 1];
    std::size_t j = row_ptr_[b], je = row_ptr_[b + 1];
    while (i < ie && j < je) {
      if (cols_[i] < cols_[j]) {
        ++i;
      } else if (cols_[i] > cols_[j]) {
        ++j;
      } else {
        s += static_cast<double>(vals_[i++]) * static_cast<double>(vals_[j++]);
      }
    }
    return s;
  }
  const float* x = dense_.data() + a * dim_;
  const float* y = dense_.data() + b * dim_;
  for (std::size_t i = 0; i < dim_; ++i) {
    s += static_cast<double>(x[i]) * static_cast<double>(y[i]);
  }
  return s;
}

std::vector<double> EmbeddedIndex::UnitRow(std::size_t row) const {
  std::vector<double> v(dim_, 0.0);
  if (source() == EmbeddingSource::kTfidf) {
    for (auto j = row_ptr_[row]; j < row_ptr_[row + 1]; ++j) {
      v[cols_[j]] = vals_[j] / norms_[row];
    }
  } else {
    for (std::size_t i = 0; i < dim_; ++i) {
      v[i] = dense_[row * dim_ + i] / norms_[row];
    }
  }
  return v;
}

SparseVector EmbeddedIndex::UnitSparseRow(std::size_t row) const {
  SparseVector v;
  if (source() == EmbeddingSource::kTfidf) {
    for (auto j = row_ptr_[row]; j < row_ptr_[row + 1]; ++j) {
      v.indices.push_back(cols_[j]);
      v.values.push_back(vals_[j] / norms_[row]);
    }
  } else {
    for (std::size_t i = 0; i < dim_; ++i) {
      const float x = dense_[row * dim_ + i];
      if (x != 0.0f) {
        v.indices.push_back(static_cast<std::uint32_t>(i));
        v.values.push_back(x / norms_[row]);
      }
    }
  }
  return v;
}

void EmbeddedIndex::Write(std::ostream& out) const {
  out.write(kIndexMagic, sizeof(kIndexMagic));
  const bool sparse = source() == EmbeddingSource::kTfidf;
  WritePod<std::uint8_t>(out, sparse ? 1 : 0);
  WritePod<std::uint64_t>(out, dim_);
  WritePod<std::uint64_t>(out, ids_.size());
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    WriteString(out, ids_[r]);
    WriteString(out, texts_[r]);
  }
  if (sparse) {
    WriteArray(out, row_ptr_);
    WriteArray(out, cols_);
    WriteArray(out, vals_);
    const TfidfModel& model = *encoder_.tfidf();
    WritePod<std::uint64_t>(out, model.corpus_size());
    WritePod<std::uint64_t>(out, model.vocabulary_size());
    for (const auto& t : model.terms()) WriteString(out, t);
    WriteArray(out, model.idf());
  } else {
    WriteArray(out, dense_);
  }
}

EmbeddedIndex EmbeddedIndex::Read(std::istream& in,
                                  std::shared_ptr<const VectorTable> table) {
  char magic[sizeof(kIndexMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kIndexMagic, sizeof(magic)) != 0) {
    throw DataError("not an index file (bad magic)");
  }
  EmbeddedIndex index;
  const bool sparse = ReadPod<std::uint8_t>(in) != 0;
  index.dim_ = ReadPod<std::uint64_t>(in);
  const auto rows = ReadPod<std::uint64_t>(in);
  for (std::uint64_t r = 0; r < rows; ++r) {
    index.ids_.push_back(ReadString(in));
    index.texts_.push_back(ReadString(in));
  }
  if (sparse) {
    index.row_ptr_ = ReadArray<std::uint64_t>(in);
    index.cols_ = ReadArray<std::uint32_t>(in);
    index.vals_ = ReadArray<float>(in);
    const auto corpus_size = ReadPod<std::uint64_t>(in);
    const auto vocab = ReadPod<std::uint64_t>(in);
    std::vector<std::string> terms;
    for (std::uint64_t i = 0; i < vocab; ++i) terms.push_back(ReadString(in));
    auto idf = ReadArray<double>(in);
    index.encoder_ = Encoder::Tfidf(std::make_shared<const TfidfModel>(
        std::move(terms), std::move(idf), corpus_size));
    if (index.row_ptr_.size() != rows + 1 ||
        index.cols_.size() != index.vals_.size() ||
        index.row_ptr_.back() != index.cols_.size()) {
      throw DataError("index file has inconsistent sparse rows");
    }
    for (auto c : index.cols_) {
      if (c >= vocab) throw DataError("index file has an invalid term index");
    }
  } else {
    index.dense_ = ReadArray<float>(in);
    if (index.dense_.size() != rows * index.dim_) {
      throw DataError("index file has inconsistent dense rows");
    }
    if (!table) {
      throw UsageError("a word-vector index needs the vector table to load");
    }
    if (table->dim() != index.dim_) {
      throw DataError("vector table dimension " + std::to_string(table->dim()) +
                      " does not match index dimension " +
                      std::to_string(index.dim_));
    }
    index.encoder_ = Encoder::WordVectors(std::move(table));
  }
  if (index.dim_ != index.encoder_.dim()) {
    throw DataError("index dimension does not match its encoder");
  }
  index.FinishRows();
  for (std::size_t r = 0; r < rows; ++r) {
    if (!(index.norms_[r] > 0.0)) throw DataError("index has a zero row");
  }
  return index;
}

void EmbeddedIndex::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write index '" + path.string() + "'");
  Write(out);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

EmbeddedIndex EmbeddedIndex::Load(const std::filesystem::path& path,
                                  std::shared_ptr<const VectorTable> table) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open index '" + path.string() + "'");
  try {
    return Read(in, std::move(table));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<Candidate> TopKCandidates(const EmbeddedIndex& index,
                                      const Embedding& query, std::size_t k,
                                      std::size_t shards) {
  if (k == 0) throw UsageError("top-k needs k >= 1");
  if (!(query.norm > 0.0)) {
    throw ZeroVectorError("top-k query is the zero vector");
  }
  const std::size_t n = index.size();
  shards = std::clamp<std::size_t>(shards, 1, std::max<std::size_t>(1, n));
  std::vector<std::vector<Candidate>> parts(shards);
  if (shards == 1) {
    parts[0] = ScanRange(index, query, k, 0, n);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t s = 0; s < shards; ++s) {
      threads.emplace_back([&, s] {
        parts[s] = ScanRange(index, query, k, n * s / shards,
                             n * (s + 1) / shards);
      });
    }
    for (auto& t : threads) t.join();
  }
  std::vector<Candidate> merged;
  for (auto& p : parts) merged.insert(merged.end(), p.begin(), p.end());
  std::sort(merged.begin(), merged.end(), BetterCandidate{&index});
  if (merged.size() > k) merged.resize(k);
  return merged;
}

double PairObjective(std::span<const double> q, std::span<const double> s1,
                     std::span<const double> s2) {
  return Dot(q, s1) + Dot(q, s2) - Dot(s1, s2);
}

CandidatePool::CandidatePool(const EmbeddedIndex& index,
                             const Embedding& query,
                             std::span<const std::size_t> rows)
    : rows_(rows.begin(), rows.end()) {
  if (!(query.norm > 0.0)) {
    throw ZeroVectorError("candidate pool query is the zero vector");
  }
  std::sort(rows_.begin(), rows_.end(), [&](std::size_t a, std::size_t b) {
    return index.id_rank(a) < index.id_rank(b);
  });
  rows_.erase(std::unique(rows_.begin(), rows_.end()), rows_.end());
  const std::size_t n = rows_.size();
  query_sq_norm_ = Dot(query, query);
  query_dot_.resize(n);
  query_cos_.resize(n);
  norms_.resize(n);
  gram_.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    norms_[i] = index.norm(rows_[i]);
    query_dot_[i] = index.QueryDot(query, rows_[i]);
    query_cos_[i] =
        std::clamp(query_dot_[i] / (query.norm * norms_[i]), -1.0, 1.0);
    for (std::size_t j = 0; j <= i; ++j) {
      const double g = index.RowDot(rows_[i], rows_[j]);
      gram_[i * n + j] = g;
      gram_[j * n + i] = g;
    }
  }
}

std::optional<std::size_t> CandidatePool::PositionOfRow(
    std::size_t row) const {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (rows_[i] == row) return i;
  }
  return std::nullopt;
}

double CandidatePool::SimilarityDiversityScore(
    std::span<const std::size_t> members) const {
  double similarity = 0.0;
  double redundancy = 0.0;
  for (std::size_t a = 0; a < members.size(); ++a) {
    similarity += query_cos_[members[a]];
    for (std::size_t b = a + 1; b < members.size(); ++b) {
      redundancy += Cos(members[a], members[b]);
    }
  }
  return similarity - redundancy;
}

double CandidatePool::SquaredResidual(
    std::span<const std::size_t> members) const {
  const std::size_t n = rows_.size();
  double cross = 0.0;
  double self = 0.0;
  for (std::size_t a = 0; a < members.size(); ++a) {
    cross += query_dot_[members[a]];
    self += gram_[members[a] * n + members[a]];
    for (std::size_t b = a + 1; b < members.size(); ++b) {
      self += 2.0 * gram_[members[a] * n + members[b]];
    }
  }
  return (query_sq_norm_ - 2.0 * cross) + self;
}

CandidatePool MakeCandidatePool(const EmbeddedIndex& index,
                                const Embedding& query, std::size_t k) {
  auto top = TopKCandidates(index, query, k);
  std::vector<std::size_t> rows;
  rows.reserve(top.size());
  for (const auto& c : top) rows.push_back(c.row);
  return CandidatePool(index, query, rows);
}

std::string_view MethodName(DecompositionMethod method) {
  switch (method) {
    case DecompositionMethod::kFixed2: return "fixed2";
    case DecompositionMethod::kGeneral: return "general";
    case DecompositionMethod::kVariable: return "variable";
    case DecompositionMethod::kRandom: return "random";
  }
  return "unknown";
}

DecompositionMethod ParseMethod(std::string_view name) {
  if (name == "fixed2") return DecompositionMethod::kFixed2;
  if (name == "general") return DecompositionMethod::kGeneral;
  if (name == "variable") return DecompositionMethod::kVariable;
  if (name == "random") return DecompositionMethod::kRandom;
  throw UsageError("unknown decomposition method '" + std::string(name) + "'");
}

std::string_view SearchModeName(SearchMode mode) {
  switch (mode) {
    case SearchMode::kExhaustive: return "exhaustive";
    case SearchMode::kGreedy: return "greedy";
    case SearchMode::kBeam: return "beam";
    case SearchMode::kSampled: return "sampled";
  }
  return "unknown";
}

std::string PseudoDecomposition::Text() const {
  std::string out;
  for (std::size_t i = 0; i < sub_texts.size(); ++i) {
    if (i > 0) out += ' ';
    out += sub_texts[i];
  }
  return out;
}

std::uint64_t Binomial(std::uint64_t m, std::uint64_t n) {
  if (n > m) return 0;
  n = std::min(n, m - n);
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= n; ++i) {
    // result * (m - n + i) / i stays integral at every step.
    const std::uint64_t factor = m - n + i;
    if (result > std::numeric_limits<std::uint64_t>::max() / factor) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    result = result * factor / i;
  }
  return result;
}

PseudoDecomposition PseudoDecomposeFixed(const EmbeddedIndex& index,
                                         const Question& question,
                                         std::size_t k) {
  const Embedding q = EmbedQuestion(index, question);
  const CandidatePool pool = MakeCandidatePool(index, q, k);
  if (pool.size() < 2) {
    throw DataError("question '" + question.id() +
                    "' has fewer than 2 candidates");
  }
  std::size_t best[2] = {0, 1};
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      const std::size_t pair[2] = {i, j};
      const double score = pool.SimilarityDiversityScore(pair);
      if (score > best_score) {
        best_score = score;
        best[0] = i;
        best[1] = j;
      }
    }
  }
  return MakeResult(index, question, pool, best, best_score,
                    DecompositionMethod::kFixed2, SearchMode::kExhaustive);
}

PseudoDecomposition PseudoDecomposeGeneral(const EmbeddedIndex& index,
                                           const Question& question,
                                           std::size_t n, std::size_t k) {
  if (n < 2) throw UsageError("general decomposition needs N >= 2");
  const Embedding q = EmbedQuestion(index, question);
  const CandidatePool pool = MakeCandidatePool(index, q, k);
  const std::size_t m = pool.size();
  if (m < n) {
    throw DataError("question '" + question.id() + "' has " +
                    std::to_string(m) + " candidates, needs " +
                    std::to_string(n));
  }
  if (n <= 3 && Binomial(m, n) <= kExhaustiveSubsetLimit) {
    std::vector<std::size_t> combo(n);
    std::iota(combo.begin(), combo.end(), 0);
    std::vector<std::size_t> best = combo;
    double best_score = -std::numeric_limits<double>::infinity();
    do {
      const double score = pool.SimilarityDiversityScore(combo);
      if (score > best_score) {
        best_score = score;
        best = combo;
      }
    } while (NextCombination(combo, m));
    return MakeResult(index, question, pool, best, best_score,
                      DecompositionMethod::kGeneral, SearchMode::kExhaustive);
  }
  // Greedy forward selection by marginal gain.
  std::vector<std::size_t> chosen;
  std::vector<bool> used(m, false);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t pick = m;
    double pick_gain = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < m; ++c) {
      if (used[c]) continue;
      double gain = pool.QueryCos(c);
      for (std::size_t s : chosen) gain -= pool.Cos(c, s);
      if (gain > pick_gain) {
        pick_gain = gain;
        pick = c;
      }
    }
    used[pick] = true;
    chosen.push_back(pick);
  }
  std::sort(chosen.begin(), chosen.end());
  return MakeResult(index, question, pool, chosen,
                    pool.SimilarityDiversityScore(chosen),
                    DecompositionMethod::kGeneral, SearchMode::kGreedy);
}

PseudoDecomposition PseudoDecomposeVariable(const EmbeddedIndex& index,
                                            const Question& question,
                                            std::size_t max_n, std::size_t k,
                                            std::size_t beam_width) {
  if (max_n < 1) throw UsageError("variable decomposition needs max_N >= 1");
  if (beam_width < 1) throw UsageError("beam width must be >= 1");
  const Embedding q = EmbedQuestion(index, question);
  const CandidatePool pool = MakeCandidatePool(index, q, k);
  const std::size_t m = pool.size();
  if (m == 0) {
    throw DataError("question '" + question.id() + "' has no candidates");
  }
  struct State {
    std::vector<std::size_t> members;
    double sq = 0.0;
  };
  auto better = [](const State& a, const State& b) {
    if (a.sq != b.sq) return a.sq < b.sq;
    return a.members < b.members;
  };

  std::vector<State> beam;
  for (std::size_t c = 0; c < m; ++c) {
    State s{{c}, 0.0};
    s.sq = pool.SquaredResidual(s.members);
    beam.push_back(std::move(s));
  }
  std::sort(beam.begin(), beam.end(), better);
  if (beam.size() > beam_width) beam.resize(beam_width);
  State best = beam.front();

  for (std::size_t size = 2; size <= std::min(max_n, m); ++size) {
    std::set<std::vector<std::size_t>> seen;
    std::vector<State> next;
    for (const auto& st : beam) {
      for (std::size_t c = 0; c < m; ++c) {
        if (std::binary_search(st.members.begin(), st.members.end(), c)) {
          continue;
        }
        std::vector<std::size_t> members = st.members;
        members.insert(std::upper_bound(members.begin(), members.end(), c), c);
        if (!seen.insert(members).second) continue;
        State s{std::move(members), 0.0};
        s.sq = pool.SquaredResidual(s.members);
        next.push_back(std::move(s));
      }
    }
    if (next.empty()) break;
    std::sort(next.begin(), next.end(), better);
    if (next.size() > beam_width) next.resize(beam_width);
    // Equal distances keep the smaller subset found at an earlier size.
    if (next.front().sq < best.sq) best = next.front();
    beam = std::move(next);
  }
  return MakeResult(index, question, pool, best.members,
                    std::sqrt(std::max(0.0, best.sq)),
                    DecompositionMethod::kVariable, SearchMode::kBeam);
}

std::vector<std::size_t> SampleWithoutReplacement(std::size_t population,
                                                  std::size_t n, Rng& rng) {
  if (n > population) {
    throw DataError("cannot draw " + std::to_string(n) + " items from " +
                    std::to_string(population));
  }
  // Fisher-Yates over a virtual identity permutation; only displaced
  // slots are materialized.
  std::unordered_map<std::size_t, std::size_t> displaced;
  auto at = [&](std::size_t i) {
    auto it = displaced.find(i);
    return it == displaced.end() ? i : it->second;
  };
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.UniformBelow(population - i);
    const std::size_t vi = at(i);
    const std::size_t vj = at(j);
    out.push_back(vj);
    displaced[j] = vi;
  }
  return out;
}

PseudoDecomposition RandomPseudoDecompose(const QuestionCorpus& corpus,
                                          const Question& question,
                                          std::size_t n, std::uint64_t seed) {
  if (n < 1) throw UsageError("random decomposition needs N >= 1");
  Rng rng = Rng::Substream(seed, "random-pseudo-decomposition",
                           Fnv1a64(question.id()));
  PseudoDecomposition d;
  d.question_id = question.id();
  for (std::size_t i : SampleWithoutReplacement(corpus.size(), n, rng)) {
    d.sub_question_ids.push_back(corpus[i].id());
    d.sub_texts.push_back(corpus[i].raw_text());
  }
  d.method = DecompositionMethod::kRandom;
  d.search = SearchMode::kSampled;
  return d;
}

PseudoDecomposition RandomPseudoDecompose(const EmbeddedIndex& index,
                                          const Question& question,
                                          std::size_t n, std::uint64_t seed) {
  if (n < 1) throw UsageError("random decomposition needs N >= 1");
  Rng rng = Rng::Substream(seed, "random-pseudo-decomposition",
                           Fnv1a64(question.id()));
  PseudoDecomposition d;
  d.question_id = question.id();
  for (std::size_t r : SampleWithoutReplacement(index.size(), n, rng)) {
    d.sub_question_ids.push_back(index.id(r));
    d.sub_texts.push_back(index.text(r));
  }
  d.method = DecompositionMethod::kRandom;
  d.search = SearchMode::kSampled;
  return d;
}

DatasetRecord ToRecord(const Question& question,
                       const PseudoDecomposition& decomposition) {
  return {question.id(), question.raw_text(), decomposition.Text(),
          decomposition.objective_score,
          std::string(MethodName(decomposition.method))};
}

DatasetResult BuildPseudoDecompositionDataset(const QuestionCorpus& queries,
                                              const EmbeddedIndex& index,
                                              const DatasetConfig& config) {
  const std::size_t n = queries.size();
  std::vector<std::optional<PseudoDecomposition>> results(n);
  std::vector<std::string> errors(n);

  auto run_one = [&](std::size_t i) {
    const Question& q = queries[i];
    try {
      switch (config.method) {
        case DecompositionMethod::kFixed2:
          results[i] = PseudoDecomposeFixed(index, q, config.k);
          break;
        case DecompositionMethod::kGeneral:
          results[i] = PseudoDecomposeGeneral(index, q, config.n, config.k);
          break;
        case DecompositionMethod::kVariable:
          results[i] = PseudoDecomposeVariable(index, q, config.max_n,
                                               config.k, config.beam_width);
          break;
        case DecompositionMethod::kRandom:
          // Random baselines still skip questions the index cannot embed,
          // so every method covers the same question set.
          if (!index.encoder().Encode(q.tokens())) {
            throw ZeroVectorError("question '" + q.id() +
                                  "' has no in-vocabulary token");
          }
          results[i] = RandomPseudoDecompose(index, q, config.n, config.seed);
          break;
      }
    } catch (const DataError& e) {
      errors[i] = q.id() + ": " + e.what();
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, config.workers);
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run_one(i);
      });
    }
    for (auto& t : threads) t.join();
  }

  DatasetResult out;
  for (std::size_t i = 0; i < n; ++i) {
    if (results[i]) {
      out.records.push_back(ToRecord(queries[i], *results[i]));
      out.decompositions.push_back(std::move(*results[i]));
    } else {
      ++out.failures;
      out.failure_messages.push_back(std::move(errors[i]));
    }
  }
  return out;
}

std::string FormatScore(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

std::string SanitizeField(std::string_view field) {
  std::string out(field);
  for (char& c : out) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

void WriteDatasetTsv(std::span<const DatasetRecord> records,
                     std::ostream& out) {
  for (const auto& r : records) {
    out << SanitizeField(r.question_id) << '\t'
        << SanitizeField(r.question_text) << '\t'
        << SanitizeField(r.decomposition_text) << '\t'
        << FormatScore(r.objective_score) << '\t' << SanitizeField(r.method)
        << '\n';
  }
}

std::vector<DatasetRecord> ReadDatasetTsv(std::istream& in) {
  std::vector<DatasetRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == '\t') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (fields.size() != 5) {
      throw DataError("line " + std::to_string(line_no) + ": expected 5 "
                      "tab-separated fields, found " +
                      std::to_string(fields.size()));
    }
    DatasetRecord r;
    r.question_id = fields[0];
    r.question_text = fields[1];
    r.decomposition_text = fields[2];
    const auto& s = fields[3];
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(),
                                     r.objective_score);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw DataError("line " + std::to_string(line_no) +
                      ": objective score '" + s + "' is not a number");
    }
    r.method = fields[4];
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace qdecomp
