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

#ifndef QDECOMP_RETRIEVAL_H_
#define QDECOMP_RETRIEVAL_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qdecomp/corpus.h"
#include "qdecomp/embeddings.h"
#include "qdecomp/random.h"

namespace qdecomp {

struct IndexFilters {
  std::size_t min_tokens = 4;
  std::size_t max_tokens = 20;
};

struct IndexBuildStats {
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t too_short = 0;
  std::size_t too_long = 0;
  std::size_t unembeddable = 0;
};

// Exact-search index over the single-hop corpus. Rows keep the raw
// (un-normalized) embedding in 32-bit floats together with its norm, so
// both cosine scores and the un-normalized sums of the Euclidean objective
// come from the same storage. Immutable after construction.
class EmbeddedIndex {
 public:
  static EmbeddedIndex Build(const QuestionCorpus& corpus, Encoder encoder,
                             const IndexFilters& filters = {},
                             IndexBuildStats* stats = nullptr);

  // `table` is required for word-vector indexes and ignored for tf-idf
  // indexes, whose model is stored in the file.
  static EmbeddedIndex Load(const std::filesystem::path& path,
                            std::shared_ptr<const VectorTable> table = nullptr);
  void Save(const std::filesystem::path& path) const;
  static EmbeddedIndex Read(std::istream& in,
                            std::shared_ptr<const VectorTable> table = nullptr);
  void Write(std::ostream& out) const;

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  EmbeddingSource source() const { return encoder_.source(); }
  const Encoder& encoder() const { return encoder_; }

  const std::string& id(std::size_t row) const { return ids_[row]; }
  const std::string& text(std::size_t row) const { return texts_[row]; }
  const std::vector<std::string>& ids() const { return ids_; }
  double norm(std::size_t row) const { return norms_[row]; }
  // Position of the row's id in lexicographic id order.
  std::uint32_t id_rank(std::size_t row) const { return id_rank_[row]; }
  std::optional<std::size_t> FindRow(std::string_view id) const;

  // Raw (un-normalized) dot products.
  double QueryDot(const Embedding& query, std::size_t row) const;
  double RowDot(std::size_t a, std::size_t b) const;

  // Row as a unit vector (dense indexes) or unit sparse vector.
  std::vector<double> UnitRow(std::size_t row) const;
  SparseVector UnitSparseRow(std::size_t row) const;

 private:
  EmbeddedIndex() = default;
  void FinishRows();

  Encoder encoder_;
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<std::string> texts_;
  std::vector<double> norms_;
  std::vector<std::uint32_t> id_rank_;
  std::unordered_map<std::string, std::size_t> by_id_;
  // Dense rows, row-major size() x dim().
  std::vector<float> dense_;
  // Sparse rows in CSR layout.
  std::vector<std::uint64_t> row_ptr_;
  std::vector<std::uint32_t> cols_;
  std::vector<float> vals_;
};

struct Candidate {
  std::size_t row = 0;
  double score = 0.0;  // cosine to the query
};

// The k rows with highest cosine to the query, best first; equal scores are
// ordered by id. Rows are scanned in `shards` contiguous blocks on separate
// threads. Throws ZeroVectorError for a zero query.
std::vector<Candidate> TopKCandidates(const EmbeddedIndex& index,
                                      const Embedding& query, std::size_t k,
                                      std::size_t shards = 1);

// q.s1 + q.s2 - s1.s2 over unit vectors.
double PairObjective(std::span<const double> q, std::span<const double> s1,
                     std::span<const double> s2);

// Retrieved candidates S' with every quantity the objectives need. Members
// are stored in id order, so pool positions double as tie-break keys.
class CandidatePool {
 public:
  CandidatePool(const EmbeddedIndex& index, const Embedding& query,
                std::span<const std::size_t> rows);

  std::size_t size() const { return rows_.size(); }
  std::size_t row(std::size_t i) const { return rows_[i]; }
  const std::vector<std::size_t>& rows() const { return rows_; }
  std::optional<std::size_t> PositionOfRow(std::size_t row) const;

  double QueryCos(std::size_t i) const { return query_cos_[i]; }
  double Cos(std::size_t i, std::size_t j) const {
    return gram_[i * rows_.size() + j] / (norms_[i] * norms_[j]);
  }

  // Similarity-plus-diversity score: sum of q-similarities minus the sum
  // of similarities over unordered member pairs. `members` ascending.
  double SimilarityDiversityScore(std::span<const std::size_t> members) const;
  // ||v_q - sum v_s||^2 over raw vectors. `members` ascending.
  double SquaredResidual(std::span<const std::size_t> members) const;

 private:
  std::vector<std::size_t> rows_;
  std::vector<double> query_cos_;
  std::vector<double> query_dot_;
  double query_sq_norm_ = 0.0;
  std::vector<double> norms_;
  std::vector<double> gram_;
};

CandidatePool MakeCandidatePool(const EmbeddedIndex& index,
                                const Embedding& query, std::size_t k);

enum class DecompositionMethod { kFixed2, kGeneral, kVariable, kRandom };
enum class SearchMode { kExhaustive, kGreedy, kBeam, kSampled };

std::string_view MethodName(DecompositionMethod method);
DecompositionMethod ParseMethod(std::string_view name);
std::string_view SearchModeName(SearchMode mode);

struct PseudoDecomposition {
  std::string question_id;
  std::vector<std::string> sub_question_ids;
  std::vector<std::string> sub_texts;
  // Maximized similarity-plus-diversity score, or the minimized Euclidean
  // distance for kVariable. Zero for kRandom.
  double objective_score = 0.0;
  DecompositionMethod method = DecompositionMethod::kFixed2;
  SearchMode search = SearchMode::kExhaustive;
  bool edited = false;

  // Sub-questions joined by single spaces.
  std::string Text() const;

  friend bool operator==(const PseudoDecomposition&,
                         const PseudoDecomposition&) = default;
};

inline constexpr std::size_t kDefaultTopK = 1000;
// Exhaustive subset search is used only when C(|S'|, N) stays below this.
inline constexpr std::uint64_t kExhaustiveSubsetLimit = 10'000'000;

// Number of size-n subsets of m elements, saturating at UINT64_MAX.
std::uint64_t Binomial(std::uint64_t m, std::uint64_t n);

// Best pair over S' = top-k(q) under PairObjective; equal scores resolve to
// the lexicographically smallest (id, id) pair.
PseudoDecomposition PseudoDecomposeFixed(const EmbeddedIndex& index,
                                         const Question& question,
                                         std::size_t k = kDefaultTopK);

// Size-n subset of S' maximizing the similarity-plus-diversity score.
// Exhaustive for n <= 3 within kExhaustiveSubsetLimit, greedy otherwise.
PseudoDecomposition PseudoDecomposeGeneral(const EmbeddedIndex& index,
                                           const Question& question,
                                           std::size_t n,
                                           std::size_t k = kDefaultTopK);

// Subset of S' of size <= max_n minimizing ||v_q - sum v_s|| by beam
// search. Ties prefer fewer sub-questions, then lexicographic ids.
PseudoDecomposition PseudoDecomposeVariable(const EmbeddedIndex& index,
                                            const Question& question,
                                            std::size_t max_n, std::size_t k,
                                            std::size_t beam_width);

// n distinct questions drawn uniformly without replacement, in draw order.
// The stream is derived from `seed` and the question id.
PseudoDecomposition RandomPseudoDecompose(const QuestionCorpus& corpus,
                                          const Question& question,
                                          std::size_t n, std::uint64_t seed);
PseudoDecomposition RandomPseudoDecompose(const EmbeddedIndex& index,
                                          const Question& question,
                                          std::size_t n, std::uint64_t seed);

// Draws n distinct values from [0, population) in draw order.
std::vector<std::size_t> SampleWithoutReplacement(std::size_t population,
                                                  std::size_t n, Rng& rng);

struct DatasetConfig {
  DecompositionMethod method = DecompositionMethod::kFixed2;
  std::size_t k = kDefaultTopK;
  std::size_t n = 2;
  std::size_t max_n = 3;
  std::size_t beam_width = 10;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct DatasetRecord {
  std::string question_id;
  std::string question_text;
  std::string decomposition_text;
  double objective_score = 0.0;
  std::string method;
};

struct DatasetResult {
  std::vector<PseudoDecomposition> decompositions;
  std::vector<DatasetRecord> records;  // parallel to decompositions
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;
};

// One record per question that could be decomposed, in input order for any
// worker count.
DatasetResult BuildPseudoDecompositionDataset(const QuestionCorpus& queries,
                                              const EmbeddedIndex& index,
                                              const DatasetConfig& config);

DatasetRecord ToRecord(const Question& question,
                       const PseudoDecomposition& decomposition);

// TSV: question_id, question_text, decomposition_text, objective_score,
// method. Tabs and newlines inside fields are written as spaces.
void WriteDatasetTsv(std::span<const DatasetRecord> records,
                     std::ostream& out);
std::vector<DatasetRecord> ReadDatasetTsv(std::istream& in);

std::string FormatScore(double value);
std::string SanitizeField(std::string_view field);

}  // namespace qdecomp

#endif  // QDECOMP_RETRIEVAL_H_
