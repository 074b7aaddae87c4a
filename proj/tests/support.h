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

#ifndef QDECOMP_TESTS_SUPPORT_H_
#define QDECOMP_TESTS_SUPPORT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "qdecomp/classifier.h"
#include "qdecomp/corpus.h"
#include "qdecomp/embeddings.h"
#include "qdecomp/random.h"
#include "qdecomp/retrieval.h"

namespace qdecomp::testing {

using FloatRows = std::vector<std::vector<float>>;

// Fresh empty directory under the system temp dir.
std::filesystem::path TempDir(const std::string& tag);

double Gaussian(Rng& rng);

// Index whose row i is the single word "row<i>" with vector rows[i]; query
// j is the single word "query<j>". Ids default to s000, s001, ...
struct ToyWorld {
  std::shared_ptr<const VectorTable> table;
  EmbeddedIndex index;
  std::vector<Question> queries;
  FloatRows rows;
  FloatRows query_vectors;
  std::vector<std::string> ids;
};

ToyWorld MakeToyWorld(const FloatRows& rows, const FloatRows& queries,
                      std::vector<std::string> ids = {});

FloatRows RandomGaussianRows(std::size_t count, std::size_t dim, Rng& rng);
FloatRows RandomIntegerRows(std::size_t count, std::size_t dim, int lo, int hi,
                            Rng& rng);

// --- Independent oracles (plain loops, no library search code) ---

double OracleCosine(const std::vector<float>& a, const std::vector<float>& b);

// Best pair by v̂q·(v̂a + v̂b) − v̂a·v̂b over all pairs of `candidates`
// (indices into world.rows). Ties go to the lexicographically smaller
// sorted id pair. Returns sorted ids.
std::vector<std::string> OracleBestPair(const ToyWorld& world,
                                        std::size_t query,
                                        const std::vector<std::size_t>& candidates);

// Similarity-plus-diversity with unordered-pair diversity, exhaustive over size-n subsets.
std::vector<std::string> OracleBestSubset(
    const ToyWorld& world, std::size_t query,
    const std::vector<std::size_t>& candidates, std::size_t n);

// Minimum of ‖q − Σ v‖² over all subsets of size 1..max_n; ties go to the
// smaller subset, then to the smaller sorted id list.
std::pair<std::vector<std::string>, double> OracleBestResidual(
    const ToyWorld& world, std::size_t query,
    const std::vector<std::size_t>& candidates, std::size_t max_n);

// Rows of the world ordered by descending cosine to the query, ties by id.
std::vector<std::size_t> OracleRanking(const ToyWorld& world,
                                       std::size_t query);

// Corpus BLEU computed from first principles: clipped n-gram counts via
// sorted n-gram lists, brevity penalty from total lengths.
double OracleBleu(const std::vector<std::vector<std::string>>& hyps,
                  const std::vector<std::vector<std::string>>& refs,
                  std::size_t max_n = 4);

// Levenshtein distance by memoized recursion over suffixes.
std::size_t OracleEditDistance(const std::vector<std::string>& a,
                               const std::vector<std::string>& b);

// --- Synthetic language fixtures ---

// Pronounceable, unique lowercase pseudo-word for every n.
std::string PseudoWord(std::size_t n);

struct SyntheticWorld {
  QuestionCorpus singles;
  std::string vectors_text;  // .vec format with header
  std::shared_ptr<const VectorTable> table;
};

// Single-hop questions over a Zipfian content vocabulary with word vectors
// that share a common component, heavier on function words.
SyntheticWorld MakeSyntheticWorld(std::size_t questions, std::size_t dim,
                                  std::uint64_t seed);

// Text of one synthetic single-hop question.
std::string SyntheticQuestion(Rng& rng, std::size_t content_vocab);

// Two-class fixture: each label draws content words from its own pool.
// With a shared vocabulary, each word but one is drawn from a common pool
// with probability `shared_rate`, and `shared_only_every` > 0 makes every
// such example (1-based) use shared words only, so at most
// 1 - 1 / (2 * shared_only_every) of the examples are separable.
struct ClassFixture {
  std::vector<LabeledCorpus> train;
  std::vector<LabeledCorpus> heldout;
};
ClassFixture MakeClassFixture(std::size_t per_label_train,
                              std::size_t per_label_heldout,
                              bool shared_vocabulary,
                              std::size_t shared_only_every,
                              std::uint64_t seed, double shared_rate = 0.3);

}  // namespace qdecomp::testing

#endif  // QDECOMP_TESTS_SUPPORT_H_
