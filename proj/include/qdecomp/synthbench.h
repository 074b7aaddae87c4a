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

#ifndef QDECOMP_SYNTHBENCH_H_
#define QDECOMP_SYNTHBENCH_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qdecomp/corpus.h"
#include "qdecomp/retrieval.h"

namespace qdecomp {

// A multi-hop question stitched together from single-hop questions.
struct SyntheticComposite {
  Question composite;
  std::vector<std::string> gold_sub_ids;  // in composition order
};

// Drops the trailing '?' from every question but the last and joins them
// with " and ". The result ends in exactly one '?'.
std::string ComposeQuestions(std::span<const std::string> texts);

// `count` composites of n distinct questions each, sampled without
// replacement per composite from a seeded stream.
std::vector<SyntheticComposite> BuildSyntheticCompositional(
    const QuestionCorpus& singles, std::size_t n, std::size_t count,
    std::uint64_t seed);

enum class RankObjective {
  kSimilarityDiversity,  // higher is better
  kEuclidean,            // lower is better
};

std::string_view ObjectiveName(RankObjective objective);
RankObjective ParseObjective(std::string_view name);

// 1 + the number of size-n subsets of S' = top-k(composite) that score
// strictly better than the gold subset. A gold subset that is not entirely
// inside S' gets C(|S'|, n) + 1.
std::uint64_t DecompositionRank(RankObjective objective,
                                const Question& composite,
                                std::span<const std::string> gold_sub_ids,
                                const EmbeddedIndex& index, std::size_t k);

double MeanReciprocalRank(std::span<const std::uint64_t> ranks);

struct MrrResult {
  double mrr = 0.0;
  std::vector<std::uint64_t> ranks;  // benchmark order
};

MrrResult MrrEval(RankObjective objective,
                  std::span<const SyntheticComposite> benchmark,
                  const EmbeddedIndex& index, std::size_t k,
                  std::size_t workers = 1);

}  // namespace qdecomp

#endif  // QDECOMP_SYNTHBENCH_H_
