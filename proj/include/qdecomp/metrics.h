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

#ifndef QDECOMP_METRICS_H_
#define QDECOMP_METRICS_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qdecomp/corpus.h"

namespace qdecomp {

using TokenList = std::vector<std::string>;

// Corpus-level BLEU: geometric mean of clipped n-gram precisions for
// n = 1..max_n times the brevity penalty exp(min(0, 1 - r/c)). Unsmoothed,
// so any zero precision gives 0. An order for which no hypothesis has
// n-grams is left out of the product (it contributes log 1), which keeps
// bleu(x, x) = 1 for short sentences.
double Bleu(std::span<const TokenList> hypotheses,
            std::span<const TokenList> references, std::size_t max_n = 4);

// Splits a tokenized decomposition into sub-questions, each ending with a
// "?" token. Tokens after the last "?" form a final segment.
std::vector<TokenList> SplitSubQuestionTokens(std::span<const std::string> d);

// Exactly two "?" tokens, no sub-question whose token set covers every
// token of the question, and no sub-question longer than the question.
bool IsGoodDecomposition(const Question& question, std::string_view d);

struct RoundTripRecord {
  // Throws DataError if any text is empty.
  RoundTripRecord(Question q, std::string d_hat, std::string q_hat);

  Question q;
  std::string d_hat;  // generated decomposition
  std::string q_hat;  // question regenerated from d_hat
};

// BLEU(q_hat vs q) scaled by the fraction of good decompositions.
double ScaledRoundTripBleu(std::span<const RoundTripRecord> records);

struct RoundTripReport {
  std::size_t count = 0;
  double bleu = 0.0;
  double good_fraction = 0.0;
  double scaled = 0.0;
  double edit_distance_mean = 0.0;
  double length_ratio_mean = 0.0;
};

RoundTripReport EvaluateRoundTrip(std::span<const RoundTripRecord> records);

// Per-epoch trace of the scaled round-trip metric.
class StoppingState {
 public:
  // Throws UsageError unless epochs strictly increase.
  void Record(int epoch, double value);
  const std::vector<std::pair<int, double>>& history() const {
    return history_;
  }

 private:
  std::vector<std::pair<int, double>> history_;
};

inline constexpr std::size_t kStoppingPatience = 3;

// True once the last kStoppingPatience values all stay at or below the best
// value seen before them.
bool StoppingDecision(const StoppingState& state);
bool StoppingDecision(std::span<const double> values);

// Levenshtein distance over tokens with unit costs.
std::size_t TokenEditDistance(std::span<const std::string> a,
                              std::span<const std::string> b);
std::size_t EditDistance(const Question& question, std::string_view d);

// Token count of d over token count of the question; throws DataError for
// an empty question.
double LengthRatio(const Question& question, std::string_view d);

struct DecompositionReport {
  std::size_t count = 0;
  double edit_distance_mean = 0.0;
  double edit_distance_median = 0.0;
  double edit_distance_variance = 0.0;
  double length_ratio_mean = 0.0;
  double length_ratio_variance = 0.0;
  double good_fraction = 0.0;
};

DecompositionReport MakeDecompositionReport(
    std::span<const std::pair<Question, std::string>> pairs);

}  // namespace qdecomp

#endif  // QDECOMP_METRICS_H_
