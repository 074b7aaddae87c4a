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

#ifndef QDECOMP_RECOMPOSE_H_
#define QDECOMP_RECOMPOSE_H_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace qdecomp {

struct SpanLogit {
  std::string span_id;
  double logit = 0.0;

  friend bool operator==(const SpanLogit&, const SpanLogit&) = default;
};

// Span logits l(s_p) of one paragraph plus its "no answer" logit n(p).
struct ParagraphLogits {
  std::string paragraph_id;
  std::vector<SpanLogit> spans;
  double no_answer_logit = 0.0;

  // Throws DataError on non-finite logits or repeated span ids.
  void Validate() const;

  friend bool operator==(const ParagraphLogits&,
                         const ParagraphLogits&) = default;
};

struct SpanProbability {
  std::string paragraph_id;
  std::string span_id;
  double probability = 0.0;
};

// One softmax over l(s_p) - n(p) pooled across all paragraphs. Output
// follows input order. Throws DataError when there are no spans.
std::vector<SpanProbability> SpanProbabilities(
    std::span<const ParagraphLogits> paragraphs);

// Element-wise mean of span and no-answer logits across models. All sets
// must share paragraph and span ids in the same order.
std::vector<ParagraphLogits> EnsembleAverage(
    std::span<const std::vector<ParagraphLogits>> logit_sets);

// Span with the highest probability; ties go to the smallest
// (paragraph_id, span_id).
SpanProbability PredictAnswer(std::span<const ParagraphLogits> paragraphs);

// Spans sorted by probability, best first, ties as in PredictAnswer.
std::vector<SpanProbability> RankSpans(
    std::span<const ParagraphLogits> paragraphs);

// JSONL: {"paragraph_id", "no_answer_logit", "spans": [{"span_id",
// "logit"}]} per line.
std::vector<ParagraphLogits> ReadParagraphLogits(std::istream& in);
void WriteParagraphLogits(std::span<const ParagraphLogits> paragraphs,
                          std::ostream& out);

}  // namespace qdecomp

#endif  // QDECOMP_RECOMPOSE_H_
