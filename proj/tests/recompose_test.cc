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

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "qdecomp/error.h"
#include "qdecomp/random.h"
#include "qdecomp/recompose.h"

namespace qdecomp {
namespace {

using Paragraphs = std::vector<ParagraphLogits>;

ParagraphLogits Paragraph(std::string id, std::vector<double> logits,
                          double no_answer) {
  ParagraphLogits p;
  p.paragraph_id = std::move(id);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p.spans.push_back({"span" + std::to_string(i), logits[i]});
  }
  p.no_answer_logit = no_answer;
  return p;
}

Paragraphs RandomParagraphs(Rng& rng) {
  Paragraphs out;
  for (std::uint64_t p = 0, np = 1 + rng.UniformBelow(4); p < np; ++p) {
    std::vector<double> logits(1 + rng.UniformBelow(4));
    for (auto& l : logits) l = rng.Uniform01() * 10.0 - 5.0;
    out.push_back(Paragraph("p" + std::to_string(p), logits,
                            rng.Uniform01() * 6.0 - 3.0));
  }
  return out;
}

TEST_CASE("single span has probability one") {
  const Paragraphs one = {Paragraph("p", {-3.7}, 12.0)};
  auto probs = SpanProbabilities(one);
  REQUIRE(probs.size() == 1);
  CHECK(probs[0].probability == doctest::Approx(1.0));
  CHECK(PredictAnswer(one).span_id == "span0");
}

TEST_CASE("symmetric paragraphs split evenly") {
  const Paragraphs two = {Paragraph("a", {1.0}, 1.0), Paragraph("b", {1.0}, 1.0)};
  auto probs = SpanProbabilities(two);
  CHECK(probs[0].probability == doctest::Approx(0.5));
  CHECK(probs[1].probability == doctest::Approx(0.5));
  // Equal probabilities resolve to the smallest paragraph id.
  CHECK(PredictAnswer(two).paragraph_id == "a");
}

TEST_CASE("probabilities follow the pooled softmax") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    auto paragraphs = RandomParagraphs(rng);
    auto probs = SpanProbabilities(paragraphs);
    double z = 0.0;
    for (const auto& p : paragraphs) {
      for (const auto& s : p.spans) z += std::exp(s.logit - p.no_answer_logit);
    }
    double sum = 0.0;
    std::size_t i = 0;
    for (const auto& p : paragraphs) {
      for (const auto& s : p.spans) {
        REQUIRE(probs[i].span_id == s.span_id);
        CHECK(probs[i].probability ==
              doctest::Approx(std::exp(s.logit - p.no_answer_logit) / z));
        sum += probs[i].probability;
        ++i;
      }
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

    // Shifting one paragraph's span and no-answer logits together, or
    // every logit at once, changes nothing.
    auto shifted = paragraphs;
    const double c = rng.Uniform01() * 100.0 - 50.0;
    for (auto& s : shifted[0].spans) s.logit += c;
    shifted[0].no_answer_logit += c;
    auto after = SpanProbabilities(shifted);
    for (std::size_t k = 0; k < probs.size(); ++k) {
      CHECK(after[k].probability == doctest::Approx(probs[k].probability));
    }
    auto global = paragraphs;
    for (auto& p : global) {
      for (auto& s : p.spans) s.logit += c;
      p.no_answer_logit += c;
    }
    const auto best = PredictAnswer(paragraphs);
    const auto moved = PredictAnswer(global);
    CHECK(moved.paragraph_id == best.paragraph_id);
    CHECK(moved.span_id == best.span_id);
  }
}

TEST_CASE("three-paragraph prediction matches exhaustive softmax") {
  const Paragraphs paragraphs = {Paragraph("p0", {2.0, 0.5}, 1.5),
                                 Paragraph("p1", {1.0, 0.2}, -0.5),
                                 Paragraph("p2", {3.0}, 2.8)};
  // Adjusted logits: 0.5, -1.0, 1.5, 0.7, 0.2.
  const double z = std::exp(0.5) + std::exp(-1.0) + std::exp(1.5) +
                   std::exp(0.7) + std::exp(0.2);
  auto best = PredictAnswer(paragraphs);
  CHECK(best.paragraph_id == "p1");
  CHECK(best.span_id == "span0");
  CHECK(best.probability == doctest::Approx(std::exp(1.5) / z));
  auto ranked = RankSpans(paragraphs);
  REQUIRE(ranked.size() == 5);
  CHECK(ranked[1].paragraph_id == "p1");
  CHECK(ranked[1].span_id == "span1");
  CHECK(ranked[4].span_id == "span1");
  CHECK(ranked[4].paragraph_id == "p0");
  for (std::size_t i = 1; i < ranked.size(); ++i) {
    CHECK(ranked[i - 1].probability >= ranked[i].probability);
  }
}

TEST_CASE("ensemble averaging") {
  Rng rng(37);
  auto a = RandomParagraphs(rng);
  std::vector<Paragraphs> one = {a};
  CHECK(EnsembleAverage(one) == a);

  auto negated = a;
  for (auto& p : negated) {
    for (auto& s : p.spans) s.logit = -s.logit;
    p.no_answer_logit = -p.no_answer_logit;
  }
  auto zero = EnsembleAverage(std::vector<Paragraphs>{a, negated});
  for (const auto& p : zero) {
    CHECK(p.no_answer_logit == 0.0);
    for (const auto& s : p.spans) CHECK(s.logit == 0.0);
  }

  const Paragraphs m1 = {Paragraph("p", {1.0, 4.0}, 2.0)};
  const Paragraphs m2 = {Paragraph("p", {3.0, -1.0}, 0.5)};
  auto mean = EnsembleAverage(std::vector<Paragraphs>{m1, m2});
  CHECK(mean[0].spans[0].logit == doctest::Approx(2.0));
  CHECK(mean[0].spans[1].logit == doctest::Approx(1.5));
  CHECK(mean[0].no_answer_logit == doctest::Approx(1.25));

  const Paragraphs other = {Paragraph("q", {1.0, 4.0}, 2.0)};
  CHECK_THROWS_AS(EnsembleAverage(std::vector<Paragraphs>{m1, other}),
                  DataError);
  CHECK_THROWS_AS(EnsembleAverage(std::vector<Paragraphs>{}), DataError);
}

TEST_CASE("invalid logits are data errors") {
  CHECK_THROWS_AS(SpanProbabilities(Paragraphs{}), DataError);
  CHECK_THROWS_AS(SpanProbabilities(Paragraphs{Paragraph("p", {}, 0.0)}),
                  DataError);
  auto dup = Paragraph("p", {1.0, 2.0}, 0.0);
  dup.spans[1].span_id = dup.spans[0].span_id;
  CHECK_THROWS_AS(dup.Validate(), DataError);
  auto inf = Paragraph("p", {INFINITY}, 0.0);
  CHECK_THROWS_AS(inf.Validate(), DataError);
}

TEST_CASE("logit files round trip") {
  Rng rng(41);
  auto paragraphs = RandomParagraphs(rng);
  std::stringstream buf;
  WriteParagraphLogits(paragraphs, buf);
  CHECK(ReadParagraphLogits(buf) == paragraphs);
  std::istringstream bad("{\"paragraph_id\": \"p\"}\n");
  CHECK_THROWS_WITH_AS(ReadParagraphLogits(bad), doctest::Contains("line 1"),
                       DataError);
}

}  // namespace
}  // namespace qdecomp
