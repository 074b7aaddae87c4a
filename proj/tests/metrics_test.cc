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

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "qdecomp/corpus.h"
#include "qdecomp/error.h"
#include "qdecomp/metrics.h"
#include "qdecomp/random.h"
#include "support.h"

namespace qdecomp {
namespace {

using Strings = std::vector<std::string>;

const char kOlderQuestion[] =
    "Who is older, Annie Morton or Terry Richardson?";
const char kOlderSubQuestions[] =
    "Who is Annie Morton? When was Terry Richardson born?";

TokenList RandomTokens(Rng& rng, std::size_t min_len, std::size_t max_len,
                       std::size_t vocab) {
  TokenList out(min_len + rng.UniformBelow(max_len - min_len + 1));
  for (auto& t : out) t = "w" + std::to_string(rng.UniformBelow(vocab));
  return out;
}

TEST_CASE("BLEU reference cases") {
  const std::vector<TokenList> same = {{"a", "b", "c", "d", "e"}};
  CHECK(Bleu(same, same) == doctest::Approx(1.0));
  const std::vector<TokenList> other = {{"x", "y", "z", "w"}};
  CHECK(Bleu(other, same) == 0.0);

  // Precisions 4/5, 3/4, 2/3, 1/2 and no brevity penalty.
  const std::vector<TokenList> hyp = {{"a", "b", "c", "d", "e"}};
  const std::vector<TokenList> ref = {{"a", "b", "c", "d"}};
  const double by_hand = std::pow(0.8 * 0.75 * (2.0 / 3.0) * 0.5, 0.25);
  CHECK(Bleu(hyp, ref) == doctest::Approx(by_hand).epsilon(1e-12));
  CHECK(Bleu(hyp, ref) == doctest::Approx(testing::OracleBleu(hyp, ref)));

  // The short direction gets the brevity penalty exp(1 - 5/4).
  const double reversed = std::pow(1.0 * 1.0 * 1.0 * 1.0, 0.25) *
                          std::exp(1.0 - 5.0 / 4.0);
  CHECK(Bleu(ref, hyp) == doctest::Approx(reversed));
}

TEST_CASE("BLEU on short identical sentences is one") {
  const std::vector<TokenList> two = {{"hi", "there"}};
  CHECK(Bleu(two, two) == doctest::Approx(1.0));
}

TEST_CASE("BLEU argument errors") {
  const std::vector<TokenList> one = {{"a"}};
  const std::vector<TokenList> none;
  CHECK_THROWS_AS(Bleu(none, none), DataError);
  CHECK_THROWS_AS(Bleu(one, none), DataError);
}

TEST_CASE("BLEU agrees with the oracle on random corpora") {
  Rng rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<TokenList> hyps, refs;
    const std::size_t sentences = 1 + rng.UniformBelow(4);
    for (std::size_t s = 0; s < sentences; ++s) {
      hyps.push_back(RandomTokens(rng, 4, 12, 5));
      refs.push_back(RandomTokens(rng, 4, 12, 5));
    }
    const double got = Bleu(hyps, refs);
    CHECK(got >= 0.0);
    CHECK(got <= 1.0 + 1e-12);
    CHECK(got == doctest::Approx(testing::OracleBleu(hyps, refs))
                     .epsilon(1e-9));
  }
}

TEST_CASE("sub-question token split") {
  auto parts = SplitSubQuestionTokens(Tokenize("who is a ? where is b ? x"));
  REQUIRE(parts.size() == 3);
  CHECK(parts[0] == TokenList{"who", "is", "a", "?"});
  CHECK(parts[2] == TokenList{"x"});
  CHECK(SplitSubQuestionTokens(TokenList{}).empty());
}

TEST_CASE("good decomposition rules") {
  Question q("q", kOlderQuestion);
  CHECK(IsGoodDecomposition(q, kOlderSubQuestions));
  CHECK_FALSE(IsGoodDecomposition(q, "Who is Annie Morton?"));
  CHECK_FALSE(IsGoodDecomposition(
      q, std::string(kOlderQuestion) + " Who is she?"));
  CHECK_FALSE(IsGoodDecomposition(q, "a? b? c?"));
  Question tiny("t", "Who won?");
  CHECK_FALSE(IsGoodDecomposition(tiny, "Who won the cup? Where was it?"));
}

TEST_CASE("edit distance matches the recursive oracle") {
  Question q("q", kOlderQuestion);
  const auto d = Tokenize(kOlderSubQuestions);
  CHECK(EditDistance(q, kOlderSubQuestions) ==
        testing::OracleEditDistance(q.tokens(), d));
  CHECK(EditDistance(q, kOlderQuestion) == 0);

  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    auto a = RandomTokens(rng, 0, 9, 4);
    auto b = RandomTokens(rng, 0, 9, 4);
    auto c = RandomTokens(rng, 0, 9, 4);
    const auto ab = TokenEditDistance(a, b);
    CHECK(ab == testing::OracleEditDistance(a, b));
    CHECK(ab == TokenEditDistance(b, a));
    CHECK(ab <= TokenEditDistance(a, c) + TokenEditDistance(c, b));
    CHECK(ab >= (a.size() > b.size() ? a.size() - b.size()
                                     : b.size() - a.size()));
    CHECK(TokenEditDistance(a, a) == 0);
  }
}

TEST_CASE("length ratio") {
  Question q("q", kOlderQuestion);
  CHECK(LengthRatio(q, "a b c d e f g h i j") == doctest::Approx(1.0));
  // 11 decomposition tokens over 10 question tokens.
  CHECK(LengthRatio(q, kOlderSubQuestions) == doctest::Approx(1.1));
  CHECK_THROWS_AS(LengthRatio(Question("e", ""), "x"), DataError);
}

TEST_CASE("decomposition report aggregates") {
  using Pair = std::pair<Question, std::string>;
  const std::vector<Pair> single = {{Question("q", kOlderQuestion),
                                     kOlderSubQuestions}};
  auto one = MakeDecompositionReport(single);
  CHECK(one.count == 1);
  CHECK(one.edit_distance_mean ==
        doctest::Approx(static_cast<double>(
            EditDistance(single[0].first, single[0].second))));
  CHECK(one.length_ratio_mean == doctest::Approx(1.1));
  CHECK(one.good_fraction == 1.0);
  CHECK(one.edit_distance_variance == 0.0);

  const std::vector<Pair> copies(4, single[0]);
  auto same = MakeDecompositionReport(copies);
  CHECK(same.edit_distance_variance == 0.0);
  CHECK(same.length_ratio_variance == 0.0);

  const std::vector<Pair> three = {
      {Question("a", "who is x ?"), "who is x ?"},
      {Question("b", "who is y ?"), "who ? is y ?"},
      {Question("c", "one two three four"), "five"}};
  std::vector<double> edits, ratios;
  for (const auto& [q, d] : three) {
    edits.push_back(static_cast<double>(
        testing::OracleEditDistance(q.tokens(), Tokenize(d))));
    ratios.push_back(static_cast<double>(Tokenize(d).size()) /
                     static_cast<double>(q.tokens().size()));
  }
  auto report = MakeDecompositionReport(three);
  const double edit_mean = (edits[0] + edits[1] + edits[2]) / 3.0;
  double edit_var = 0.0;
  for (double e : edits) edit_var += (e - edit_mean) * (e - edit_mean) / 3.0;
  CHECK(report.edit_distance_mean == doctest::Approx(edit_mean));
  CHECK(report.edit_distance_variance == doctest::Approx(edit_var));
  CHECK(report.edit_distance_median == edits[1]);
  CHECK(report.length_ratio_mean ==
        doctest::Approx((ratios[0] + ratios[1] + ratios[2]) / 3.0));
  CHECK(report.good_fraction == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(MakeDecompositionReport(std::vector<Pair>{}), DataError);
}

TEST_CASE("scaled round-trip BLEU") {
  Question q("q", kOlderQuestion);
  const std::vector<RoundTripRecord> perfect_good = {
      {q, kOlderSubQuestions, kOlderQuestion}};
  CHECK(ScaledRoundTripBleu(perfect_good) == doctest::Approx(1.0));
  const std::vector<RoundTripRecord> perfect_bad = {
      {q, "Who is Annie Morton?", kOlderQuestion}};
  CHECK(ScaledRoundTripBleu(perfect_bad) == 0.0);

  Question q2("q2", "Where was the first film of the director shown?");
  const std::vector<RoundTripRecord> mixed = {
      {q, kOlderSubQuestions, "Who is older, Annie or Terry?"},
      {q, "one question?", kOlderQuestion},
      {q2, "Who directed it? Where was it shown?",
       "Where was the film shown first?"},
      {q2, "no marks at all", "Where was the first film shown?"}};
  std::vector<TokenList> hyps, refs;
  for (const auto& r : mixed) {
    hyps.push_back(Tokenize(r.q_hat));
    refs.push_back(r.q.tokens());
  }
  const double bleu = testing::OracleBleu(hyps, refs);
  auto report = EvaluateRoundTrip(mixed);
  CHECK(report.good_fraction == doctest::Approx(0.5));
  CHECK(report.bleu == doctest::Approx(bleu));
  CHECK(report.scaled == doctest::Approx(bleu * 0.5));
  CHECK_THROWS_AS(RoundTripRecord(q, "", "x"), DataError);
}

TEST_CASE("stopping decision") {
  CHECK_FALSE(StoppingDecision(std::vector<double>{1, 2, 3, 4, 5, 6}));
  CHECK(StoppingDecision(std::vector<double>{5, 4, 4, 3}));
  CHECK_FALSE(StoppingDecision(std::vector<double>{5, 4, 6, 3, 3}));
  CHECK_FALSE(StoppingDecision(std::vector<double>{5, 4, 4}));

  StoppingState state;
  const std::vector<double> values = {0.1, 0.3, 0.2, 0.3, 0.25};
  for (std::size_t i = 0; i < values.size(); ++i) {
    state.Record(static_cast<int>(i), values[i]);
  }
  CHECK(StoppingDecision(state));
  CHECK_THROWS_AS(state.Record(2, 0.4), UsageError);

  // Strictly increasing sequences never stop.
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> up;
    double v = 0.0;
    for (std::uint64_t i = 0, n = rng.UniformBelow(12); i < n; ++i) {
      v += 0.01 + rng.Uniform01();
      up.push_back(v);
    }
    CHECK_FALSE(StoppingDecision(up));
  }
}

}  // namespace
}  // namespace qdecomp
