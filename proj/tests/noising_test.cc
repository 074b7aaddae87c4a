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
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "qdecomp/error.h"
#include "qdecomp/noising.h"
#include "qdecomp/random.h"

namespace qdecomp {
namespace {

using Strings = std::vector<std::string>;

Strings Numbered(std::size_t n) {
  Strings out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("t" + std::to_string(i));
  return out;
}

NoiseConfig Quiet() {
  NoiseConfig c;
  c.mask_prob = 0.0;
  c.drop_prob = 0.0;
  c.shuffle_window = 0;
  return c;
}

TEST_CASE("zero noise is the identity") {
  Rng rng(1);
  const auto tokens = Numbered(15);
  CHECK(NoiseTokens(tokens, Quiet(), rng) == tokens);
  auto one = Quiet();
  one.shuffle_window = 1;
  CHECK(NoiseTokens(tokens, one, rng) == tokens);
  CHECK(NoiseTokens(Strings{}, NoiseConfig{}, rng).empty());
}

TEST_CASE("total drop and total mask") {
  Rng rng(2);
  const auto tokens = Numbered(10);
  auto drop = Quiet();
  drop.drop_prob = 1.0;
  CHECK(NoiseTokens(tokens, drop, rng).empty());
  auto mask = Quiet();
  mask.mask_prob = 1.0;
  mask.mask_token = "[M]";
  CHECK(NoiseTokens(tokens, mask, rng) == Strings(10, "[M]"));
  CHECK(WordDropout(tokens, 0.0, rng) == tokens);
  CHECK(WordDropout(tokens, 1.0, rng).empty());
}

TEST_CASE("probabilities are validated") {
  Rng rng(3);
  auto bad = Quiet();
  bad.mask_prob = 1.5;
  CHECK_THROWS_AS(bad.Validate(), UsageError);
  bad.mask_prob = 0.0;
  bad.drop_prob = -0.1;
  CHECK_THROWS_AS(NoiseTokens(Numbered(3), bad, rng), UsageError);
  CHECK_THROWS_AS(WordDropout(Numbered(3), 2.0, rng), UsageError);
}

TEST_CASE("mean survivors under dropout") {
  const auto tokens = Numbered(20);
  auto config = Quiet();
  config.drop_prob = 0.15;
  const int trials = 10000;
  double total = 0.0;
  for (int t = 0; t < trials; ++t) {
    Rng rng = Rng::Substream(9, "noise-test", t);
    total += static_cast<double>(NoiseTokens(tokens, config, rng).size());
  }
  const double sigma = std::sqrt(20 * 0.15 * 0.85 / trials);
  CHECK(std::abs(total / trials - 17.0) <= 3 * sigma);

  double removed = 0.0;
  Rng rng(10);
  for (int t = 0; t < trials; ++t) {
    removed += 20.0 - static_cast<double>(WordDropout(tokens, 0.05, rng).size());
  }
  const double sigma_removed = std::sqrt(20 * 0.05 * 0.95 / trials);
  CHECK(std::abs(removed / trials - 1.0) <= 3 * sigma_removed);
}

TEST_CASE("dropout keeps order") {
  Rng rng(11);
  const auto tokens = Numbered(30);
  for (int t = 0; t < 100; ++t) {
    auto kept = WordDropout(tokens, 0.4, rng);
    std::size_t pos = 0;
    for (const auto& k : kept) {
      while (pos < tokens.size() && tokens[pos] != k) ++pos;
      REQUIRE(pos < tokens.size());
      ++pos;
    }
  }
}

TEST_CASE("local shuffle is a permutation with bounded displacement") {
  Rng rng(12);
  for (int t = 0; t < 500; ++t) {
    const std::size_t len = rng.UniformBelow(25);
    const std::size_t k = rng.UniformBelow(6);
    auto perm = LocalShufflePermutation(len, k, rng);
    REQUIRE(perm.size() == len);
    std::set<std::size_t> seen(perm.begin(), perm.end());
    CHECK(seen.size() == len);
    for (std::size_t i = 0; i < len; ++i) {
      REQUIRE(perm[i] < len);
      const std::size_t moved = perm[i] > i ? perm[i] - i : i - perm[i];
      CHECK(moved <= k);
    }
  }
}

TEST_CASE("shuffle output is a rearrangement of the input") {
  Rng rng(13);
  auto config = Quiet();
  config.shuffle_window = 4;
  const auto tokens = Numbered(18);
  for (int t = 0; t < 100; ++t) {
    auto out = NoiseTokens(tokens, config, rng);
    CHECK(std::multiset<std::string>(out.begin(), out.end()) ==
          std::multiset<std::string>(tokens.begin(), tokens.end()));
  }
}

TEST_CASE("same stream gives the same noise") {
  const auto tokens = Numbered(20);
  NoiseConfig config;
  Rng a = Rng::Substream(4, "noise", 7);
  Rng b = Rng::Substream(4, "noise", 7);
  CHECK(NoiseTokens(tokens, config, a) == NoiseTokens(tokens, config, b));
}

}  // namespace
}  // namespace qdecomp
