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

#include "qdecomp/noising.h"

#include <algorithm>
#include <numeric>

#include "qdecomp/error.h"

namespace qdecomp {

void NoiseConfig::Validate() const {
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(mask_prob)) throw UsageError("mask probability outside [0, 1]");
  if (!in_unit(drop_prob)) throw UsageError("drop probability outside [0, 1]");
}

std::vector<std::size_t> LocalShufflePermutation(std::size_t length,
                                                 std::size_t window,
                                                 Rng& rng) {
  std::vector<std::size_t> order(length);
  std::iota(order.begin(), order.end(), 0);
  if (window == 0 || length < 2) return order;
  std::vector<double> keys(length);
  for (std::size_t i = 0; i < length; ++i) {
    keys[i] = static_cast<double>(i) +
              rng.Uniform01() * static_cast<double>(window);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return keys[a] < keys[b];
                   });
  return order;
}

std::vector<std::string> NoiseTokens(std::span<const std::string> tokens,
                                     const NoiseConfig& config, Rng& rng) {
  config.Validate();
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (std::size_t src :
       LocalShufflePermutation(tokens.size(), config.shuffle_window, rng)) {
    out.push_back(tokens[src]);
  }
  out = WordDropout(out, config.drop_prob, rng);
  for (auto& tok : out) {
    if (rng.Bernoulli(config.mask_prob)) tok = config.mask_token;
  }
  return out;
}

std::vector<std::string> WordDropout(std::span<const std::string> tokens,
                                     double p, Rng& rng) {
  if (p < 0.0 || p > 1.0) throw UsageError("dropout probability outside [0, 1]");
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) {
    if (!rng.Bernoulli(p)) out.push_back(tok);
  }
  return out;
}

}  // namespace qdecomp
