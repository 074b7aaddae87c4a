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

#ifndef QDECOMP_NOISING_H_
#define QDECOMP_NOISING_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qdecomp/random.h"

namespace qdecomp {

// Token corruption for the denoising objective. Defaults are this
// toolkit's choice.
struct NoiseConfig {
  double mask_prob = 0.15;
  double drop_prob = 0.1;
  std::size_t shuffle_window = 3;
  std::string mask_token = "<mask>";
  std::uint64_t seed = 0;

  // Throws UsageError when a probability is outside [0, 1].
  void Validate() const;
};

// Local shuffle, then drop, then mask. The shuffle sorts positions by
// i + u_i with u_i ~ U[0, k), which moves no token more than k places.
std::vector<std::string> NoiseTokens(std::span<const std::string> tokens,
                                     const NoiseConfig& config, Rng& rng);

// Only the shuffle step, exposed for the displacement bound. Returns the
// source position of every output token.
std::vector<std::size_t> LocalShufflePermutation(std::size_t length,
                                                 std::size_t window, Rng& rng);

// Removes each token independently with probability p, keeping order.
std::vector<std::string> WordDropout(std::span<const std::string> tokens,
                                     double p, Rng& rng);

}  // namespace qdecomp

#endif  // QDECOMP_NOISING_H_
