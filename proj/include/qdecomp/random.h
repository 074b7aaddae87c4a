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

#ifndef QDECOMP_RANDOM_H_
#define QDECOMP_RANDOM_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace qdecomp {

// Seeded random stream with platform-independent draws. The standard
// distributions are implementation-defined, so every draw used by the
// toolkit goes through the helpers here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream for one stage (and optionally one record) derived
  // from the global seed. Reruns of a single stage reproduce its draws.
  static Rng Substream(std::uint64_t seed, std::string_view stage,
                       std::uint64_t index = 0);

  std::uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double Uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t UniformBelow(std::uint64_t n);

  // True with probability p; p <= 0 never fires and p >= 1 always does.
  bool Bernoulli(double p) { return Uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t SplitMix64(std::uint64_t x);
std::uint64_t Fnv1a64(std::string_view text);

}  // namespace qdecomp

#endif  // QDECOMP_RANDOM_H_
