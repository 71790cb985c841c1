// Copyright 2026 the modalign authors
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

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "modalign/common.hpp"

namespace modalign {

// Seeded random stream. The engine (mt19937_64) is bit-exact per the
// standard; the distribution transforms are written out here because the
// std:: distributions are implementation-defined and corpora, fixtures
// and training trajectories must reproduce byte-for-byte from a seed.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53 bits of entropy.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller, second value cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Uniform integer in [0, n). n must be positive; n is tiny relative to
  // 2^64 everywhere in this codebase, so modulo bias is negligible.
  int uniform_int(int n) {
    if (n <= 0) throw ContractError("Rng::uniform_int: n must be positive");
    return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Disjoint child seed for (stream tag, index) under a master seed.
  static uint64_t derive(uint64_t master, std::string_view tag, uint64_t index = 0) {
    uint64_t h = fnv1a64(&master, sizeof(master));
    h = fnv1a64(tag, h);
    h = fnv1a64(&index, sizeof(index), h);
    return h;
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace modalign
