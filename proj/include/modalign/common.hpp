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
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace modalign {

// Contract violation (bad argument, misuse of an API).
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor shape disagreement between operands.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Out-of-range id (token, class index).
struct IndexError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Alignment machinery failure (infeasible lattice, segment mismatch).
struct AlignmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File / serialization failure.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training aborted on a non-finite loss.
struct NanAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) with max-shift; tolerates -inf operands.
inline double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = a > b ? a : b;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline double log_sum_exp(double a, double b, double c) {
  return log_sum_exp(log_sum_exp(a, b), c);
}

inline std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// FNV-1a, used for config hashes and derived seeds.
inline uint64_t fnv1a64(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64(s.data(), s.size(), h);
}

}  // namespace modalign
