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

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace modalign {

// CI-facing property suites, also the substance of the acceptance checks.
// Tolerances are fixed here, not chosen by callers.

inline constexpr double kCtcOracleTol = 1e-9;  // log-domain loss and grad
inline constexpr double kGradTol = 1e-4;       // max relative FD error
inline constexpr double kFdEps = 1e-5;

// Random tiny CTC instances (T <= 6, L <= 3, V <= 3, every fourth one with
// quantized logits to force score ties), each checked against enumeration:
// loss and gradient within kCtcOracleTol, forced alignment and Viterbi
// score exactly equal.
struct CtcOracleReport {
  int instances = 0;
  int loss_failures = 0;
  int grad_failures = 0;
  int align_failures = 0;
  double worst_loss_err = 0.0;
  double worst_grad_err = 0.0;
  double wall_ms = 0.0;
  std::vector<std::string> failures;

  bool loss_ok() const { return instances > 0 && loss_failures == 0 && grad_failures == 0; }
  bool align_ok() const { return instances > 0 && align_failures == 0; }
  bool ok() const { return loss_ok() && align_ok(); }
};

CtcOracleReport run_ctc_oracle_suite(int instances, uint64_t seed, std::ostream* log);

// Finite-difference sweep (eps = kFdEps, bound kGradTol): one check per
// tensor op input, the CTC loss through a live softmax, and the full joint
// loss on a d_model=8 two-layer model, differenced over every parameter.
struct GradientReport {
  int checks = 0;
  int failures = 0;
  double worst = 0.0;
  double wall_ms = 0.0;
  std::vector<std::string> lines;  // "check:<name> err:<e>" per check

  bool ok() const { return checks > 0 && failures == 0; }
};

GradientReport run_gradient_suite(uint64_t seed, std::ostream* log);

}  // namespace modalign
