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

#include <string>
#include <utility>
#include <vector>

#include "modalign/tensor.hpp"

namespace modalign {

struct AdamConfig {
  double lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int warmup_steps = 0;     // linear lr ramp over this many steps; 0 = off
  int decay_steps = 0;      // cosine decay of lr to zero by this step; 0 = off
  double clip_norm = 0.0;   // global gradient-norm clip; 0 = off
};

// Standard Adam with bias correction over a named parameter registry, plus
// optional linear lr warmup, cosine lr decay, and global-norm gradient
// clipping (all three matter for single-utterance updates, where gradient
// norms spike and the loss plateau is noisy).
// Deterministic: no randomness, parameters updated in registry order.
class Adam {
 public:
  Adam(const AdamConfig& cfg, const std::vector<std::pair<std::string, Tensor>>& params);

  // Applies one update from the parameters' accumulated gradients.
  void step();

  int64_t step_count() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  int64_t t_ = 0;
};

}  // namespace modalign
