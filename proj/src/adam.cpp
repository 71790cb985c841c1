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

#include "modalign/adam.hpp"

#include <algorithm>
#include <cmath>

namespace modalign {

Adam::Adam(const AdamConfig& cfg, const std::vector<std::pair<std::string, Tensor>>& params)
    : cfg_(cfg) {
  if (cfg_.lr <= 0.0) throw ContractError("Adam: learning rate must be positive");
  for (const auto& [name, p] : params) {
    (void)name;
    params_.push_back(p);
    m_.emplace_back(static_cast<size_t>(p.size()), 0.0);
    v_.emplace_back(static_cast<size_t>(p.size()), 0.0);
  }
}

void Adam::step() {
  ++t_;
  double scale = 1.0;
  if (cfg_.clip_norm > 0.0) {
    double norm2 = 0.0;
    for (const Tensor& p : params_)
      for (double g : p.grad()) norm2 += g * g;
    const double norm = std::sqrt(norm2);
    if (norm > cfg_.clip_norm) scale = cfg_.clip_norm / norm;
  }
  double lr = cfg_.lr;
  if (cfg_.warmup_steps > 0 && t_ < cfg_.warmup_steps) {
    lr *= static_cast<double>(t_) / cfg_.warmup_steps;
  } else if (cfg_.decay_steps > cfg_.warmup_steps) {
    const double span = static_cast<double>(cfg_.decay_steps - cfg_.warmup_steps);
    const double prog =
        std::min(1.0, static_cast<double>(t_ - cfg_.warmup_steps) / span);
    lr *= 0.5 * (1.0 + std::cos(3.14159265358979323846 * prog));
  }
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = params_[k];
    const std::vector<double>& g = p.grad();
    double* pv = p.data();
    auto& m = m_[k];
    auto& v = v_[k];
    for (size_t i = 0; i < g.size(); ++i) {
      const double gi = g[i] * scale;
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      pv[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace modalign
