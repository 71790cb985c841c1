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

#include "modalign/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "modalign/common.hpp"
#include "modalign/rng.hpp"
#include "modalign/vocab.hpp"

namespace modalign {

namespace {

// Visits every labelling in {0..classes-1}^T.
template <typename Fn>
void for_each_labelling(int frames, int classes, Fn&& fn) {
  std::vector<int> labels(static_cast<size_t>(frames), 0);
  while (true) {
    fn(labels);
    int pos = frames - 1;
    while (pos >= 0 && labels[static_cast<size_t>(pos)] == classes - 1) {
      labels[static_cast<size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) return;
    ++labels[static_cast<size_t>(pos)];
  }
}

double path_score(const Tensor& log_probs, const std::vector<int>& labels) {
  const int classes = log_probs.cols();
  const double* lp = log_probs.data();
  double score = 0.0;
  for (size_t t = 0; t < labels.size(); ++t)
    score += lp[t * static_cast<size_t>(classes) + static_cast<size_t>(labels[t])];
  return score;
}

// All monotone walks through the blank-extended lattice, as state sequences.
// Grown frame by frame with the three legal moves; a walk counts only if it
// ends on one of the two terminal states.
void enumerate_lattice_paths(const std::vector<int>& z, int frames,
                             std::vector<std::vector<int>>& out) {
  const int states = static_cast<int>(z.size());
  std::vector<int> walk;
  std::function<void(int, int)> grow = [&](int t, int s) {
    walk.push_back(s);
    if (t == frames - 1) {
      if (s == states - 1 || s == states - 2) out.push_back(walk);
    } else {
      grow(t + 1, s);
      if (s + 1 < states) grow(t + 1, s + 1);
      if (s + 2 < states && z[static_cast<size_t>(s + 2)] != Vocab::kBlankId &&
          z[static_cast<size_t>(s + 2)] != z[static_cast<size_t>(s)])
        grow(t + 1, s + 2);
    }
    walk.pop_back();
  };
  grow(0, 0);
  if (states > 1) grow(0, 1);
}

// Backward comparison described in the header: true when `a` is preferred.
bool preferred_over(const std::vector<int>& a, const std::vector<int>& b) {
  const int frames = static_cast<int>(a.size());
  if (a[static_cast<size_t>(frames - 1)] != b[static_cast<size_t>(frames - 1)])
    return a[static_cast<size_t>(frames - 1)] < b[static_cast<size_t>(frames - 1)];
  for (int t = frames - 2; t >= 0; --t) {
    if (a[static_cast<size_t>(t)] == b[static_cast<size_t>(t)]) continue;
    const int next = a[static_cast<size_t>(t + 1)];  // equal in both by now
    auto rank = [next](int s) {
      if (s == next) return 0;      // stay
      if (s == next - 2) return 1;  // skip
      return 2;                     // step
    };
    return rank(a[static_cast<size_t>(t)]) < rank(b[static_cast<size_t>(t)]);
  }
  return false;
}

std::vector<int> extended(const std::vector<int>& targets) {
  std::vector<int> z(2 * targets.size() + 1, Vocab::kBlankId);
  for (size_t i = 0; i < targets.size(); ++i) z[2 * i + 1] = targets[i];
  return z;
}

}  // namespace

std::vector<int> collapse_labels(const std::vector<int>& frame_labels) {
  std::vector<int> out;
  int prev = -1;
  for (int label : frame_labels) {
    if (label != prev && label != Vocab::kBlankId) out.push_back(label);
    prev = label;
  }
  return out;
}

double oracle_ctc_loss(const Tensor& log_probs, const std::vector<int>& targets) {
  double log_total = kNegInf;
  for_each_labelling(log_probs.rows(), log_probs.cols(), [&](const std::vector<int>& labels) {
    if (collapse_labels(labels) == targets)
      log_total = log_sum_exp(log_total, path_score(log_probs, labels));
  });
  return -log_total;
}

std::vector<double> oracle_ctc_grad(const Tensor& log_probs, const std::vector<int>& targets) {
  const int frames = log_probs.rows();
  const int classes = log_probs.cols();
  std::vector<double> occupancy(static_cast<size_t>(frames) * classes, kNegInf);
  double log_total = kNegInf;
  for_each_labelling(frames, classes, [&](const std::vector<int>& labels) {
    if (collapse_labels(labels) != targets) return;
    const double score = path_score(log_probs, labels);
    log_total = log_sum_exp(log_total, score);
    for (int t = 0; t < frames; ++t) {
      double& cell = occupancy[static_cast<size_t>(t) * classes + labels[static_cast<size_t>(t)]];
      cell = log_sum_exp(cell, score);
    }
  });
  std::vector<double> grad(static_cast<size_t>(frames) * classes, 0.0);
  if (log_total == kNegInf) return grad;
  for (size_t i = 0; i < grad.size(); ++i)
    if (occupancy[i] != kNegInf) grad[i] = -std::exp(occupancy[i] - log_total);
  return grad;
}

AlignmentPath oracle_forced_align(const Tensor& log_probs, const std::vector<int>& targets) {
  const std::vector<int> z = extended(targets);
  std::vector<std::vector<int>> walks;
  enumerate_lattice_paths(z, log_probs.rows(), walks);
  if (walks.empty()) throw AlignmentError("oracle_forced_align: no lattice path exists");

  const int classes = log_probs.cols();
  const double* lp = log_probs.data();
  auto walk_score = [&](const std::vector<int>& walk) {
    double score = 0.0;
    for (size_t t = 0; t < walk.size(); ++t)
      score += lp[t * static_cast<size_t>(classes) +
                  static_cast<size_t>(z[static_cast<size_t>(walk[t])])];
    return score;
  };

  const std::vector<int>* best = &walks[0];
  double best_score = walk_score(walks[0]);
  for (size_t i = 1; i < walks.size(); ++i) {
    const double score = walk_score(walks[i]);
    if (score > best_score || (score == best_score && preferred_over(walks[i], *best))) {
      best = &walks[i];
      best_score = score;
    }
  }

  AlignmentPath path;
  path.frame_labels = *best;
  for (size_t t = 0; t < best->size(); ++t) {
    const int state = (*best)[t];
    if (state % 2 == 0) continue;
    const int token_index = (state - 1) / 2;
    if (!path.segments.empty() && path.segments.back().token_index == token_index) {
      path.segments.back().end = static_cast<int>(t) + 1;
    } else {
      path.segments.push_back({token_index, static_cast<int>(t), static_cast<int>(t) + 1});
    }
  }
  return path;
}

double oracle_viterbi_score(const Tensor& log_probs, const std::vector<int>& targets) {
  const std::vector<int> z = extended(targets);
  std::vector<std::vector<int>> walks;
  enumerate_lattice_paths(z, log_probs.rows(), walks);
  if (walks.empty()) throw AlignmentError("oracle_viterbi_score: no lattice path exists");
  const int classes = log_probs.cols();
  const double* lp = log_probs.data();
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& walk : walks) {
    double score = 0.0;
    for (size_t t = 0; t < walk.size(); ++t)
      score += lp[t * static_cast<size_t>(classes) +
                  static_cast<size_t>(z[static_cast<size_t>(walk[t])])];
    best = std::max(best, score);
  }
  return best;
}

std::vector<double> finite_difference_grad(const std::function<double(const Tensor&)>& f,
                                           const Tensor& x, double eps) {
  if (eps <= 0.0) throw ContractError("finite_difference_grad: eps must be positive");
  std::vector<double> grad(x.size());
  std::vector<double> values = x.values();
  for (size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + eps;
    const double up = f(Tensor::from(x.shape(), values));
    values[i] = saved - eps;
    const double down = f(Tensor::from(x.shape(), values));
    values[i] = saved;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double max_rel_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  if (analytic.size() != numeric.size())
    throw ContractError("max_rel_error: gradient sizes differ");
  double worst = 0.0;
  for (size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({1.0, std::fabs(analytic[i]), std::fabs(numeric[i])});
    worst = std::max(worst, std::fabs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

double op_fd_error(const std::function<Tensor(const Tensor&)>& op, const Tensor& x0,
                   uint64_t probe_seed, double eps) {
  Tensor x = Tensor::from(x0.shape(), x0.values(), /*requires_grad=*/true);
  Tensor y = op(x);
  Rng rng(probe_seed);
  std::vector<double> w(static_cast<size_t>(y.size()));
  for (double& v : w) v = 2.0 * rng.uniform() - 1.0;
  Tensor loss = sum(mul(y, Tensor::from(y.shape(), w)));
  backward(loss);
  std::vector<double> analytic = x.grad();

  auto f = [&](const Tensor& xv) {
    Tensor yy = op(xv);
    double acc = 0.0;
    for (int64_t i = 0; i < yy.size(); ++i) acc += w[static_cast<size_t>(i)] * yy.at(i);
    return acc;
  };
  std::vector<double> numeric = finite_difference_grad(f, x0, eps);
  return max_rel_error(analytic, numeric);
}

double model_fd_error(const std::function<Tensor()>& loss_fn, const ParamList& params,
                      double eps) {
  if (eps <= 0.0) throw ContractError("model_fd_error: eps must be positive");
  for (const auto& [name, t] : params) {
    Tensor handle = t;  // same node
    handle.zero_grad();
  }
  backward(loss_fn());

  double worst = 0.0;
  for (const auto& [name, t] : params) {
    Tensor tensor = t;
    const std::vector<double> analytic = tensor.grad();
    for (int64_t i = 0; i < tensor.size(); ++i) {
      double& slot = tensor.values()[static_cast<size_t>(i)];
      const double saved = slot;
      slot = saved + eps;
      const double up = loss_fn().item();
      slot = saved - eps;
      const double down = loss_fn().item();
      slot = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[static_cast<size_t>(i)];
      const double denom = std::max({1.0, std::fabs(a), std::fabs(numeric)});
      worst = std::max(worst, std::fabs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace modalign
