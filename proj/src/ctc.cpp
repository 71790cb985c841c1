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

#include "modalign/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace modalign {

namespace {

constexpr int kBlank = Vocab::kBlankId;

// Blank-extended label sequence: blank between/around the L target tokens.
std::vector<int> extend_targets(const std::vector<int>& targets) {
  std::vector<int> z(2 * targets.size() + 1, kBlank);
  for (size_t i = 0; i < targets.size(); ++i) z[2 * i + 1] = targets[i];
  return z;
}

void validate_inputs(const Tensor& log_probs, const std::vector<int>& targets) {
  if (log_probs.ndim() != 2)
    throw ShapeError("ctc: log_probs must be [T x classes], got " + shape_str(log_probs.shape()));
  if (log_probs.rows() < 1) throw ContractError("ctc: need at least one frame");
  const int classes = log_probs.cols();
  if (classes < 2) throw ContractError("ctc: need blank plus at least one class");
  for (int t : targets) {
    if (t == kBlank) throw ContractError("ctc: targets must not contain the blank id");
    if (t < 0 || t >= classes)
      throw IndexError("ctc: target id " + std::to_string(t) + " out of range [1, " +
                       std::to_string(classes) + ")");
  }
}

// Whether the lattice allows jumping from extended state s-2 to s: only
// into a token state that differs from the token two states back.
bool skip_allowed(const std::vector<int>& z, int s) {
  return s >= 2 && z[static_cast<size_t>(s)] != kBlank &&
         z[static_cast<size_t>(s)] != z[static_cast<size_t>(s - 2)];
}

struct ViterbiTable {
  int frames = 0;
  int states = 0;
  std::vector<double> score;  // [T x S]
  std::vector<int> back;      // predecessor state per cell
  int best_final = 0;
  double best_score = kNegInf;
};

// Max-product DP. Tie rule (mirrored by the enumeration oracle): a strictly
// greater score wins; on equality the earlier candidate in preference order
// {stay, skip (s-2), step (s-1)} is kept, i.e. stay first, then the lower
// lattice index. The final state prefers the lower index on ties.
ViterbiTable viterbi_dp(const Tensor& log_probs, const std::vector<int>& z) {
  const int frames = log_probs.rows();
  const int classes = log_probs.cols();
  const int states = static_cast<int>(z.size());
  const double* lp = log_probs.data();
  ViterbiTable vt;
  vt.frames = frames;
  vt.states = states;
  vt.score.assign(static_cast<size_t>(frames) * states, kNegInf);
  vt.back.assign(static_cast<size_t>(frames) * states, -1);

  auto cell = [&](int t, int s) -> double& { return vt.score[static_cast<size_t>(t) * states + s]; };
  cell(0, 0) = lp[z[0]];
  if (states > 1) cell(0, 1) = lp[z[1]];
  for (int t = 1; t < frames; ++t) {
    for (int s = 0; s < states; ++s) {
      double best = cell(t - 1, s);
      int from = s;
      if (skip_allowed(z, s) && cell(t - 1, s - 2) > best) {
        best = cell(t - 1, s - 2);
        from = s - 2;
      }
      if (s >= 1 && cell(t - 1, s - 1) > best) {
        best = cell(t - 1, s - 1);
        from = s - 1;
      }
      if (best == kNegInf) continue;
      cell(t, s) = best + lp[static_cast<size_t>(t) * classes + z[static_cast<size_t>(s)]];
      vt.back[static_cast<size_t>(t) * states + s] = from;
    }
  }
  vt.best_final = states >= 2 ? states - 2 : states - 1;
  vt.best_score = cell(frames - 1, vt.best_final);
  if (states >= 2 && cell(frames - 1, states - 1) > vt.best_score) {
    vt.best_final = states - 1;
    vt.best_score = cell(frames - 1, states - 1);
  }
  return vt;
}

}  // namespace

bool ctc_feasible(int frames, const std::vector<int>& targets) {
  int required = static_cast<int>(targets.size());
  for (size_t i = 1; i < targets.size(); ++i)
    if (targets[i] == targets[i - 1]) ++required;
  return frames >= required;
}

CtcLossResult ctc_loss(const Tensor& log_probs, const std::vector<int>& targets) {
  validate_inputs(log_probs, targets);
  const int frames = log_probs.rows();
  const int classes = log_probs.cols();
  if (!ctc_feasible(frames, targets))
    return {Tensor::scalar(std::numeric_limits<double>::infinity()), false};

  const std::vector<int> z = extend_targets(targets);
  const int states = static_cast<int>(z.size());
  const double* lp = log_probs.data();

  std::vector<double> alpha(static_cast<size_t>(frames) * states, kNegInf);
  alpha[0] = lp[z[0]];
  if (states > 1) alpha[1] = lp[z[1]];
  for (int t = 1; t < frames; ++t) {
    for (int s = 0; s < states; ++s) {
      double acc = alpha[static_cast<size_t>(t - 1) * states + s];
      if (s >= 1) acc = log_sum_exp(acc, alpha[static_cast<size_t>(t - 1) * states + s - 1]);
      if (skip_allowed(z, s))
        acc = log_sum_exp(acc, alpha[static_cast<size_t>(t - 1) * states + s - 2]);
      if (acc == kNegInf) continue;
      alpha[static_cast<size_t>(t) * states + s] =
          acc + lp[static_cast<size_t>(t) * classes + z[static_cast<size_t>(s)]];
    }
  }
  double log_total = alpha[static_cast<size_t>(frames - 1) * states + states - 1];
  if (states > 1)
    log_total = log_sum_exp(log_total, alpha[static_cast<size_t>(frames - 1) * states + states - 2]);

  auto node = std::make_shared<TensorNode>();
  node->shape = {1};
  node->value = {-log_total};
  node->inputs = {log_probs.node()};
  node->requires_grad = log_probs.requires_grad();
  if (node->requires_grad) {
    node->backprop = [frames, classes, states, z, log_total,
                      alpha = std::move(alpha)](TensorNode& self) {
      auto& in = *self.inputs[0];
      if (!in.requires_grad) return;
      const double* lpv = in.value.data();
      // Suffix recursion; beta excludes the emission at its own frame, so
      // alpha + beta scores every path through (t, s) exactly once.
      std::vector<double> beta(static_cast<size_t>(frames) * states, kNegInf);
      beta[static_cast<size_t>(frames - 1) * states + states - 1] = 0.0;
      if (states > 1) beta[static_cast<size_t>(frames - 1) * states + states - 2] = 0.0;
      for (int t = frames - 2; t >= 0; --t) {
        for (int s = 0; s < states; ++s) {
          double acc = beta[static_cast<size_t>(t + 1) * states + s] +
                       lpv[static_cast<size_t>(t + 1) * classes + z[static_cast<size_t>(s)]];
          if (s + 1 < states)
            acc = log_sum_exp(acc, beta[static_cast<size_t>(t + 1) * states + s + 1] +
                                       lpv[static_cast<size_t>(t + 1) * classes +
                                           z[static_cast<size_t>(s + 1)]]);
          if (s + 2 < states && skip_allowed(z, s + 2))
            acc = log_sum_exp(acc, beta[static_cast<size_t>(t + 1) * states + s + 2] +
                                       lpv[static_cast<size_t>(t + 1) * classes +
                                           z[static_cast<size_t>(s + 2)]]);
          beta[static_cast<size_t>(t) * states + s] = acc;
        }
      }
      const double g = self.grad[0];
      std::vector<double> class_sum(static_cast<size_t>(classes));
      for (int t = 0; t < frames; ++t) {
        std::fill(class_sum.begin(), class_sum.end(), kNegInf);
        for (int s = 0; s < states; ++s) {
          const double ab = alpha[static_cast<size_t>(t) * states + s] +
                            beta[static_cast<size_t>(t) * states + s];
          const int k = z[static_cast<size_t>(s)];
          class_sum[static_cast<size_t>(k)] = log_sum_exp(class_sum[static_cast<size_t>(k)], ab);
        }
        for (int k = 0; k < classes; ++k) {
          if (class_sum[static_cast<size_t>(k)] == kNegInf) continue;
          in.grad[static_cast<size_t>(t) * classes + k] -=
              g * std::exp(class_sum[static_cast<size_t>(k)] - log_total);
        }
      }
    };
  }
  return {Tensor(node), true};
}

AlignmentPath ctc_forced_align(const Tensor& log_probs, const std::vector<int>& targets) {
  validate_inputs(log_probs, targets);
  const int frames = log_probs.rows();
  if (!ctc_feasible(frames, targets))
    throw AlignmentError("ctc_forced_align: " + std::to_string(frames) +
                         " frames cannot carry " + std::to_string(targets.size()) + " targets");
  const std::vector<int> z = extend_targets(targets);
  ViterbiTable vt = viterbi_dp(log_probs, z);

  AlignmentPath path;
  path.frame_labels.assign(static_cast<size_t>(frames), 0);
  int s = vt.best_final;
  for (int t = frames - 1; t >= 0; --t) {
    path.frame_labels[static_cast<size_t>(t)] = s;
    if (t > 0) s = vt.back[static_cast<size_t>(t) * vt.states + s];
  }
  for (int t = 0; t < frames; ++t) {
    const int state = path.frame_labels[static_cast<size_t>(t)];
    if (state % 2 == 0) continue;  // even lattice states are blanks
    const int token_index = (state - 1) / 2;
    if (!path.segments.empty() && path.segments.back().token_index == token_index &&
        path.segments.back().end == t) {
      path.segments.back().end = t + 1;
    } else {
      path.segments.push_back({token_index, t, t + 1});
    }
  }
  return path;
}

double ctc_viterbi_score(const Tensor& log_probs, const std::vector<int>& targets) {
  validate_inputs(log_probs, targets);
  if (!ctc_feasible(log_probs.rows(), targets))
    throw AlignmentError("ctc_viterbi_score: infeasible instance");
  return viterbi_dp(log_probs, extend_targets(targets)).best_score;
}

std::vector<int> ctc_greedy_decode(const Tensor& log_probs) {
  if (log_probs.ndim() != 2)
    throw ShapeError("ctc_greedy_decode: log_probs must be 2-D");
  const int frames = log_probs.rows();
  const int classes = log_probs.cols();
  std::vector<int> out;
  int prev = -1;
  for (int t = 0; t < frames; ++t) {
    const double* row = log_probs.data() + static_cast<size_t>(t) * classes;
    int arg = 0;
    for (int k = 1; k < classes; ++k)
      if (row[k] > row[arg]) arg = k;
    if (arg != prev && arg != kBlank) out.push_back(arg);
    prev = arg;
  }
  return out;
}

std::string format_alignment(const AlignmentPath& path, const std::vector<int>& targets,
                             const Vocab& vocab) {
  std::string out;
  for (const Segment& seg : path.segments) {
    out += std::to_string(seg.token_index) + " " + std::to_string(seg.start) + " " +
           std::to_string(seg.end) + " " +
           vocab.token_string(targets[static_cast<size_t>(seg.token_index)]) + "\n";
  }
  return out;
}

}  // namespace modalign
