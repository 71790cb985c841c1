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

#ifndef MODALIGN_ORACLE_HPP
#define MODALIGN_ORACLE_HPP

// Reference implementations used only to check the fast kernels. Everything
// here enumerates or differences; nothing shares recursion code with the
// production paths. Exponential cost, so callers keep instances tiny.

#include <functional>
#include <vector>

#include "modalign/ctc.hpp"
#include "modalign/tensor.hpp"

namespace modalign {

// Collapse a raw frame labelling: merge repeats, then drop blanks.
std::vector<int> collapse_labels(const std::vector<int>& frame_labels);

// -log sum of path probabilities, by enumerating every classes^T labelling
// and keeping those that collapse to `targets`. Returns +inf when none do.
double oracle_ctc_loss(const Tensor& log_probs, const std::vector<int>& targets);

// d(oracle loss)/d(log_probs), flat [T x classes], from the same enumeration:
// the (t, k) entry is -P(paths with label k at frame t | target) under the
// posterior over matching paths.
std::vector<double> oracle_ctc_grad(const Tensor& log_probs, const std::vector<int>& targets);

// Best-scoring lattice path by enumeration. Ties are resolved by comparing
// candidate state sequences backward from the last frame: prefer the lower
// final state, and at the first differing earlier frame prefer the candidate
// whose state ranks earlier in {stay, skip, step} relative to the frame after
// it. This is the path the DP backtrace in ctc_forced_align commits to.
AlignmentPath oracle_forced_align(const Tensor& log_probs, const std::vector<int>& targets);

// Score of the single best lattice path, by enumeration.
double oracle_viterbi_score(const Tensor& log_probs, const std::vector<int>& targets);

// Central finite differences of a scalar-valued function at x. The function
// is called with perturbed copies; x itself is left untouched.
std::vector<double> finite_difference_grad(const std::function<double(const Tensor&)>& f,
                                           const Tensor& x, double eps = 1e-5);

// Largest relative error between an analytic gradient and a finite-difference
// gradient, max_i |a_i - n_i| / max(1, |a_i|, |n_i|).
double max_rel_error(const std::vector<double>& analytic, const std::vector<double>& numeric);

// Checks d(probe)/dx against central finite differences for one op, where
// probe = sum(op(x) * w) for fixed random weights w drawn from probe_seed.
// Returns the max relative error so callers assert their own tolerance.
double op_fd_error(const std::function<Tensor(const Tensor&)>& op, const Tensor& x0,
                   uint64_t probe_seed = 1234, double eps = 1e-5);

// Finite-difference sweep across a whole parameter registry: zeroes the
// grads, backpropagates one loss_fn() evaluation, then central-differences
// every coordinate of every parameter (values are perturbed in place and
// restored). loss_fn must rebuild its graph deterministically from the
// parameters' current values. Returns the worst relative error.
double model_fd_error(const std::function<Tensor()>& loss_fn, const ParamList& params,
                      double eps = 1e-5);

}  // namespace modalign

#endif  // MODALIGN_ORACLE_HPP
