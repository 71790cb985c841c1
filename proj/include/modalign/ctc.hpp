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
#include <vector>

#include "modalign/tensor.hpp"
#include "modalign/vocab.hpp"

namespace modalign {

// All CTC machinery works on log_probs of shape [T x (V+1)], already
// log-normalized per frame, with class 0 the blank (Vocab::kBlankId).
// Arithmetic is log-space throughout; nothing here touches the
// probability domain.

// Frame span of one target token, [start, end) in the log_probs frame axis.
struct Segment {
  int token_index = 0;
  int start = 0;
  int end = 0;
};

// Viterbi best path through the blank-extended lattice. frame_labels holds
// extended-lattice indices (even = blank, odd 2i+1 = target token i);
// segments group the frames assigned to each non-blank token, in order.
struct AlignmentPath {
  std::vector<int> frame_labels;
  std::vector<Segment> segments;
};

struct CtcLossResult {
  Tensor loss;     // scalar; +inf when infeasible
  bool feasible = true;
};

// True when T frames can carry the target under CTC transition rules:
// T >= L + (number of adjacent duplicate tokens).
bool ctc_feasible(int frames, const std::vector<int>& targets);

// -log sum over all CTC paths collapsing to `targets`, via the log-space
// forward recursion. Gradient w.r.t. log_probs is exact (forward-backward)
// and recorded on the tape. Targets must be content ids (no blank).
// Infeasible input yields {+inf, false} with no gradient.
CtcLossResult ctc_loss(const Tensor& log_probs, const std::vector<int>& targets);

// Max-product Viterbi over the same lattice with backtrace.
// Tie-breaking, applied identically in DP and oracle: prefer staying on the
// current lattice state over advancing; between the two advancing
// predecessors prefer the lower lattice index; at the final frame prefer
// the lower-indexed terminal state. Throws AlignmentError when infeasible.
AlignmentPath ctc_forced_align(const Tensor& log_probs, const std::vector<int>& targets);

// Best single-path log score of the alignment above (for Viterbi <= forward
// comparisons).
double ctc_viterbi_score(const Tensor& log_probs, const std::vector<int>& targets);

// Per-frame argmax, collapse repeats, drop blanks.
std::vector<int> ctc_greedy_decode(const Tensor& log_probs);

// Debug dump: one line per segment, "token_index start end token_string".
std::string format_alignment(const AlignmentPath& path, const std::vector<int>& targets,
                             const Vocab& vocab);

}  // namespace modalign
