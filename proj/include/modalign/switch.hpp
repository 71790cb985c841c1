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

#include <vector>

#include "modalign/ctc.hpp"
#include "modalign/rng.hpp"
#include "modalign/tensor.hpp"

namespace modalign {

struct SwitchScheduleConfig {
  double p_start = 0.0;
  double p_end = 0.4;
  int warmup_steps = 1000;

  void validate() const;
};

// Piecewise-linear ramp from p_start to p_end over warmup_steps, constant
// afterwards.
double switch_schedule(int step, const SwitchScheduleConfig& cfg);

struct SwitchPlan {
  std::vector<Segment> segments;
  std::vector<uint8_t> decisions;  // 1 = segment swapped to text
  Tensor mixed;                    // [T' x d_model]
  double swap_rate = 0.0;          // swapped / total segments (0 when none)
  double mean_segment_len = 0.0;   // frames per segment
};

// Per segment, with probability p, replace its frames with the aligned
// token's text embedding row repeated across the span. Blank frames and
// unswapped segments keep the speech rows bit-for-bit; gradients flow into
// whichever encoder supplied each row. text_emb row i must correspond to
// alignment segment i (the unmasked encoding of the true transcript).
SwitchPlan build_switch_plan(const Tensor& speech_emb, const Tensor& text_emb,
                             const AlignmentPath& alignment, double p, Rng& rng);

}  // namespace modalign
