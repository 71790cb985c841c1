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

#include "modalign/switch.hpp"

#include <string>
#include <utility>

namespace modalign {

void SwitchScheduleConfig::validate() const {
  if (p_start < 0.0 || p_start > 1.0 || p_end < 0.0 || p_end > 1.0)
    throw ContractError("SwitchScheduleConfig: probabilities must be in [0, 1]");
  if (warmup_steps < 0) throw ContractError("SwitchScheduleConfig: warmup_steps must be >= 0");
}

double switch_schedule(int step, const SwitchScheduleConfig& cfg) {
  cfg.validate();
  if (step < 0) throw ContractError("switch_schedule: step must be >= 0");
  if (step >= cfg.warmup_steps || cfg.warmup_steps == 0) return cfg.p_end;
  return cfg.p_start +
         (cfg.p_end - cfg.p_start) * static_cast<double>(step) / cfg.warmup_steps;
}

SwitchPlan build_switch_plan(const Tensor& speech_emb, const Tensor& text_emb,
                             const AlignmentPath& alignment, double p, Rng& rng) {
  if (p < 0.0 || p > 1.0) throw ContractError("build_switch_plan: p must be in [0, 1]");
  if (static_cast<size_t>(text_emb.rows()) != alignment.segments.size())
    throw AlignmentError("build_switch_plan: " + std::to_string(text_emb.rows()) +
                         " text rows for " + std::to_string(alignment.segments.size()) +
                         " aligned segments");
  for (const Segment& seg : alignment.segments)
    if (seg.start < 0 || seg.end > speech_emb.rows())
      throw AlignmentError("build_switch_plan: segment outside the speech sequence");

  SwitchPlan plan;
  plan.segments = alignment.segments;
  plan.decisions.resize(alignment.segments.size());

  std::vector<std::pair<int, int>> source(static_cast<size_t>(speech_emb.rows()));
  for (int t = 0; t < speech_emb.rows(); ++t) source[static_cast<size_t>(t)] = {0, t};

  int swapped = 0;
  int64_t seg_frames = 0;
  for (size_t i = 0; i < plan.segments.size(); ++i) {
    const Segment& seg = plan.segments[i];
    seg_frames += seg.end - seg.start;
    plan.decisions[i] = rng.bernoulli(p) ? 1 : 0;
    if (!plan.decisions[i]) continue;
    ++swapped;
    for (int t = seg.start; t < seg.end; ++t)
      source[static_cast<size_t>(t)] = {1, static_cast<int>(i)};
  }
  plan.mixed = mix_rows(speech_emb, text_emb, source);
  if (!plan.segments.empty()) {
    plan.swap_rate = static_cast<double>(swapped) / static_cast<double>(plan.segments.size());
    plan.mean_segment_len =
        static_cast<double>(seg_frames) / static_cast<double>(plan.segments.size());
  }
  return plan;
}

}  // namespace modalign
