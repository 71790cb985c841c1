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
#include <string>
#include <vector>

#include "modalign/adam.hpp"
#include "modalign/data.hpp"
#include "modalign/decoder.hpp"
#include "modalign/model.hpp"
#include "modalign/switch.hpp"

namespace modalign {

// Training variants. The mode pins (lambda_mlm, switch schedule): baseline
// trains CTC+decoder only; aligner adds the MLM head over the shared
// projection; aligner_switch additionally ramps the modality switch.
enum class AblationMode { kBaseline, kAligner, kAlignerSwitch };

std::string mode_name(AblationMode mode);
AblationMode parse_mode(const std::string& name);

struct RunConfig {
  AblationMode mode = AblationMode::kAlignerSwitch;
  ModelConfig model;
  CorpusConfig corpus;
  std::string corpus_dir;  // when set, load instead of generating
  LossWeights weights;     // weights.mlm is forced to 0 outside aligner modes
  SwitchScheduleConfig schedule;
  AdamConfig adam;
  double mask_rate = 0.15;
  int steps = 3000;
  int eval_every = 250;
  int align_warmup_steps = 500;  // switch stays off this long
  uint64_t seed = 1;

  // Re-derives the mode-pinned fields; called by the parser after every
  // assignment pass so a config file cannot leave the invariant broken.
  void apply_mode();
  void validate() const;

  // Effective swap probability at a training step, 0 during warmup and in
  // non-switch modes.
  double switch_p(int step) const;

  std::string canonical() const;
  uint64_t hash() const;  // model-architecture hash used by checkpoints
};

// key=value per line; '#' starts a comment. Unknown keys are errors.
RunConfig parse_run_config_text(const std::string& text);
RunConfig load_run_config(const std::string& path);

// Applies "key=value" overrides (CLI --set) on top of a parsed config.
void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides);

// The full defaults table as config-file text (documentation and --dump).
std::string default_config_text();

}  // namespace modalign
