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

#include <iosfwd>
#include <string>
#include <vector>

#include "modalign/adam.hpp"
#include "modalign/config.hpp"
#include "modalign/data.hpp"
#include "modalign/model.hpp"

namespace modalign {

struct EvalResult {
  double wer = 0.0;
  double slot_f1 = 0.0;
  // Forced-alignment diagnostics against the renderer's ground truth, in
  // raw frames: mean absolute boundary error and the fraction of tokens
  // whose predicted span overlaps the true span. -1 when no utterance had
  // a feasible lattice.
  double boundary_mae = -1.0;
  double boundary_overlap = -1.0;
  int infeasible = 0;  // utterances the alignment diagnostic skipped
};

// Greedy decoding plus forced-alignment diagnostics over a split. Uses no
// randomness; repeated calls on the same model reproduce bit-identically.
EvalResult evaluate(const AsrModel& model, const std::vector<Utterance>& utts,
                    const std::vector<int>& slot_map);

struct MetricsRecord {
  LossReport losses;  // losses.step counts completed optimizer updates
  EvalResult dev;
  int infeasible_skipped = 0;  // training draws skipped so far
  double wall_ms = 0.0;        // excluded from determinism comparisons
};

// One "key:value key:value ..." line, doubles printed round-trippable;
// wall_ms is always the last field so determinism checks can strip it.
std::string format_metrics_line(const MetricsRecord& rec);

// Single-utterance training steps over a generated corpus. All randomness
// comes from streams derived from cfg.seed ("init", "order", "mask",
// "switch", "dropout"), so a (config, corpus) pair fixes the trajectory.
class Trainer {
 public:
  Trainer(const RunConfig& cfg, const Corpus& corpus);

  // Draws training utterances until one has a feasible CTC lattice (each
  // infeasible draw is counted and skipped), then runs one joint-loss
  // update. Throws NanAbort when the joint loss goes non-finite.
  LossReport step();

  AsrModel& model() { return model_; }
  const AsrModel& model() const { return model_; }
  const RunConfig& config() const { return cfg_; }
  int steps_done() const { return step_; }
  int infeasible_skipped() const { return infeasible_; }

 private:
  RunConfig cfg_;
  const Corpus& corpus_;
  AsrModel model_;
  ParamList params_;
  Adam opt_;
  Rng order_rng_, mask_rng_, switch_rng_, dropout_rng_;
  int step_ = 0;
  int infeasible_ = 0;
};

struct TrainResult {
  std::vector<MetricsRecord> records;
  EvalResult dev;   // at the final step
  EvalResult test;  // at the final step
  int infeasible_skipped = 0;
  double wall_ms = 0.0;
};

// Runs cfg.steps updates, evaluating on dev every eval_every steps and at
// the end, then scores test. Metric lines stream to metrics_out (may be
// null) as they are produced. The corpus must match cfg.corpus. When
// checkpoint_path is non-empty the final parameters are saved there.
TrainResult train_run(const RunConfig& cfg, const Corpus& corpus, std::ostream* metrics_out,
                      const std::string& checkpoint_path = "");

// The model a run starts from: architecture from cfg.model, parameters
// initialized from the "init" stream of cfg.seed.
AsrModel make_model(const RunConfig& cfg);

// Trains every (config, seed) pair and tabulates per-mode mean/std test
// WER and slot F1 plus relative WER deltas against the first config.
struct AblationRow {
  std::string mode;
  std::vector<double> wers;
  std::vector<double> f1s;
  double mean_wer = 0.0, std_wer = 0.0;
  double mean_f1 = 0.0, std_f1 = 0.0;
  double rel_wer_delta = 0.0;  // (mean - baseline_mean) / baseline_mean
};

struct ComparisonTable {
  std::vector<AblationRow> rows;
  std::string machine_readable() const;  // one key:value line per row
};

// Requires >= 2 configs and >= 3 seeds; every config must describe the
// same corpus as the one supplied (contract error otherwise). Runs are
// sequential and share no state.
ComparisonTable compare_ablations(const std::vector<RunConfig>& configs,
                                  const std::vector<uint64_t>& seeds, const Corpus& corpus,
                                  std::ostream* progress);

}  // namespace modalign
