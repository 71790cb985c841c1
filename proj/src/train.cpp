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

#include "modalign/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "modalign/checkpoint.hpp"
#include "modalign/ctc.hpp"
#include "modalign/metrics.hpp"
#include "modalign/switch.hpp"

namespace modalign {

namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

EvalResult evaluate(const AsrModel& model, const std::vector<Utterance>& utts,
                    const std::vector<int>& slot_map) {
  EvalResult result;
  WerCounts wer_counts;
  SlotCounts slot_counts;
  double boundary_err = 0.0;
  int boundary_tokens = 0;
  int overlapping = 0;
  const int sub = model.cfg.subsample_factor;
  Rng unused(0);  // dropout is off at eval

  for (const Utterance& utt : utts) {
    Tensor speech_emb = model.speech.forward(utt.features, false, unused);
    std::vector<int> hyp = model.decoder.infer(speech_emb, model.cfg.max_len);
    wer_counts.add(utt.tokens, hyp);

    std::vector<int> hyp_slots;
    hyp_slots.reserve(hyp.size());
    for (int t : hyp)
      hyp_slots.push_back(model.vocab.is_content(t) ? slot_map[static_cast<size_t>(t)] : 0);
    slot_counts.add(utt.tokens, utt.slots, hyp, hyp_slots);

    // Alignment quality against the renderer's ground truth.
    Tensor lp = model.aligner.project(speech_emb);
    if (!ctc_feasible(lp.rows(), utt.tokens)) {
      ++result.infeasible;
      continue;
    }
    AlignmentPath path = ctc_forced_align(lp, utt.tokens);
    for (size_t i = 0; i < path.segments.size(); ++i) {
      const Segment& pred = path.segments[i];
      const Segment& truth = utt.true_segments[i];
      const int ps = pred.start * sub;
      const int pe = pred.end * sub;
      boundary_err += 0.5 * (std::abs(ps - truth.start) + std::abs(pe - truth.end));
      ++boundary_tokens;
      if (ps < truth.end && truth.start < pe) ++overlapping;
    }
  }
  result.wer = wer_counts.wer();
  result.slot_f1 = slot_counts.f1();
  if (boundary_tokens > 0) {
    result.boundary_mae = boundary_err / boundary_tokens;
    result.boundary_overlap = static_cast<double>(overlapping) / boundary_tokens;
  }
  return result;
}

std::string format_metrics_line(const MetricsRecord& rec) {
  std::ostringstream s;
  s << "step:" << rec.losses.step << " ctc:" << g17(rec.losses.ctc)
    << " mlm:" << g17(rec.losses.mlm) << " dec:" << g17(rec.losses.dec)
    << " joint:" << g17(rec.losses.joint) << " swap_rate:" << g17(rec.losses.swap_rate)
    << " mean_segment_len:" << g17(rec.losses.mean_segment_len)
    << " dev_wer:" << g17(rec.dev.wer) << " dev_slot_f1:" << g17(rec.dev.slot_f1)
    << " boundary_mae:" << g17(rec.dev.boundary_mae)
    << " boundary_overlap:" << g17(rec.dev.boundary_overlap)
    << " infeasible:" << rec.infeasible_skipped << " wall_ms:" << g17(rec.wall_ms);
  return s.str();
}

Trainer::Trainer(const RunConfig& cfg, const Corpus& corpus)
    : cfg_(cfg),
      corpus_(corpus),
      model_(cfg.model, Rng::derive(cfg.seed, "init")),
      params_(model_.params()),
      opt_(cfg.adam, params_),
      order_rng_(Rng::derive(cfg.seed, "order")),
      mask_rng_(Rng::derive(cfg.seed, "mask")),
      switch_rng_(Rng::derive(cfg.seed, "switch")),
      dropout_rng_(Rng::derive(cfg.seed, "dropout")) {
  cfg_.validate();
  if (corpus.config.canonical() != cfg.corpus.canonical())
    throw ContractError("Trainer: corpus does not match the run config");
  if (corpus.train.empty()) throw ContractError("Trainer: empty training split");
}

LossReport Trainer::step() {
  // Draw until the CTC lattice is feasible at the subsampled frame rate.
  const int n_train = static_cast<int>(corpus_.train.size());
  const Utterance* utt = nullptr;
  Tensor speech_emb;
  Tensor lp;
  for (int attempt = 0;; ++attempt) {
    if (attempt > n_train)
      throw ContractError("Trainer: no feasible utterance found in a full pass of draws");
    utt = &corpus_.train[static_cast<size_t>(order_rng_.uniform_int(n_train))];
    speech_emb = model_.speech.forward(utt->features, true, dropout_rng_);
    lp = model_.aligner.project(speech_emb);
    if (ctc_feasible(lp.rows(), utt->tokens)) break;
    ++infeasible_;
  }

  CtcLossResult ctc = ctc_loss(lp, utt->tokens);

  Tensor mlm = Tensor::scalar(0.0);
  if (cfg_.mode != AblationMode::kBaseline) {
    MaskedBatch masked = apply_mlm_mask(utt->tokens, cfg_.mask_rate, model_.vocab, mask_rng_);
    Tensor text_emb = model_.text.forward(masked.input_tokens, true, dropout_rng_);
    mlm = text_mlm_loss(text_emb, masked, model_.aligner);
  }

  Tensor memory = speech_emb;
  double swap_rate = 0.0;
  double mean_segment_len = 0.0;
  const double p = cfg_.switch_p(step_);
  if (p > 0.0) {
    AlignmentPath path = ctc_forced_align(lp, utt->tokens);
    Tensor text_plain = model_.text.forward(utt->tokens, true, dropout_rng_);
    SwitchPlan plan = build_switch_plan(speech_emb, text_plain, path, p, switch_rng_);
    memory = plan.mixed;
    swap_rate = plan.swap_rate;
    mean_segment_len = plan.mean_segment_len;
  }

  Tensor dec = model_.decoder.train_loss(memory, utt->tokens, true, dropout_rng_);
  Tensor joint = joint_loss(ctc.loss, mlm, dec, cfg_.weights);

  LossReport report;
  report.step = step_ + 1;
  report.ctc = ctc.loss.item();
  report.mlm = mlm.item();
  report.dec = dec.item();
  report.joint = joint.item();
  report.swap_rate = swap_rate;
  report.mean_segment_len = mean_segment_len;

  const double recombined =
      cfg_.weights.ctc * report.ctc + cfg_.weights.mlm * report.mlm + cfg_.weights.dec * report.dec;
  if (std::abs(report.joint - recombined) > 1e-12 * std::max(1.0, std::abs(report.joint)))
    throw ContractError("Trainer: joint loss is not the weighted component sum");
  if (!std::isfinite(report.joint))
    throw NanAbort("Trainer: non-finite joint loss at step " + std::to_string(report.step) +
                   " (ctc=" + std::to_string(report.ctc) + " mlm=" + std::to_string(report.mlm) +
                   " dec=" + std::to_string(report.dec) + ")");

  for (auto& [name, t] : params_) t.zero_grad();
  backward(joint);
  opt_.step();
  ++step_;
  return report;
}

AsrModel make_model(const RunConfig& cfg) {
  return AsrModel(cfg.model, Rng::derive(cfg.seed, "init"));
}

TrainResult train_run(const RunConfig& cfg, const Corpus& corpus, std::ostream* metrics_out,
                      const std::string& checkpoint_path) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  Trainer trainer(cfg, corpus);
  TrainResult result;

  auto emit = [&](const LossReport& losses) {
    MetricsRecord rec;
    rec.losses = losses;
    rec.dev = evaluate(trainer.model(), corpus.dev, corpus.slot_map);
    rec.infeasible_skipped = trainer.infeasible_skipped();
    rec.wall_ms = elapsed_ms(start);
    if (metrics_out) *metrics_out << format_metrics_line(rec) << "\n" << std::flush;
    result.records.push_back(rec);
    return rec;
  };

  LossReport last;
  for (int i = 1; i <= cfg.steps; ++i) {
    last = trainer.step();
    if (i % cfg.eval_every == 0 && i != cfg.steps) emit(last);
  }
  if (cfg.steps > 0) {
    result.dev = emit(last).dev;
  } else {
    result.dev = evaluate(trainer.model(), corpus.dev, corpus.slot_map);
  }
  result.test = evaluate(trainer.model(), corpus.test, corpus.slot_map);
  result.infeasible_skipped = trainer.infeasible_skipped();
  result.wall_ms = elapsed_ms(start);

  if (!checkpoint_path.empty())
    save_checkpoint(checkpoint_path, cfg.hash(), trainer.model().params());
  return result;
}

std::string ComparisonTable::machine_readable() const {
  std::ostringstream s;
  for (const AblationRow& row : rows) {
    s << "mode:" << row.mode << " seeds:" << row.wers.size() << " mean_wer:" << g17(row.mean_wer)
      << " std_wer:" << g17(row.std_wer) << " mean_f1:" << g17(row.mean_f1)
      << " std_f1:" << g17(row.std_f1) << " rel_wer_delta:" << g17(row.rel_wer_delta) << "\n";
  }
  return s.str();
}

namespace {

void mean_std(const std::vector<double>& xs, double& mean, double& stdev) {
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  stdev = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
}

}  // namespace

ComparisonTable compare_ablations(const std::vector<RunConfig>& configs,
                                  const std::vector<uint64_t>& seeds, const Corpus& corpus,
                                  std::ostream* progress) {
  if (configs.size() < 2) throw ContractError("compare_ablations: need at least two configs");
  if (seeds.size() < 3) throw ContractError("compare_ablations: need at least three seeds");
  for (const RunConfig& cfg : configs) {
    if (cfg.corpus.canonical() != configs.front().corpus.canonical())
      throw ContractError("compare_ablations: configs describe different corpora");
  }
  if (corpus.config.canonical() != configs.front().corpus.canonical())
    throw ContractError("compare_ablations: corpus does not match the configs");

  ComparisonTable table;
  for (const RunConfig& base : configs) {
    AblationRow row;
    row.mode = mode_name(base.mode);
    for (uint64_t seed : seeds) {
      RunConfig cfg = base;
      cfg.seed = seed;
      TrainResult run = train_run(cfg, corpus, nullptr);
      row.wers.push_back(run.test.wer);
      row.f1s.push_back(run.test.slot_f1);
      if (progress)
        *progress << "mode:" << row.mode << " seed:" << seed << " test_wer:" << g17(run.test.wer)
                  << " test_f1:" << g17(run.test.slot_f1) << "\n"
                  << std::flush;
    }
    mean_std(row.wers, row.mean_wer, row.std_wer);
    mean_std(row.f1s, row.mean_f1, row.std_f1);
    table.rows.push_back(row);
  }
  const double baseline = table.rows.front().mean_wer;
  for (AblationRow& row : table.rows)
    row.rel_wer_delta = baseline == 0.0 ? 0.0 : (row.mean_wer - baseline) / baseline;
  return table;
}

}  // namespace modalign
