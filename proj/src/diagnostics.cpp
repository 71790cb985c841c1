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

#include "modalign/diagnostics.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include "modalign/aligner.hpp"
#include "modalign/ctc.hpp"
#include "modalign/model.hpp"
#include "modalign/oracle.hpp"
#include "modalign/switch.hpp"

namespace modalign {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

struct CtcInstance {
  Tensor log_probs;
  std::vector<int> targets;
};

// The acceptance family: T <= 6, L <= 3, V <= 3, feasibility guaranteed by
// redraw. Quantized instances draw logits from {0, 1} so path scores tie.
CtcInstance random_tiny_instance(Rng& rng, bool quantized) {
  while (true) {
    const int frames = 1 + rng.uniform_int(6);
    const int vocab = 1 + rng.uniform_int(3);
    const int len = 1 + rng.uniform_int(3);
    std::vector<int> targets(static_cast<size_t>(len));
    for (int& t : targets) t = 1 + rng.uniform_int(vocab);
    if (!ctc_feasible(frames, targets)) continue;

    const int classes = vocab + 1;
    std::vector<double> logits(static_cast<size_t>(frames) * classes);
    for (double& v : logits)
      v = quantized ? static_cast<double>(rng.uniform_int(2)) : 4.0 * rng.uniform() - 2.0;
    CtcInstance inst;
    inst.log_probs = log_softmax_rows(Tensor::from({frames, classes}, logits));
    inst.targets = std::move(targets);
    return inst;
  }
}

std::string describe(const CtcInstance& inst) {
  std::ostringstream s;
  s << "T=" << inst.log_probs.rows() << " classes=" << inst.log_probs.cols() << " targets=";
  for (size_t i = 0; i < inst.targets.size(); ++i) s << (i ? "," : "") << inst.targets[i];
  return s.str();
}

}  // namespace

CtcOracleReport run_ctc_oracle_suite(int instances, uint64_t seed, std::ostream* log) {
  const auto start = std::chrono::steady_clock::now();
  CtcOracleReport report;
  Rng rng(seed);
  for (int i = 0; i < instances; ++i) {
    const CtcInstance inst = random_tiny_instance(rng, i % 4 == 3);
    ++report.instances;

    // Forward loss against full-path enumeration.
    Tensor lp = Tensor::from(inst.log_probs.shape(), inst.log_probs.values(), true);
    CtcLossResult fast = ctc_loss(lp, inst.targets);
    const double slow = oracle_ctc_loss(inst.log_probs, inst.targets);
    const double loss_err = std::abs(fast.loss.item() - slow);
    report.worst_loss_err = std::max(report.worst_loss_err, loss_err);
    if (!fast.feasible || !(loss_err <= kCtcOracleTol)) {
      ++report.loss_failures;
      report.failures.push_back("loss mismatch (" + describe(inst) + ")");
    }

    // Gradient against enumeration-side occupancy counting.
    backward(fast.loss);
    const double grad_err =
        max_rel_error(lp.grad(), oracle_ctc_grad(inst.log_probs, inst.targets));
    report.worst_grad_err = std::max(report.worst_grad_err, grad_err);
    if (!(grad_err <= kCtcOracleTol)) {
      ++report.grad_failures;
      report.failures.push_back("gradient mismatch (" + describe(inst) + ")");
    }

    // Alignment, exactly, ties included.
    const AlignmentPath fast_path = ctc_forced_align(inst.log_probs, inst.targets);
    const AlignmentPath slow_path = oracle_forced_align(inst.log_probs, inst.targets);
    const double v_fast = ctc_viterbi_score(inst.log_probs, inst.targets);
    const double v_slow = oracle_viterbi_score(inst.log_probs, inst.targets);
    bool align_ok = v_fast == v_slow && fast_path.frame_labels == slow_path.frame_labels &&
                    fast_path.segments.size() == slow_path.segments.size();
    if (align_ok) {
      for (size_t s = 0; s < fast_path.segments.size(); ++s) {
        const Segment& a = fast_path.segments[s];
        const Segment& b = slow_path.segments[s];
        if (a.token_index != b.token_index || a.start != b.start || a.end != b.end) {
          align_ok = false;
          break;
        }
      }
    }
    if (!align_ok) {
      ++report.align_failures;
      report.failures.push_back("alignment mismatch (" + describe(inst) + ")");
    }
  }
  report.wall_ms = elapsed_ms(start);
  if (log) {
    *log << "ctc-oracle instances:" << report.instances
         << " loss_failures:" << report.loss_failures
         << " grad_failures:" << report.grad_failures
         << " align_failures:" << report.align_failures
         << " worst_loss_err:" << report.worst_loss_err
         << " worst_grad_err:" << report.worst_grad_err << " wall_ms:" << report.wall_ms << "\n";
    for (const std::string& f : report.failures) *log << "  " << f << "\n";
  }
  return report;
}

GradientReport run_gradient_suite(uint64_t seed, std::ostream* log) {
  const auto start = std::chrono::steady_clock::now();
  GradientReport report;
  Rng rng(seed);

  auto uniform = [&](std::vector<int> shape, double lo = -2.0, double hi = 2.0) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    std::vector<double> data(static_cast<size_t>(n));
    for (double& v : data) v = lo + (hi - lo) * rng.uniform();
    return Tensor::from(std::move(shape), std::move(data));
  };

  auto check = [&](const std::string& name, double err) {
    ++report.checks;
    report.worst = std::max(report.worst, err);
    std::ostringstream line;
    line << "check:" << name << " err:" << err;
    report.lines.push_back(line.str());
    if (!(err < kGradTol)) {
      ++report.failures;
      report.lines.back() += " FAILED";
    }
    if (log) *log << report.lines.back() << "\n";
  };

  auto op = [&](const std::string& name, const std::function<Tensor(const Tensor&)>& fn,
                const Tensor& x0) { check(name, op_fd_error(fn, x0, 1234, kFdEps)); };

  // Elementwise and reduction ops.
  const Tensor a34 = uniform({3, 4});
  const Tensor b34 = uniform({3, 4});
  const Tensor m45 = uniform({4, 5});
  const Tensor n54 = uniform({5, 4});
  op("matmul_lhs", [&](const Tensor& x) { return matmul(x, m45); }, a34);
  op("matmul_rhs", [&](const Tensor& x) { return matmul(a34, x); }, m45);
  op("matmul_nt_lhs", [&](const Tensor& x) { return matmul_nt(x, n54); }, a34);
  op("matmul_nt_rhs", [&](const Tensor& x) { return matmul_nt(b34, x); }, n54);
  op("add", [&](const Tensor& x) { return add(x, b34); }, a34);
  op("sub", [&](const Tensor& x) { return sub(b34, x); }, a34);
  op("mul", [&](const Tensor& x) { return mul(x, b34); }, a34);
  op("scale", [&](const Tensor& x) { return scale(x, -1.7); }, a34);
  const Tensor bias4 = uniform({4});
  op("add_row_bias_x", [&](const Tensor& x) { return add_row_bias(x, bias4); }, a34);
  op("add_row_bias_b", [&](const Tensor& x) { return add_row_bias(a34, x); }, bias4);
  op("relu", [&](const Tensor& x) { return relu(x); }, a34);
  op("sum", [&](const Tensor& x) { return sum(x); }, a34);
  op("mean", [&](const Tensor& x) { return mean(x); }, a34);
  op("softmax_rows", [&](const Tensor& x) { return softmax_rows(x); }, a34);
  op("log_softmax_rows", [&](const Tensor& x) { return log_softmax_rows(x); }, a34);
  const std::vector<int> limits = {1, 3, 2};
  op("softmax_rows_limited", [&](const Tensor& x) { return softmax_rows_limited(x, limits); },
     uniform({3, 3}));
  const Tensor gain = uniform({4}, 0.5, 1.5);
  const Tensor shift = uniform({4});
  op("layer_norm_x", [&](const Tensor& x) { return layer_norm(x, gain, shift, 1e-5); }, a34);
  op("layer_norm_gain", [&](const Tensor& x) { return layer_norm(a34, x, shift, 1e-5); }, gain);
  op("layer_norm_shift", [&](const Tensor& x) { return layer_norm(a34, gain, x, 1e-5); }, shift);
  const std::vector<int> ce_targets = {1, 3, 0};
  op("cross_entropy", [&](const Tensor& x) { return cross_entropy(x, ce_targets); }, a34);
  const std::vector<uint8_t> ce_ignore = {0, 1, 0};
  op("cross_entropy_ignore",
     [&](const Tensor& x) { return cross_entropy(x, ce_targets, ce_ignore); }, a34);
  op("mean_pool_rows", [&](const Tensor& x) { return mean_pool_rows(x, 2); }, uniform({5, 3}));
  const std::vector<int> gather_ids = {2, 0, 2, 1};
  op("embedding_rows", [&](const Tensor& x) { return embedding_rows(x, gather_ids); },
     uniform({3, 4}));
  op("slice_rows", [&](const Tensor& x) { return slice_rows(x, 1, 2); }, a34);
  op("slice_cols", [&](const Tensor& x) { return slice_cols(x, 1, 3); }, a34);
  op("concat_cols", [&](const Tensor& x) { return concat_cols({x, b34}); }, a34);
  op("add_const", [&](const Tensor& x) { return add_const(x, std::vector<double>(12, 0.3)); },
     a34);
  op("dropout",
     [&](const Tensor& x) {
       Rng drop_rng(99);
       return dropout(x, 0.25, drop_rng, true);
     },
     a34);
  const Tensor text23 = uniform({2, 3});
  const Tensor speech43 = uniform({4, 3});
  const std::vector<std::pair<int, int>> sources = {{0, 0}, {1, 1}, {0, 2}, {1, 0}};
  op("mix_rows_speech", [&](const Tensor& x) { return mix_rows(x, text23, sources); }, speech43);
  op("mix_rows_text", [&](const Tensor& x) { return mix_rows(speech43, x, sources); }, text23);
  op("weighted_sum",
     [&](const Tensor& x) {
       return weighted_sum({{0.3, sum(x)}, {0.7, mean(x)}});
     },
     a34);
  const std::vector<int> ctc_targets = {1, 2};
  op("ctc_loss",
     [&](const Tensor& x) { return ctc_loss(log_softmax_rows(x), ctc_targets).loss; },
     uniform({4, 3}));

  // The full joint objective on a small two-layer model, differenced over
  // every named parameter plus the input features.
  ModelConfig mc;
  mc.d_model = 8;
  mc.n_layers = 2;
  mc.n_heads = 2;
  mc.d_ff = 16;
  mc.subsample_factor = 2;
  mc.dec_layers = 2;
  mc.vocab_size = 4;
  mc.feature_dim = 5;
  mc.max_len = 16;
  AsrModel model(mc, Rng::derive(seed, "joint"));
  Tensor features = Tensor::from({7, 5}, uniform({7, 5}).values(), /*requires_grad=*/true);
  const std::vector<int> targets = {1, 3};
  Rng mask_rng(Rng::derive(seed, "mask"));
  const MaskedBatch masked = apply_mlm_mask(targets, 0.5, model.vocab, mask_rng);
  LossWeights weights;

  // Freeze the alignment once; the switch plan must not jump states while
  // parameters are nudged.
  Rng silent(0);
  const AlignmentPath frozen =
      ctc_forced_align(model.aligner.project(model.speech.forward(features, false, silent)),
                       targets);

  auto joint_fn = [&]() {
    Rng drop(0);
    Tensor speech_emb = model.speech.forward(features, false, drop);
    Tensor lp = model.aligner.project(speech_emb);
    CtcLossResult ctc = ctc_loss(lp, targets);
    Tensor text_masked = model.text.forward(masked.input_tokens, false, drop);
    Tensor mlm = text_mlm_loss(text_masked, masked, model.aligner);
    Tensor text_plain = model.text.forward(targets, false, drop);
    Rng coin(7);
    SwitchPlan plan = build_switch_plan(speech_emb, text_plain, frozen, 1.0, coin);
    Tensor dec = model.decoder.train_loss(plan.mixed, targets, false, drop);
    return joint_loss(ctc.loss, mlm, dec, weights);
  };
  ParamList params = model.params();
  params.emplace_back("features", features);
  check("joint_loss_model", model_fd_error(joint_fn, params, kFdEps));

  report.wall_ms = elapsed_ms(start);
  if (log)
    *log << "gradient checks:" << report.checks << " failures:" << report.failures
         << " worst:" << report.worst << " wall_ms:" << report.wall_ms << "\n";
  return report;
}

}  // namespace modalign
