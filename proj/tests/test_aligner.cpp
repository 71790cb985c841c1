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

#include <cmath>

#include "doctest.h"
#include "modalign/adam.hpp"
#include "modalign/aligner.hpp"
#include "test_support.hpp"

using namespace modalign;
using testing::bitwise_equal;
using testing::grad_check;
using testing::model_grad_check;
using testing::uniform_tensor;

namespace {

constexpr int kD = 8;
const Vocab kVocab(5);  // head classes = 6

SharedAligner zeroed_aligner() {
  Rng init(1);
  SharedAligner aligner(kD, kVocab, init);
  ParamList params;
  aligner.collect("aligner", params);
  for (auto& [name, t] : params) std::fill(t.values().begin(), t.values().end(), 0.0);
  return aligner;
}

}  // namespace

TEST_CASE("aligner: zero parameters give uniform log-probabilities") {
  SharedAligner aligner = zeroed_aligner();
  Rng rng(2);
  Tensor out = aligner.project(uniform_tensor({3, kD}, rng));
  const double expect = -std::log(static_cast<double>(kVocab.head_classes()));
  for (int64_t i = 0; i < out.size(); ++i)
    CHECK(out.at(i) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("aligner: identical embedding rows project identically") {
  Rng init(3);
  SharedAligner aligner(kD, kVocab, init);
  Rng rng(4);
  Tensor speech_emb = uniform_tensor({2, kD}, rng);
  Tensor text_emb = Tensor::from(speech_emb.shape(), speech_emb.values());
  CHECK(bitwise_equal(aligner.project(speech_emb), aligner.project(text_emb)));
}

TEST_CASE("aligner: project rows are log-distributions") {
  Rng init(5);
  SharedAligner aligner(kD, kVocab, init);
  Rng rng(6);
  Tensor out = aligner.project(uniform_tensor({4, kD}, rng));
  for (int r = 0; r < out.rows(); ++r) {
    double lse = kNegInf;
    for (int c = 0; c < out.cols(); ++c) lse = log_sum_exp(lse, out.at(r * out.cols() + c));
    CHECK(std::fabs(lse) < 1e-9);
  }
}

TEST_CASE("aligner: width mismatch rejected") {
  Rng init(7);
  SharedAligner aligner(kD, kVocab, init);
  CHECK_THROWS_AS(aligner.project(Tensor::zeros({2, kD + 1})), ShapeError);
}

TEST_CASE("aligner: gradient checks for input and parameters") {
  Rng init(8);
  SharedAligner aligner(kD, kVocab, init);
  Rng rng(9);
  Tensor emb = uniform_tensor({3, kD}, rng);
  CHECK(grad_check([&](const Tensor& e) { return aligner.project(e); }, emb) < 1e-6);

  ParamList params;
  aligner.collect("aligner", params);
  Rng probe(10);
  Tensor out0 = aligner.project(emb);
  std::vector<double> w(static_cast<size_t>(out0.size()));
  for (double& v : w) v = 2.0 * probe.uniform() - 1.0;
  auto loss = [&]() {
    Tensor out = aligner.project(emb);
    return sum(mul(out, Tensor::from(out.shape(), w)));
  };
  CHECK(model_grad_check(loss, params) < 1e-6);
}

TEST_CASE("speech_ctc_loss: zero parameters reduce to the uniform lattice case") {
  SharedAligner aligner = zeroed_aligner();
  Rng rng(11);
  Tensor one_frame = uniform_tensor({1, kD}, rng);
  CtcLossResult res = speech_ctc_loss(one_frame, {2}, aligner);
  CHECK(res.feasible);
  CHECK(res.loss.item() ==
        doctest::Approx(std::log(static_cast<double>(kVocab.head_classes()))).epsilon(1e-12));
}

TEST_CASE("speech_ctc_loss: infeasible stays flagged, composition matches manual path") {
  Rng init(12);
  SharedAligner aligner(kD, kVocab, init);
  Rng rng(13);
  Tensor short_emb = uniform_tensor({1, kD}, rng);
  CtcLossResult infeasible = speech_ctc_loss(short_emb, {1, 2}, aligner);
  CHECK_FALSE(infeasible.feasible);
  CHECK(std::isinf(infeasible.loss.item()));

  Tensor emb = uniform_tensor({4, kD}, rng);
  const std::vector<int> targets = {2, 4};
  CtcLossResult composed = speech_ctc_loss(emb, targets, aligner);
  CtcLossResult manual = ctc_loss(aligner.project(emb), targets);
  CHECK(composed.loss.item() == manual.loss.item());
}

TEST_CASE("text_mlm_loss: no masked positions give a constant zero") {
  Rng init(14);
  SharedAligner aligner(kD, kVocab, init);
  Rng rng(15);
  Tensor emb = uniform_tensor({3, kD}, rng);
  MaskedBatch batch;
  batch.input_tokens = {1, 2, 3};
  batch.original_tokens = {1, 2, 3};
  batch.masked = {0, 0, 0};
  Tensor loss = text_mlm_loss(emb, batch, aligner);
  CHECK(loss.item() == 0.0);
  CHECK_FALSE(loss.requires_grad());
}

TEST_CASE("text_mlm_loss: zero parameters, one masked position, uniform loss") {
  SharedAligner aligner = zeroed_aligner();
  Rng rng(16);
  Tensor emb = uniform_tensor({3, kD}, rng);
  MaskedBatch batch;
  batch.input_tokens = {1, kVocab.mask_id(), 3};
  batch.original_tokens = {1, 2, 3};
  batch.masked = {0, 1, 0};
  Tensor loss = text_mlm_loss(emb, batch, aligner);
  CHECK(loss.item() ==
        doctest::Approx(std::log(static_cast<double>(kVocab.head_classes()))).epsilon(1e-12));
}

TEST_CASE("text_mlm_loss: gradient check through embeddings") {
  Rng init(17);
  SharedAligner aligner(kD, kVocab, init);
  Rng rng(18);
  Tensor emb = uniform_tensor({4, kD}, rng);
  MaskedBatch batch;
  batch.input_tokens = {1, kVocab.mask_id(), 3, kVocab.mask_id()};
  batch.original_tokens = {1, 5, 3, 2};
  batch.masked = {0, 1, 0, 1};
  CHECK(grad_check([&](const Tensor& e) { return text_mlm_loss(e, batch, aligner); }, emb) <
        1e-4);
}

TEST_CASE("aligner sharing witness: an MLM-only step moves the CTC path and vice versa") {
  Rng init(19);
  SharedAligner aligner(kD, kVocab, init);
  Rng rng(20);
  Tensor speech_emb = uniform_tensor({4, kD}, rng);
  Tensor text_emb = uniform_tensor({3, kD}, rng);
  MaskedBatch batch;
  batch.input_tokens = {kVocab.mask_id(), 2, 3};
  batch.original_tokens = {1, 2, 3};
  batch.masked = {1, 0, 0};

  ParamList params;
  aligner.collect("aligner", params);
  Adam opt(AdamConfig{}, params);

  Tensor speech_before = aligner.project(speech_emb);
  for (auto& [name, t] : params) t.zero_grad();
  backward(text_mlm_loss(text_emb, batch, aligner));
  opt.step();
  Tensor speech_after = aligner.project(speech_emb);
  CHECK_FALSE(bitwise_equal(speech_before, speech_after));

  Tensor text_before = aligner.project(text_emb);
  for (auto& [name, t] : params) t.zero_grad();
  backward(speech_ctc_loss(speech_emb, {2, 4}, aligner).loss);
  opt.step();
  Tensor text_after = aligner.project(text_emb);
  CHECK_FALSE(bitwise_equal(text_before, text_after));
}

TEST_CASE("aligner: joint gradient equals the sum of per-loss gradients") {
  Rng init(21);
  SharedAligner aligner(kD, kVocab, init);
  Rng rng(22);
  Tensor speech_emb = uniform_tensor({4, kD}, rng);
  Tensor text_emb = uniform_tensor({2, kD}, rng);
  MaskedBatch batch;
  batch.input_tokens = {kVocab.mask_id(), 4};
  batch.original_tokens = {3, 4};
  batch.masked = {1, 1};
  const std::vector<int> targets = {1, 3};

  ParamList params;
  aligner.collect("aligner", params);

  for (auto& [name, t] : params) t.zero_grad();
  backward(speech_ctc_loss(speech_emb, targets, aligner).loss);
  std::vector<std::vector<double>> ctc_grads;
  for (auto& [name, t] : params) ctc_grads.push_back(t.grad());

  for (auto& [name, t] : params) t.zero_grad();
  backward(text_mlm_loss(text_emb, batch, aligner));
  std::vector<std::vector<double>> mlm_grads;
  for (auto& [name, t] : params) mlm_grads.push_back(t.grad());

  for (auto& [name, t] : params) t.zero_grad();
  Tensor joint = weighted_sum({{1.0, speech_ctc_loss(speech_emb, targets, aligner).loss},
                               {1.0, text_mlm_loss(text_emb, batch, aligner)}});
  backward(joint);
  for (size_t p = 0; p < params.size(); ++p) {
    const std::vector<double>& got = params[p].second.grad();
    for (size_t i = 0; i < got.size(); ++i)
      CHECK(std::fabs(got[i] - (ctc_grads[p][i] + mlm_grads[p][i])) < 1e-9);
  }
}

TEST_CASE("aligner: tied mode projects through the embedding table") {
  EncoderConfig cfg;
  cfg.d_model = kD;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.d_ff = 16;
  cfg.vocab_size = kVocab.content;
  cfg.feature_dim = 4;
  Rng init(23);
  TextEncoder text(cfg, init);
  SharedAligner tied(kVocab, text);
  CHECK(tied.tied());

  ParamList params;
  tied.collect("aligner", params);
  REQUIRE(params.size() == 1);  // bias only; the weight is the table
  CHECK(params[0].first == "aligner.b");

  Rng rng(24);
  Tensor emb = uniform_tensor({2, kD}, rng);
  Tensor logits = tied.logits(emb);
  const Tensor& table = text.table();
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < kVocab.head_classes(); ++c) {
      double dot = 0.0;
      for (int j = 0; j < kD; ++j) dot += emb.at(r * kD + j) * table.at(c * kD + j);
      CHECK(logits.at(r * kVocab.head_classes() + c) == doctest::Approx(dot).epsilon(1e-12));
    }
  }

  // An MLM step through the tied head must move the embedding table.
  Tensor table_handle = text.table();
  table_handle.zero_grad();
  MaskedBatch batch;
  batch.input_tokens = {kVocab.mask_id(), 2};
  batch.original_tokens = {1, 2};
  batch.masked = {1, 0};
  backward(text_mlm_loss(emb, batch, tied));
  double grad_norm = 0.0;
  for (double g : table_handle.grad()) grad_norm += g * g;
  CHECK(grad_norm > 0.0);
}
