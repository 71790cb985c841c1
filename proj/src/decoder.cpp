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

#include "modalign/decoder.hpp"

#include <algorithm>
#include <cmath>

namespace modalign {

namespace {

Tensor maybe_dropout(const Tensor& x, double rate, bool training, Rng& rng) {
  if (!training || rate == 0.0) return x;
  return dropout(x, rate, rng, true);
}

}  // namespace

void DecoderConfig::validate() const {
  if (d_model < 1 || n_layers < 0 || n_heads < 1 || d_ff < 1)
    throw ContractError("DecoderConfig: sizes must be positive");
  if (d_model % n_heads != 0)
    throw ContractError("DecoderConfig: d_model not divisible by n_heads");
  if (vocab_size < 1 || max_len < 1)
    throw ContractError("DecoderConfig: vocab_size and max_len must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw ContractError("DecoderConfig: dropout in [0, 1)");
}

DecoderBlock DecoderBlock::init(const DecoderConfig& cfg, Rng& rng) {
  const double out_scale = 1.0 / std::sqrt(3.0 * cfg.n_layers);
  DecoderBlock b;
  b.ln1_g = Tensor::full({cfg.d_model}, 1.0, true);
  b.ln1_b = Tensor::zeros({cfg.d_model}, true);
  b.self_attn = AttentionParams::init(cfg.d_model, rng, out_scale);
  b.ln2_g = Tensor::full({cfg.d_model}, 1.0, true);
  b.ln2_b = Tensor::zeros({cfg.d_model}, true);
  b.cross_attn = AttentionParams::init(cfg.d_model, rng, out_scale);
  b.ln3_g = Tensor::full({cfg.d_model}, 1.0, true);
  b.ln3_b = Tensor::zeros({cfg.d_model}, true);
  b.ff = FeedForwardParams::init(cfg.d_model, cfg.d_ff, rng, out_scale);
  return b;
}

void DecoderBlock::collect(const std::string& prefix, ParamList& out) const {
  out.emplace_back(prefix + ".ln1.g", ln1_g);
  out.emplace_back(prefix + ".ln1.b", ln1_b);
  self_attn.collect(prefix + ".self", out);
  out.emplace_back(prefix + ".ln2.g", ln2_g);
  out.emplace_back(prefix + ".ln2.b", ln2_b);
  cross_attn.collect(prefix + ".cross", out);
  out.emplace_back(prefix + ".ln3.g", ln3_g);
  out.emplace_back(prefix + ".ln3.b", ln3_b);
  ff.collect(prefix + ".ff", out);
}

Tensor DecoderBlock::forward(const Tensor& x, const Tensor& memory, const DecoderConfig& cfg,
                             bool training, Rng& rng) const {
  Tensor h = layer_norm(x, ln1_g, ln1_b, kLayerNormEps);
  Tensor self_out = attend(h, h, self_attn, cfg.n_heads, /*causal=*/true);
  Tensor a = add(x, maybe_dropout(self_out, cfg.dropout, training, rng));

  Tensor h2 = layer_norm(a, ln2_g, ln2_b, kLayerNormEps);
  Tensor cross_out = attend(h2, memory, cross_attn, cfg.n_heads, /*causal=*/false);
  Tensor b = add(a, maybe_dropout(cross_out, cfg.dropout, training, rng));

  Tensor h3 = layer_norm(b, ln3_g, ln3_b, kLayerNormEps);
  Tensor inner = relu(add_row_bias(matmul(h3, ff.w1), ff.b1));
  Tensor ffo = add_row_bias(matmul(inner, ff.w2), ff.b2);
  return add(b, maybe_dropout(ffo, cfg.dropout, training, rng));
}

Decoder::Decoder(const DecoderConfig& cfg, Rng& rng) : cfg_(cfg), vocab_(cfg.vocab_size) {
  cfg_.validate();
  table_ = Tensor::randn({vocab_.table_rows(), cfg.d_model},
                         1.0 / std::sqrt(static_cast<double>(cfg.d_model)), rng, true);
  mem_g_ = Tensor::full({cfg.d_model}, 1.0, true);
  mem_b_ = Tensor::zeros({cfg.d_model}, true);
  blocks_.reserve(static_cast<size_t>(cfg.n_layers));
  for (int i = 0; i < cfg.n_layers; ++i) blocks_.push_back(DecoderBlock::init(cfg_, rng));
  final_g_ = Tensor::full({cfg.d_model}, 1.0, true);
  final_b_ = Tensor::zeros({cfg.d_model}, true);
  out_w_ = Tensor::randn({cfg.d_model, vocab_.table_rows()},
                         1.0 / std::sqrt(static_cast<double>(cfg.d_model)), rng, true);
  out_b_ = Tensor::zeros({vocab_.table_rows()}, true);
}

Tensor Decoder::forward_logits(const std::vector<int>& input_tokens, const Tensor& memory,
                               bool training, Rng& rng) const {
  if (input_tokens.empty()) throw ContractError("Decoder: empty input sequence");
  if (memory.ndim() != 2 || memory.cols() != cfg_.d_model)
    throw ShapeError("Decoder: memory width does not match d_model");
  Tensor x = scale(embedding_rows(table_, input_tokens),
                   std::sqrt(static_cast<double>(cfg_.d_model)));
  x = add_const(x, sinusoidal_pe(static_cast<int>(input_tokens.size()), cfg_.d_model));
  // The CTC objective is position-equivariant and drives the encoder toward
  // position-free frame embeddings, so positions are re-added to the memory
  // here; without them cross-attention degrades to a bag of tokens. The norm
  // keeps the content and position scales comparable no matter how large the
  // encoder output grows.
  Tensor mem = layer_norm(memory, mem_g_, mem_b_, kLayerNormEps);
  mem = add_const(mem, sinusoidal_pe(memory.rows(), cfg_.d_model));
  for (const DecoderBlock& blk : blocks_) x = blk.forward(x, mem, cfg_, training, rng);
  x = layer_norm(x, final_g_, final_b_, kLayerNormEps);
  return add_row_bias(matmul(x, out_w_), out_b_);
}

Tensor Decoder::train_loss(const Tensor& memory, const std::vector<int>& targets, bool training,
                           Rng& rng) const {
  if (targets.empty()) throw ContractError("Decoder::train_loss: empty target sequence");
  std::vector<int> input;
  input.reserve(targets.size() + 1);
  input.push_back(vocab_.bos_id());
  input.insert(input.end(), targets.begin(), targets.end());

  std::vector<int> labels = targets;
  labels.push_back(vocab_.eos_id());

  return cross_entropy(forward_logits(input, memory, training, rng), labels);
}

std::vector<int> Decoder::infer(const Tensor& memory, int max_len) const {
  if (max_len < 1) throw ContractError("Decoder::infer: max_len must be >= 1");
  Rng unused(0);  // dropout is off outside training
  std::vector<int> input = {vocab_.bos_id()};
  std::vector<int> out;
  for (int step = 0; step < max_len; ++step) {
    Tensor logits = forward_logits(input, memory, /*training=*/false, unused);
    const int classes = logits.cols();
    const double* row = logits.data() + static_cast<size_t>(logits.rows() - 1) * classes;
    int best = 0;
    for (int k = 1; k < classes; ++k)
      if (row[k] > row[best]) best = k;
    if (best == vocab_.eos_id()) break;
    out.push_back(best);
    input.push_back(best);
  }
  return out;
}

void Decoder::collect(const std::string& prefix, ParamList& out) const {
  out.emplace_back(prefix + ".table", table_);
  out.emplace_back(prefix + ".mem.g", mem_g_);
  out.emplace_back(prefix + ".mem.b", mem_b_);
  for (size_t i = 0; i < blocks_.size(); ++i)
    blocks_[i].collect(prefix + ".block" + std::to_string(i), out);
  out.emplace_back(prefix + ".final.g", final_g_);
  out.emplace_back(prefix + ".final.b", final_b_);
  out.emplace_back(prefix + ".out.w", out_w_);
  out.emplace_back(prefix + ".out.b", out_b_);
}

void LossWeights::validate() const {
  if (ctc < 0.0 || mlm < 0.0 || dec < 0.0)
    throw ContractError("LossWeights: weights must be non-negative");
  if (ctc == 0.0 && mlm == 0.0 && dec == 0.0)
    throw ContractError("LossWeights: at least one weight must be positive");
}

Tensor joint_loss(const Tensor& ctc, const Tensor& mlm, const Tensor& dec,
                  const LossWeights& w) {
  w.validate();
  return weighted_sum({{w.ctc, ctc}, {w.mlm, mlm}, {w.dec, dec}});
}

}  // namespace modalign
