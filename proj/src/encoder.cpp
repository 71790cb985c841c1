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

#include "modalign/encoder.hpp"

#include <cmath>

namespace modalign {

namespace {

Tensor init_matrix(int rows, int cols, Rng& rng, double gain = 1.0) {
  return Tensor::randn({rows, cols}, gain / std::sqrt(static_cast<double>(rows)), rng,
                       /*requires_grad=*/true);
}

Tensor init_zeros(int n) { return Tensor::zeros({n}, /*requires_grad=*/true); }
Tensor init_ones(int n) { return Tensor::full({n}, 1.0, /*requires_grad=*/true); }

Tensor maybe_dropout(const Tensor& x, const EncoderConfig& cfg, bool training, Rng& rng) {
  if (!training || cfg.dropout == 0.0) return x;
  return dropout(x, cfg.dropout, rng, true);
}

}  // namespace

void EncoderConfig::validate() const {
  if (d_model < 1 || n_layers < 0 || n_heads < 1 || d_ff < 1)
    throw ContractError("EncoderConfig: sizes must be positive");
  if (d_model % n_heads != 0)
    throw ContractError("EncoderConfig: d_model " + std::to_string(d_model) +
                        " not divisible by n_heads " + std::to_string(n_heads));
  if (subsample_factor < 1) throw ContractError("EncoderConfig: subsample_factor must be >= 1");
  if (vocab_size < 1 || feature_dim < 1 || max_len < 1)
    throw ContractError("EncoderConfig: vocab/feature/max_len must be positive");
  if (dropout < 0.0 || dropout >= 1.0)
    throw ContractError("EncoderConfig: dropout must be in [0, 1)");
}

std::vector<double> sinusoidal_pe(int len, int d) {
  std::vector<double> pe(static_cast<size_t>(len) * d);
  for (int pos = 0; pos < len; ++pos) {
    for (int i = 0; i < d; i += 2) {
      const double rate = std::pow(10000.0, -static_cast<double>(i) / d);
      pe[static_cast<size_t>(pos) * d + i] = std::sin(pos * rate);
      if (i + 1 < d) pe[static_cast<size_t>(pos) * d + i + 1] = std::cos(pos * rate);
    }
  }
  return pe;
}

AttentionParams AttentionParams::init(int d_model, Rng& rng, double out_scale) {
  AttentionParams p;
  p.wq = init_matrix(d_model, d_model, rng);
  p.bq = init_zeros(d_model);
  p.wk = init_matrix(d_model, d_model, rng);
  p.bk = init_zeros(d_model);
  p.wv = init_matrix(d_model, d_model, rng);
  p.bv = init_zeros(d_model);
  p.wo = init_matrix(d_model, d_model, rng, out_scale);
  p.bo = init_zeros(d_model);
  return p;
}

void AttentionParams::collect(const std::string& prefix, ParamList& out) const {
  out.emplace_back(prefix + ".wq", wq);
  out.emplace_back(prefix + ".bq", bq);
  out.emplace_back(prefix + ".wk", wk);
  out.emplace_back(prefix + ".bk", bk);
  out.emplace_back(prefix + ".wv", wv);
  out.emplace_back(prefix + ".bv", bv);
  out.emplace_back(prefix + ".wo", wo);
  out.emplace_back(prefix + ".bo", bo);
}

Tensor attend(const Tensor& queries, const Tensor& keys_values, const AttentionParams& p,
              int n_heads, bool causal) {
  const int d_model = p.wq.cols();
  if (queries.cols() != d_model || keys_values.cols() != d_model)
    throw ShapeError("attend: input width does not match d_model");
  if (causal && queries.rows() != keys_values.rows())
    throw ContractError("attend: causal attention needs equal query/key counts");
  const int d_head = d_model / n_heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(d_head));

  Tensor q = add_row_bias(matmul(queries, p.wq), p.bq);
  Tensor k = add_row_bias(matmul(keys_values, p.wk), p.bk);
  Tensor v = add_row_bias(matmul(keys_values, p.wv), p.bv);

  std::vector<int> limits;
  if (causal) {
    limits.resize(static_cast<size_t>(queries.rows()));
    for (int i = 0; i < queries.rows(); ++i) limits[static_cast<size_t>(i)] = i + 1;
  }

  std::vector<Tensor> heads;
  heads.reserve(static_cast<size_t>(n_heads));
  for (int h = 0; h < n_heads; ++h) {
    Tensor qh = slice_cols(q, h * d_head, d_head);
    Tensor kh = slice_cols(k, h * d_head, d_head);
    Tensor vh = slice_cols(v, h * d_head, d_head);
    Tensor scores = scale(matmul_nt(qh, kh), inv_scale);
    Tensor probs = causal ? softmax_rows_limited(scores, limits) : softmax_rows(scores);
    heads.push_back(matmul(probs, vh));
  }
  return add_row_bias(matmul(concat_cols(heads), p.wo), p.bo);
}

FeedForwardParams FeedForwardParams::init(int d_model, int d_ff, Rng& rng, double out_scale) {
  FeedForwardParams p;
  p.w1 = init_matrix(d_model, d_ff, rng);
  p.b1 = init_zeros(d_ff);
  p.w2 = init_matrix(d_ff, d_model, rng, out_scale);
  p.b2 = init_zeros(d_model);
  return p;
}

void FeedForwardParams::collect(const std::string& prefix, ParamList& out) const {
  out.emplace_back(prefix + ".w1", w1);
  out.emplace_back(prefix + ".b1", b1);
  out.emplace_back(prefix + ".w2", w2);
  out.emplace_back(prefix + ".b2", b2);
}

EncoderBlock EncoderBlock::init(const EncoderConfig& cfg, Rng& rng) {
  const double out_scale = 1.0 / std::sqrt(2.0 * cfg.n_layers);
  EncoderBlock b;
  b.ln1_g = init_ones(cfg.d_model);
  b.ln1_b = init_zeros(cfg.d_model);
  b.attn = AttentionParams::init(cfg.d_model, rng, out_scale);
  b.ln2_g = init_ones(cfg.d_model);
  b.ln2_b = init_zeros(cfg.d_model);
  b.ff = FeedForwardParams::init(cfg.d_model, cfg.d_ff, rng, out_scale);
  return b;
}

void EncoderBlock::collect(const std::string& prefix, ParamList& out) const {
  out.emplace_back(prefix + ".ln1.g", ln1_g);
  out.emplace_back(prefix + ".ln1.b", ln1_b);
  attn.collect(prefix + ".attn", out);
  out.emplace_back(prefix + ".ln2.g", ln2_g);
  out.emplace_back(prefix + ".ln2.b", ln2_b);
  ff.collect(prefix + ".ff", out);
}

Tensor EncoderBlock::forward(const Tensor& x, const EncoderConfig& cfg, bool training,
                             Rng& rng) const {
  Tensor h = layer_norm(x, ln1_g, ln1_b, kLayerNormEps);
  Tensor attended = attend(h, h, attn, cfg.n_heads, /*causal=*/false);
  Tensor mid = add(x, maybe_dropout(attended, cfg, training, rng));

  Tensor h2 = layer_norm(mid, ln2_g, ln2_b, kLayerNormEps);
  Tensor inner = relu(add_row_bias(matmul(h2, ff.w1), ff.b1));
  Tensor ffo = add_row_bias(matmul(inner, ff.w2), ff.b2);
  return add(mid, maybe_dropout(ffo, cfg, training, rng));
}

SpeechEncoder::SpeechEncoder(const EncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  lift_w_ = init_matrix(cfg.feature_dim, cfg.d_model, rng);
  lift_b_ = init_zeros(cfg.d_model);
  blocks_.reserve(static_cast<size_t>(cfg.n_layers));
  for (int i = 0; i < cfg.n_layers; ++i) blocks_.push_back(EncoderBlock::init(cfg_, rng));
  final_g_ = init_ones(cfg.d_model);
  final_b_ = init_zeros(cfg.d_model);
  out_w = init_matrix(cfg.d_model, cfg.d_model, rng);
  out_b = init_zeros(cfg.d_model);
}

Tensor SpeechEncoder::forward(const Tensor& features, bool training, Rng& rng) const {
  if (features.ndim() != 2 || features.rows() < 1)
    throw ContractError("SpeechEncoder: need a non-empty [T x F] feature matrix");
  if (features.cols() != cfg_.feature_dim)
    throw ShapeError("SpeechEncoder: feature width " + std::to_string(features.cols()) +
                     " != configured " + std::to_string(cfg_.feature_dim));
  Tensor x = mean_pool_rows(features, cfg_.subsample_factor);
  x = add_row_bias(matmul(x, lift_w_), lift_b_);
  if (cfg_.use_positional) x = add_const(x, sinusoidal_pe(x.rows(), cfg_.d_model));
  for (const EncoderBlock& b : blocks_) x = b.forward(x, cfg_, training, rng);
  x = layer_norm(x, final_g_, final_b_, kLayerNormEps);
  return add_row_bias(matmul(x, out_w), out_b);
}

void SpeechEncoder::collect(const std::string& prefix, ParamList& out) const {
  out.emplace_back(prefix + ".lift.w", lift_w_);
  out.emplace_back(prefix + ".lift.b", lift_b_);
  for (size_t i = 0; i < blocks_.size(); ++i)
    blocks_[i].collect(prefix + ".block" + std::to_string(i), out);
  out.emplace_back(prefix + ".final.g", final_g_);
  out.emplace_back(prefix + ".final.b", final_b_);
  out.emplace_back(prefix + ".out.w", out_w);
  out.emplace_back(prefix + ".out.b", out_b);
}

TextEncoder::TextEncoder(const EncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  const Vocab vocab(cfg.vocab_size);
  table_ = Tensor::randn({vocab.table_rows(), cfg.d_model},
                         1.0 / std::sqrt(static_cast<double>(cfg.d_model)), rng,
                         /*requires_grad=*/true);
  blocks_.reserve(static_cast<size_t>(cfg.n_layers));
  for (int i = 0; i < cfg.n_layers; ++i) blocks_.push_back(EncoderBlock::init(cfg_, rng));
  final_g_ = init_ones(cfg.d_model);
  final_b_ = init_zeros(cfg.d_model);
}

Tensor TextEncoder::forward(const std::vector<int>& tokens, bool training, Rng& rng) const {
  if (tokens.empty()) throw ContractError("TextEncoder: empty token sequence");
  // Embeddings are scaled up so content is not drowned out by the
  // unit-amplitude positional signal.
  Tensor x = scale(embedding_rows(table_, tokens), std::sqrt(static_cast<double>(cfg_.d_model)));
  if (cfg_.use_positional)
    x = add_const(x, sinusoidal_pe(static_cast<int>(tokens.size()), cfg_.d_model));
  for (const EncoderBlock& b : blocks_) x = b.forward(x, cfg_, training, rng);
  return layer_norm(x, final_g_, final_b_, kLayerNormEps);
}

void TextEncoder::collect(const std::string& prefix, ParamList& out) const {
  out.emplace_back(prefix + ".table", table_);
  for (size_t i = 0; i < blocks_.size(); ++i)
    blocks_[i].collect(prefix + ".block" + std::to_string(i), out);
  out.emplace_back(prefix + ".final.g", final_g_);
  out.emplace_back(prefix + ".final.b", final_b_);
}

MaskedBatch apply_mlm_mask(const std::vector<int>& tokens, double mask_rate, const Vocab& vocab,
                           Rng& rng) {
  if (mask_rate < 0.0 || mask_rate > 1.0)
    throw ContractError("apply_mlm_mask: mask_rate must be in [0, 1]");
  MaskedBatch batch;
  batch.original_tokens = tokens;
  batch.input_tokens = tokens;
  batch.masked.assign(tokens.size(), 0);
  if (tokens.empty() || mask_rate == 0.0) return batch;

  bool any = false;
  while (!any) {
    for (size_t i = 0; i < tokens.size(); ++i) {
      batch.masked[i] = rng.bernoulli(mask_rate) ? 1 : 0;
      any = any || batch.masked[i];
    }
  }
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (!batch.masked[i]) continue;
    const double r = rng.uniform();
    if (r < 0.8) {
      batch.input_tokens[i] = vocab.mask_id();
    } else if (r < 0.9) {
      batch.input_tokens[i] = 1 + rng.uniform_int(vocab.content);
    }  // else keep the original token
  }
  return batch;
}

}  // namespace modalign
