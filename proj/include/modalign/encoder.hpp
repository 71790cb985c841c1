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
#include <utility>
#include <vector>

#include "modalign/rng.hpp"
#include "modalign/tensor.hpp"
#include "modalign/vocab.hpp"

namespace modalign {

constexpr double kLayerNormEps = 1e-5;

struct EncoderConfig {
  int d_model = 32;
  int n_layers = 2;
  int n_heads = 2;
  int d_ff = 64;
  int subsample_factor = 2;
  int vocab_size = 20;   // content tokens V
  int feature_dim = 16;  // speech input width F
  int max_len = 256;
  double dropout = 0.0;
  bool use_positional = true;

  void validate() const;
};

// Parameter-free sinusoidal position table, flattened row-major [len x d].
std::vector<double> sinusoidal_pe(int len, int d);

struct AttentionParams {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;

  // out_scale shrinks the residual-branch output projection at init so a
  // stack of blocks starts close to the identity map.
  static AttentionParams init(int d_model, Rng& rng, double out_scale = 1.0);
  void collect(const std::string& prefix, ParamList& out) const;
};

// Multi-head scaled dot-product attention. With `causal` set, query row i
// attends to key rows [0, i] only (requires equal query/key counts).
Tensor attend(const Tensor& queries, const Tensor& keys_values, const AttentionParams& p,
              int n_heads, bool causal);

struct FeedForwardParams {
  Tensor w1, b1, w2, b2;

  static FeedForwardParams init(int d_model, int d_ff, Rng& rng, double out_scale = 1.0);
  void collect(const std::string& prefix, ParamList& out) const;
};

// Pre-LN self-attention block: x + attn(LN(x)), then x + ff(LN(x)).
struct EncoderBlock {
  Tensor ln1_g, ln1_b, ln2_g, ln2_b;
  AttentionParams attn;
  FeedForwardParams ff;

  static EncoderBlock init(const EncoderConfig& cfg, Rng& rng);
  void collect(const std::string& prefix, ParamList& out) const;
  Tensor forward(const Tensor& x, const EncoderConfig& cfg, bool training, Rng& rng) const;
};

// Strided mean-pool subsampling, linear lift to d_model, positional encoding,
// self-attention stack, final layer norm, then an output projection (so a
// zeroed projection provably zeroes the encoder output).
class SpeechEncoder {
 public:
  SpeechEncoder(const EncoderConfig& cfg, Rng& rng);

  // features: [T x F], output: [ceil(T / subsample_factor) x d_model]
  Tensor forward(const Tensor& features, bool training, Rng& rng) const;

  void collect(const std::string& prefix, ParamList& out) const;
  const EncoderConfig& config() const { return cfg_; }

  Tensor out_w, out_b;  // exposed for the zero-projection contract test

 private:
  EncoderConfig cfg_;
  Tensor lift_w_, lift_b_;
  std::vector<EncoderBlock> blocks_;
  Tensor final_g_, final_b_;
};

// Token embedding table, positional encoding, self-attention stack, final
// layer norm. The table covers content tokens plus the reserved specials.
class TextEncoder {
 public:
  TextEncoder(const EncoderConfig& cfg, Rng& rng);

  // tokens: ids into the embedding table, output: [L x d_model]
  Tensor forward(const std::vector<int>& tokens, bool training, Rng& rng) const;

  void collect(const std::string& prefix, ParamList& out) const;
  const Tensor& table() const { return table_; }
  const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
  Tensor table_;
  std::vector<EncoderBlock> blocks_;
  Tensor final_g_, final_b_;
};

struct MaskedBatch {
  std::vector<int> input_tokens;     // with mask/random/keep substitutions
  std::vector<int> original_tokens;  // MLM prediction targets
  std::vector<uint8_t> masked;       // 1 where the MLM loss applies
};

// Independent Bernoulli(mask_rate) selection per position, resampled until
// at least one position is selected whenever mask_rate > 0. Selected
// positions are corrupted 80% mask token / 10% random content token /
// 10% kept.
MaskedBatch apply_mlm_mask(const std::vector<int>& tokens, double mask_rate, const Vocab& vocab,
                           Rng& rng);

}  // namespace modalign
