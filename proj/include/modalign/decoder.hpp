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
#include <vector>

#include "modalign/encoder.hpp"
#include "modalign/rng.hpp"
#include "modalign/tensor.hpp"
#include "modalign/vocab.hpp"

namespace modalign {

struct DecoderConfig {
  int d_model = 32;
  int n_layers = 2;
  int n_heads = 2;
  int d_ff = 64;
  int vocab_size = 20;  // content tokens V
  int max_len = 64;     // inference emission cap
  double dropout = 0.0;

  void validate() const;
};

// Causal self-attention, cross-attention into the encoder memory, then a
// feed-forward, each pre-LN with a residual.
struct DecoderBlock {
  Tensor ln1_g, ln1_b, ln2_g, ln2_b, ln3_g, ln3_b;
  AttentionParams self_attn;
  AttentionParams cross_attn;
  FeedForwardParams ff;

  static DecoderBlock init(const DecoderConfig& cfg, Rng& rng);
  void collect(const std::string& prefix, ParamList& out) const;
  Tensor forward(const Tensor& x, const Tensor& memory, const DecoderConfig& cfg, bool training,
                 Rng& rng) const;
};

// Autoregressive transformer decoder over the (possibly mixed) encoder
// sequence. Its embedding table and output head cover the full id table
// (content plus specials) so ids never need remapping; only content tokens
// and EOS ever appear as training targets.
class Decoder {
 public:
  Decoder(const DecoderConfig& cfg, Rng& rng);

  // Next-token logits for a BOS-led input prefix: [len(input) x table_rows].
  Tensor forward_logits(const std::vector<int>& input_tokens, const Tensor& memory, bool training,
                        Rng& rng) const;

  // Teacher-forced mean cross-entropy: input BOS+targets, labels targets+EOS.
  Tensor train_loss(const Tensor& memory, const std::vector<int>& targets, bool training,
                    Rng& rng) const;

  // Greedy decoding from BOS until EOS or the emission cap.
  std::vector<int> infer(const Tensor& memory, int max_len) const;

  void collect(const std::string& prefix, ParamList& out) const;
  const DecoderConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }

 private:
  DecoderConfig cfg_;
  Vocab vocab_;
  Tensor table_;
  Tensor mem_g_, mem_b_;
  std::vector<DecoderBlock> blocks_;
  Tensor final_g_, final_b_;
  Tensor out_w_, out_b_;
};

struct LossWeights {
  double ctc = 0.3;
  double mlm = 0.3;
  double dec = 0.7;

  void validate() const;  // non-negative, at least one positive
};

// joint = ctc*w.ctc + mlm*w.mlm + dec*w.dec over scalar tensors.
Tensor joint_loss(const Tensor& ctc, const Tensor& mlm, const Tensor& dec,
                  const LossWeights& w);

struct LossReport {
  int step = 0;
  double ctc = 0.0;
  double mlm = 0.0;
  double dec = 0.0;
  double joint = 0.0;
  double swap_rate = 0.0;
  double mean_segment_len = 0.0;
};

}  // namespace modalign
