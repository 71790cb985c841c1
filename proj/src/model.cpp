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

#include "modalign/model.hpp"

namespace modalign {

namespace {

SharedAligner make_aligner(const ModelConfig& cfg, const Vocab& vocab, const TextEncoder& text,
                           Rng& rng) {
  if (cfg.tie_embeddings) return SharedAligner(vocab, text);
  return SharedAligner(cfg.d_model, vocab, rng);
}

}  // namespace

EncoderConfig ModelConfig::encoder_config() const {
  EncoderConfig e;
  e.d_model = d_model;
  e.n_layers = n_layers;
  e.n_heads = n_heads;
  e.d_ff = d_ff;
  e.subsample_factor = subsample_factor;
  e.vocab_size = vocab_size;
  e.feature_dim = feature_dim;
  e.max_len = max_len;
  e.dropout = dropout;
  e.use_positional = use_positional;
  return e;
}

DecoderConfig ModelConfig::decoder_config() const {
  DecoderConfig d;
  d.d_model = d_model;
  d.n_layers = dec_layers;
  d.n_heads = n_heads;
  d.d_ff = d_ff;
  d.vocab_size = vocab_size;
  d.max_len = max_len;
  d.dropout = dropout;
  return d;
}

std::string ModelConfig::canonical() const {
  std::string s;
  s += "d_model=" + std::to_string(d_model);
  s += "|n_layers=" + std::to_string(n_layers);
  s += "|n_heads=" + std::to_string(n_heads);
  s += "|d_ff=" + std::to_string(d_ff);
  s += "|subsample_factor=" + std::to_string(subsample_factor);
  s += "|dec_layers=" + std::to_string(dec_layers);
  s += "|vocab_size=" + std::to_string(vocab_size);
  s += "|feature_dim=" + std::to_string(feature_dim);
  s += "|max_len=" + std::to_string(max_len);
  s += "|dropout=" + std::to_string(dropout);
  s += "|tie_embeddings=" + std::to_string(tie_embeddings ? 1 : 0);
  s += "|use_positional=" + std::to_string(use_positional ? 1 : 0);
  return s;
}

uint64_t ModelConfig::hash() const { return fnv1a64(canonical()); }

AsrModel::AsrModel(const ModelConfig& model_cfg, uint64_t init_seed)
    : cfg(model_cfg),
      vocab(model_cfg.vocab_size),
      init_rng_(init_seed),
      speech(model_cfg.encoder_config(), init_rng_),
      text(model_cfg.encoder_config(), init_rng_),
      aligner(make_aligner(model_cfg, vocab, text, init_rng_)),
      decoder(model_cfg.decoder_config(), init_rng_) {}

ParamList AsrModel::params() const {
  ParamList out;
  speech.collect("speech", out);
  text.collect("text", out);
  aligner.collect("aligner", out);
  decoder.collect("dec", out);
  return out;
}

}  // namespace modalign
