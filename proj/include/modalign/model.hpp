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

#include "modalign/aligner.hpp"
#include "modalign/decoder.hpp"
#include "modalign/encoder.hpp"
#include "modalign/vocab.hpp"

namespace modalign {

struct ModelConfig {
  int d_model = 32;
  int n_layers = 2;  // per encoder
  int n_heads = 2;
  int d_ff = 64;
  int subsample_factor = 2;
  int dec_layers = 2;
  int vocab_size = 20;
  int feature_dim = 16;
  int max_len = 64;
  double dropout = 0.0;
  bool tie_embeddings = false;
  bool use_positional = true;

  EncoderConfig encoder_config() const;
  DecoderConfig decoder_config() const;

  // Stable hash of every architecture field; checkpoints embed it.
  uint64_t hash() const;
  std::string canonical() const;
};

// The full system: both encoders, the shared projection, and the decoder.
// Parameter creation order is fixed, so a given (config, seed) pair always
// produces the same initialization.
struct AsrModel {
  AsrModel(const ModelConfig& cfg, uint64_t init_seed);

  ModelConfig cfg;
  Vocab vocab;

 private:
  // Declared before the components so it exists while they initialize.
  Rng init_rng_;

 public:
  SpeechEncoder speech;
  TextEncoder text;
  SharedAligner aligner;
  Decoder decoder;

  // Named parameters in registry order: speech, text, aligner, decoder.
  // Tied aligners contribute only their bias (the weight is text.table).
  ParamList params() const;
};

}  // namespace modalign
