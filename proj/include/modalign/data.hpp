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
#include <vector>

#include "modalign/ctc.hpp"
#include "modalign/rng.hpp"
#include "modalign/tensor.hpp"

namespace modalign {

struct CorpusConfig {
  int vocab_size = 20;   // content tokens V
  int feature_dim = 16;  // F
  int n_train = 2000;
  int n_dev = 200;
  int n_test = 200;
  int len_min = 2;
  int len_max = 10;
  int dur_min = 2;  // frames per token
  int dur_max = 6;
  double noise_sigma = 0.3;
  double silence_prob = 0.2;  // leading and trailing, independently
  int n_slot_types = 4;
  double o_fraction = 0.5;  // fraction of the vocabulary tagged O
  uint64_t seed = 1;

  void validate() const;
  std::string canonical() const;
  uint64_t hash() const;
};

// One synthetic utterance. tokens are content ids in 1..V; slots[i] tags
// tokens[i] (0 = O, 1..n_slot_types otherwise); true_segments[i] is the
// frame span the renderer gave tokens[i], at the raw (pre-subsampling)
// frame rate. Spans tile [0, T) except optional silence at either end.
struct Utterance {
  std::vector<int> tokens;
  std::vector<int> slots;
  Tensor features;  // [T x F], no grad
  std::vector<Segment> true_segments;
};

// A generated corpus plus the per-corpus state the splits share: one
// prototype row per id (row 0 = silence, rows 1..V = tokens) and the fixed
// token->slot map (index by token id; entry 0 unused).
struct Corpus {
  CorpusConfig config;
  Tensor prototypes;  // [(V+1) x F]
  std::vector<int> slot_map;
  std::vector<Utterance> train;
  std::vector<Utterance> dev;
  std::vector<Utterance> test;
};

// Prototype rows sampled standard-normal, rejection-sampled until every
// pairwise distance is >= 2*noise_sigma*sqrt(F) so frames stay separable
// under the configured noise.
Tensor make_prototypes(const CorpusConfig& cfg, Rng& rng);

// Fixed random token->slot map: a shuffled o_fraction of the vocabulary is
// tagged O (0), every other token draws a slot type in 1..n_slot_types.
std::vector<int> make_slot_map(const CorpusConfig& cfg, Rng& rng);

// Pure per-token lookup into the corpus slot map.
std::vector<int> assign_slots(const std::vector<int>& tokens, const std::vector<int>& slot_map);

// Renders tokens into frames. Draw order is part of the format: leading
// silence flag (and duration if set), one duration per token, trailing
// silence flag (and duration), then row-major frame noise. Every frame is
// its id's prototype plus Gaussian noise(noise_sigma); slots are left empty.
Utterance render_utterance(const std::vector<int>& tokens, const CorpusConfig& cfg,
                           const Tensor& prototypes, Rng& rng);

// Deterministic from cfg.seed: prototypes and the slot map come from the
// "proto" / "slots" child streams, utterance i of a split from the stream
// derived with the split name and i, so any generation schedule produces
// the same corpus.
Corpus generate_corpus(const CorpusConfig& cfg);

// On-disk layout under dir/: manifest.txt (key=value header, then one
// "utt <split> <index> tokens=... slots=... segments=..." line per
// utterance), prototypes.feats, and train/dev/test.feats holding one block
// per utterance: int32 T, int32 F, then T*F little-endian float64 values
// row-major.
void save_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);

}  // namespace modalign
