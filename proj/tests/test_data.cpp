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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "modalign/data.hpp"
#include "test_support.hpp"

using namespace modalign;

namespace {

// Small corpus the whole suite shares; kept at the default F=16 so the
// nearest-prototype check has headroom at sigma=0.1.
CorpusConfig small_config() {
  CorpusConfig cfg;
  cfg.vocab_size = 12;
  cfg.feature_dim = 16;
  cfg.n_train = 80;
  cfg.n_dev = 12;
  cfg.n_test = 12;
  cfg.len_min = 2;
  cfg.len_max = 6;
  cfg.dur_min = 2;
  cfg.dur_max = 4;
  cfg.noise_sigma = 0.1;
  cfg.silence_prob = 0.4;
  cfg.seed = 11;
  return cfg;
}

std::vector<const Utterance*> all_utterances(const Corpus& c) {
  std::vector<const Utterance*> all;
  for (const auto* split : {&c.train, &c.dev, &c.test})
    for (const Utterance& u : *split) all.push_back(&u);
  return all;
}

// Per-frame ids implied by true_segments: token over its span, silence
// (id 0) elsewhere.
std::vector<int> frame_ids(const Utterance& u) {
  std::vector<int> ids(static_cast<size_t>(u.features.rows()), 0);
  for (size_t i = 0; i < u.true_segments.size(); ++i) {
    const Segment& s = u.true_segments[i];
    for (int t = s.start; t < s.end; ++t) ids[static_cast<size_t>(t)] = u.tokens[i];
  }
  return ids;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::filesystem::path fresh_dir(const std::string& name) {
  std::filesystem::path dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("data: sigma 0 renders identical prototype rows") {
  CorpusConfig cfg = small_config();
  cfg.noise_sigma = 0.0;
  cfg.dur_min = cfg.dur_max = 3;
  cfg.silence_prob = 0.0;
  Rng rng(5);
  Tensor protos = make_prototypes(cfg, rng);
  Utterance u = render_utterance({7}, cfg, protos, rng);
  REQUIRE(u.features.rows() == 3);
  REQUIRE(u.true_segments.size() == 1);
  CHECK(u.true_segments[0].start == 0);
  CHECK(u.true_segments[0].end == 3);
  for (int t = 0; t < 3; ++t)
    for (int f = 0; f < cfg.feature_dim; ++f)
      CHECK(u.features.at(t * cfg.feature_dim + f) == protos.at(7 * cfg.feature_dim + f));
}

TEST_CASE("data: frames account for durations plus silence") {
  CorpusConfig cfg = small_config();
  Corpus corpus = generate_corpus(cfg);
  for (const Utterance* u : all_utterances(corpus)) {
    REQUIRE(u->true_segments.size() == u->tokens.size());
    REQUIRE(!u->true_segments.empty());
    int last_end = u->true_segments.front().start;
    int token_frames = 0;
    for (const Segment& s : u->true_segments) {
      CHECK(s.start == last_end);  // token spans tile without gaps
      CHECK(s.end - s.start >= cfg.dur_min);
      CHECK(s.end - s.start <= cfg.dur_max);
      token_frames += s.end - s.start;
      last_end = s.end;
    }
    const int lead = u->true_segments.front().start;
    const int trail = static_cast<int>(u->features.rows()) - last_end;
    CHECK(lead >= 0);
    CHECK(trail >= 0);
    CHECK(lead + token_frames + trail == u->features.rows());
  }
}

TEST_CASE("data: requested counts and length range honored") {
  CorpusConfig cfg = small_config();
  Corpus corpus = generate_corpus(cfg);
  CHECK(corpus.train.size() == static_cast<size_t>(cfg.n_train));
  CHECK(corpus.dev.size() == static_cast<size_t>(cfg.n_dev));
  CHECK(corpus.test.size() == static_cast<size_t>(cfg.n_test));
  for (const Utterance* u : all_utterances(corpus)) {
    CHECK(u->tokens.size() >= static_cast<size_t>(cfg.len_min));
    CHECK(u->tokens.size() <= static_cast<size_t>(cfg.len_max));
    for (int tok : u->tokens) {
      CHECK(tok >= 1);
      CHECK(tok <= cfg.vocab_size);
    }
  }
}

TEST_CASE("data: nearest prototype recovers frame ids at sigma 0.1") {
  CorpusConfig cfg = small_config();
  Corpus corpus = generate_corpus(cfg);
  int total = 0, correct = 0;
  for (const Utterance* u : all_utterances(corpus)) {
    const std::vector<int> ids = frame_ids(*u);
    for (int t = 0; t < u->features.rows(); ++t) {
      int best = -1;
      double best_d2 = 0.0;
      for (int p = 0; p <= cfg.vocab_size; ++p) {
        double d2 = 0.0;
        for (int f = 0; f < cfg.feature_dim; ++f) {
          const double d = u->features.at(t * cfg.feature_dim + f) -
                           corpus.prototypes.at(p * cfg.feature_dim + f);
          d2 += d * d;
        }
        if (best < 0 || d2 < best_d2) {
          best = p;
          best_d2 = d2;
        }
      }
      ++total;
      if (best == ids[static_cast<size_t>(t)]) ++correct;
    }
  }
  CHECK(total > 1000);
  CHECK(static_cast<double>(correct) >= 0.99 * static_cast<double>(total));
}

TEST_CASE("data: prototype pairwise separation holds") {
  CorpusConfig cfg = small_config();
  cfg.noise_sigma = 0.3;
  Rng rng(9);
  Tensor protos = make_prototypes(cfg, rng);
  const double bound = 2.0 * cfg.noise_sigma * std::sqrt(static_cast<double>(cfg.feature_dim));
  for (int a = 0; a <= cfg.vocab_size; ++a) {
    for (int b = a + 1; b <= cfg.vocab_size; ++b) {
      double d2 = 0.0;
      for (int f = 0; f < cfg.feature_dim; ++f) {
        const double d =
            protos.at(a * cfg.feature_dim + f) - protos.at(b * cfg.feature_dim + f);
        d2 += d * d;
      }
      CHECK(std::sqrt(d2) >= bound);
    }
  }
}

TEST_CASE("data: token unigram is uniform within 3 sigma binomial bounds") {
  CorpusConfig cfg = small_config();
  cfg.n_train = 400;
  Corpus corpus = generate_corpus(cfg);
  std::vector<int> counts(static_cast<size_t>(cfg.vocab_size) + 1, 0);
  int n = 0;
  for (const Utterance& u : corpus.train) {
    for (int tok : u.tokens) {
      ++counts[static_cast<size_t>(tok)];
      ++n;
    }
  }
  const double p = 1.0 / cfg.vocab_size;
  const double bound = 3.0 * std::sqrt(n * p * (1.0 - p));
  for (int tok = 1; tok <= cfg.vocab_size; ++tok)
    CHECK(std::fabs(counts[static_cast<size_t>(tok)] - n * p) <= bound);
}

TEST_CASE("data: slot tags are a pure function of token id") {
  CorpusConfig cfg = small_config();
  Corpus corpus = generate_corpus(cfg);
  REQUIRE(corpus.slot_map.size() == static_cast<size_t>(cfg.vocab_size) + 1);
  for (const Utterance* u : all_utterances(corpus)) {
    REQUIRE(u->slots.size() == u->tokens.size());
    for (size_t i = 0; i < u->tokens.size(); ++i)
      CHECK(u->slots[i] == corpus.slot_map[static_cast<size_t>(u->tokens[i])]);
  }
  int n_o = 0;
  for (int tok = 1; tok <= cfg.vocab_size; ++tok) {
    const int tag = corpus.slot_map[static_cast<size_t>(tok)];
    CHECK(tag >= 0);
    CHECK(tag <= cfg.n_slot_types);
    if (tag == 0) ++n_o;
  }
  CHECK(n_o == static_cast<int>(std::lround(cfg.o_fraction * cfg.vocab_size)));
}

TEST_CASE("data: one slot type and no O fraction collapse to a single tag") {
  CorpusConfig cfg = small_config();
  cfg.n_slot_types = 1;
  cfg.o_fraction = 0.0;
  Rng rng(3);
  std::vector<int> slot_map = make_slot_map(cfg, rng);
  for (int tok = 1; tok <= cfg.vocab_size; ++tok) CHECK(slot_map[static_cast<size_t>(tok)] == 1);
  std::vector<int> tags = assign_slots({4, 4, 9}, slot_map);
  CHECK(tags == std::vector<int>{1, 1, 1});
}

TEST_CASE("data: same seed produces byte-identical corpora on disk") {
  CorpusConfig cfg = small_config();
  cfg.n_train = 20;
  cfg.n_dev = 4;
  cfg.n_test = 4;
  const std::filesystem::path a = fresh_dir("modalign_data_a");
  const std::filesystem::path b = fresh_dir("modalign_data_b");
  save_corpus(generate_corpus(cfg), a.string());
  save_corpus(generate_corpus(cfg), b.string());
  for (const char* name : {"manifest.txt", "prototypes.feats", "train.feats", "dev.feats",
                           "test.feats"})
    CHECK(read_bytes((a / name).string()) == read_bytes((b / name).string()));
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
}

TEST_CASE("data: save and load round-trip every field") {
  CorpusConfig cfg = small_config();
  cfg.n_train = 16;
  cfg.n_dev = 5;
  cfg.n_test = 5;
  Corpus corpus = generate_corpus(cfg);
  const std::filesystem::path dir = fresh_dir("modalign_data_rt");
  save_corpus(corpus, dir.string());
  Corpus loaded = load_corpus(dir.string());

  CHECK(loaded.config.canonical() == corpus.config.canonical());
  CHECK(loaded.slot_map == corpus.slot_map);
  CHECK(testing::bitwise_equal(loaded.prototypes, corpus.prototypes));
  const std::vector<const Utterance*> want = all_utterances(corpus);
  const std::vector<const Utterance*> got = all_utterances(loaded);
  REQUIRE(want.size() == got.size());
  for (size_t i = 0; i < want.size(); ++i) {
    CHECK(got[i]->tokens == want[i]->tokens);
    CHECK(got[i]->slots == want[i]->slots);
    REQUIRE(got[i]->true_segments.size() == want[i]->true_segments.size());
    for (size_t s = 0; s < want[i]->true_segments.size(); ++s) {
      CHECK(got[i]->true_segments[s].start == want[i]->true_segments[s].start);
      CHECK(got[i]->true_segments[s].end == want[i]->true_segments[s].end);
    }
    CHECK(testing::bitwise_equal(got[i]->features, want[i]->features));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("data: loader rejects missing and tampered corpora") {
  CHECK_THROWS_AS(load_corpus("/nonexistent/modalign"), IoError);

  CorpusConfig cfg = small_config();
  cfg.n_train = 4;
  cfg.n_dev = 2;
  cfg.n_test = 2;
  const std::filesystem::path dir = fresh_dir("modalign_data_bad");
  save_corpus(generate_corpus(cfg), dir.string());

  SUBCASE("wrong format tag") {
    std::string manifest = read_bytes((dir / "manifest.txt").string());
    manifest.replace(manifest.find("modalign-corpus-v1"), 18, "modalign-corpus-v9");
    std::ofstream((dir / "manifest.txt").string()) << manifest;
    CHECK_THROWS_AS(load_corpus(dir.string()), IoError);
  }
  SUBCASE("config hash mismatch") {
    std::string manifest = read_bytes((dir / "manifest.txt").string());
    const size_t at = manifest.find("config_hash=") + 12;
    manifest[at] = manifest[at] == '0' ? '1' : '0';
    std::ofstream((dir / "manifest.txt").string()) << manifest;
    CHECK_THROWS_AS(load_corpus(dir.string()), IoError);
  }
  SUBCASE("truncated feature block") {
    std::string bytes = read_bytes((dir / "train.feats").string());
    std::ofstream((dir / "train.feats").string(), std::ios::binary)
        << bytes.substr(0, bytes.size() - 9);
    CHECK_THROWS_AS(load_corpus(dir.string()), IoError);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("data: config contracts") {
  CorpusConfig cfg = small_config();
  cfg.vocab_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = small_config();
  cfg.len_min = 5;
  cfg.len_max = 4;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = small_config();
  cfg.noise_sigma = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = small_config();
  cfg.o_fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
}
