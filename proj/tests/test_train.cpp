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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "modalign/checkpoint.hpp"
#include "modalign/train.hpp"
#include "test_support.hpp"

using namespace modalign;

namespace {

// Desk-scale run: a handful of steps on a toy corpus, seconds at most.
RunConfig tiny_config() {
  RunConfig cfg;
  cfg.model.d_model = 8;
  cfg.model.n_layers = 1;
  cfg.model.n_heads = 2;
  cfg.model.d_ff = 16;
  cfg.model.dec_layers = 1;
  cfg.model.max_len = 32;
  cfg.model.vocab_size = 6;
  cfg.model.feature_dim = 8;
  cfg.corpus.vocab_size = 6;
  cfg.corpus.feature_dim = 8;
  cfg.corpus.n_train = 12;
  cfg.corpus.n_dev = 4;
  cfg.corpus.n_test = 4;
  cfg.corpus.len_min = 2;
  cfg.corpus.len_max = 4;
  cfg.corpus.dur_min = 2;
  cfg.corpus.dur_max = 3;
  cfg.corpus.seed = 21;
  cfg.steps = 4;
  cfg.eval_every = 2;
  cfg.align_warmup_steps = 1;
  cfg.schedule.warmup_steps = 2;
  cfg.seed = 5;
  cfg.apply_mode();
  cfg.validate();
  return cfg;
}

std::string strip_wall(const std::string& line) {
  const size_t at = line.find(" wall_ms:");
  REQUIRE(at != std::string::npos);
  CHECK(line.find(' ', at + 1) == std::string::npos);  // wall_ms is the last field
  return line.substr(0, at);
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string tmp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("train: zero steps checkpoints the initialization") {
  RunConfig cfg = tiny_config();
  cfg.steps = 0;
  Corpus corpus = generate_corpus(cfg.corpus);
  const std::string run_path = tmp_file("modalign_train_zero.ckpt");
  const std::string init_path = tmp_file("modalign_train_init.ckpt");
  train_run(cfg, corpus, nullptr, run_path);
  AsrModel init = make_model(cfg);
  save_checkpoint(init_path, cfg.hash(), init.params());
  CHECK(read_bytes(run_path) == read_bytes(init_path));
  std::filesystem::remove(run_path);
  std::filesystem::remove(init_path);
}

TEST_CASE("train: same seed reproduces the metrics stream bit for bit") {
  RunConfig cfg = tiny_config();
  Corpus corpus = generate_corpus(cfg.corpus);
  std::ostringstream first, second;
  TrainResult a = train_run(cfg, corpus, &first);
  TrainResult b = train_run(cfg, corpus, &second);

  std::stringstream sa(first.str()), sb(second.str());
  std::string la, lb;
  int lines = 0;
  while (std::getline(sa, la)) {
    REQUIRE(std::getline(sb, lb));
    CHECK(strip_wall(la) == strip_wall(lb));
    ++lines;
  }
  CHECK(!std::getline(sb, lb));
  CHECK(lines == static_cast<int>(a.records.size()));

  CHECK(a.dev.wer == b.dev.wer);
  CHECK(a.dev.slot_f1 == b.dev.slot_f1);
  CHECK(a.test.wer == b.test.wer);
  CHECK(a.test.slot_f1 == b.test.slot_f1);
  CHECK(a.infeasible_skipped == b.infeasible_skipped);
}

TEST_CASE("train: metrics records are well-formed and monotone") {
  RunConfig cfg = tiny_config();
  Corpus corpus = generate_corpus(cfg.corpus);
  std::ostringstream out;
  TrainResult result = train_run(cfg, corpus, &out);

  // steps=4, eval_every=2: records at steps 2 and 4, the last also final.
  REQUIRE(result.records.size() == 2);
  CHECK(result.records[0].losses.step == 2);
  CHECK(result.records[1].losses.step == 4);
  for (const MetricsRecord& rec : result.records) {
    const std::string line = format_metrics_line(rec);
    CHECK(line.find("step:") == 0);
    for (const char* key : {" ctc:", " mlm:", " dec:", " joint:", " swap_rate:",
                            " mean_segment_len:", " dev_wer:", " dev_slot_f1:", " infeasible:",
                            " wall_ms:"})
      CHECK(line.find(key) != std::string::npos);
    strip_wall(line);  // asserts wall_ms is last
  }
  CHECK(result.dev.wer == result.records.back().dev.wer);
}

TEST_CASE("train: checkpoint round-trip reproduces eval metrics exactly") {
  RunConfig cfg = tiny_config();
  Corpus corpus = generate_corpus(cfg.corpus);
  const std::string path = tmp_file("modalign_train_rt.ckpt");
  TrainResult result = train_run(cfg, corpus, nullptr, path);

  AsrModel restored = make_model(cfg);
  load_checkpoint(path, cfg.hash(), restored.params());
  EvalResult dev = evaluate(restored, corpus.dev, corpus.slot_map);
  CHECK(dev.wer == result.dev.wer);
  CHECK(dev.slot_f1 == result.dev.slot_f1);
  CHECK(dev.boundary_mae == result.dev.boundary_mae);
  CHECK(dev.boundary_overlap == result.dev.boundary_overlap);

  EvalResult again = evaluate(restored, corpus.dev, corpus.slot_map);
  CHECK(again.wer == dev.wer);
  CHECK(again.slot_f1 == dev.slot_f1);
  std::filesystem::remove(path);
}

TEST_CASE("train: non-finite loss aborts with a diagnostic") {
  RunConfig cfg = tiny_config();
  Corpus corpus = generate_corpus(cfg.corpus);
  Trainer trainer(cfg, corpus);
  ParamList params = trainer.model().params();
  REQUIRE(!params.empty());
  params.front().second.values()[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(trainer.step(), NanAbort);
}

TEST_CASE("train: every draw infeasible trips the attempt cap") {
  RunConfig cfg = tiny_config();
  // One-token vocabulary, length-2 utterances, single-frame durations: after
  // 2x subsampling every lattice needs 3 frames but has 1.
  cfg.model.vocab_size = 1;
  cfg.corpus.vocab_size = 1;
  cfg.corpus.len_min = cfg.corpus.len_max = 2;
  cfg.corpus.dur_min = cfg.corpus.dur_max = 1;
  cfg.corpus.silence_prob = 0.0;
  cfg.validate();
  Corpus corpus = generate_corpus(cfg.corpus);
  Trainer trainer(cfg, corpus);
  CHECK_THROWS_AS(trainer.step(), ContractError);
  CHECK(trainer.infeasible_skipped() > cfg.corpus.n_train);
}

TEST_CASE("train: compare rejects bad inputs and ties identical arms") {
  RunConfig base = tiny_config();
  base.mode = AblationMode::kBaseline;
  base.apply_mode();
  base.steps = 2;
  Corpus corpus = generate_corpus(base.corpus);

  CHECK_THROWS_AS(compare_ablations({base}, {1, 2, 3}, corpus, nullptr), ContractError);
  CHECK_THROWS_AS(compare_ablations({base, base}, {1, 2}, corpus, nullptr), ContractError);

  RunConfig other = base;
  other.corpus.noise_sigma = 0.05;
  CHECK_THROWS_AS(compare_ablations({base, other}, {1, 2, 3}, corpus, nullptr), ContractError);

  std::ostringstream progress;
  ComparisonTable table = compare_ablations({base, base}, {1, 2, 3}, corpus, &progress);
  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[0].mode == "baseline");
  CHECK(table.rows[0].wers == table.rows[1].wers);
  CHECK(table.rows[1].rel_wer_delta == 0.0);
  CHECK(table.machine_readable().find("mode:baseline") != std::string::npos);
}
