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

#include <string>

#include "doctest.h"
#include "modalign/config.hpp"

using namespace modalign;

TEST_CASE("config: defaults validate and carry the documented values") {
  RunConfig cfg;
  cfg.validate();
  CHECK(cfg.mode == AblationMode::kAlignerSwitch);
  CHECK(cfg.model.d_model == 32);
  CHECK(cfg.model.subsample_factor == 2);
  CHECK(cfg.corpus.vocab_size == 20);
  CHECK(cfg.corpus.n_train == 2000);
  CHECK(cfg.weights.ctc == 0.3);
  CHECK(cfg.weights.mlm == 0.3);
  CHECK(cfg.weights.dec == 0.7);
  CHECK(cfg.schedule.p_end == 0.4);
  CHECK(cfg.adam.lr == 0.002);
  CHECK(cfg.steps == 3000);
  CHECK(cfg.eval_every == 250);
  CHECK(cfg.align_warmup_steps == 500);
  CHECK(cfg.mask_rate == 0.15);
}

TEST_CASE("config: defaults table round-trips through the parser") {
  RunConfig parsed = parse_run_config_text(default_config_text());
  CHECK(parsed.canonical() == RunConfig{}.canonical());
}

TEST_CASE("config: mode pins the mlm weight and switch schedule") {
  RunConfig baseline = parse_run_config_text("mode=baseline\nlambda_mlm=0.5\np_end=0.3\n");
  CHECK(baseline.weights.mlm == 0.0);
  CHECK(baseline.schedule.p_start == 0.0);
  CHECK(baseline.schedule.p_end == 0.0);

  RunConfig aligner = parse_run_config_text("mode=aligner\nlambda_mlm=0.5\np_end=0.3\n");
  CHECK(aligner.weights.mlm == 0.5);
  CHECK(aligner.schedule.p_end == 0.0);

  RunConfig both = parse_run_config_text("mode=aligner_switch\np_end=0.3\n");
  CHECK(both.weights.mlm == 0.3);
  CHECK(both.schedule.p_end == 0.3);

  // An aligner mode with the MLM term zeroed is contradictory.
  RunConfig bad;
  bad.mode = AblationMode::kAligner;
  bad.apply_mode();
  bad.weights.mlm = 0.0;
  CHECK_THROWS_AS(bad.validate(), ContractError);
}

TEST_CASE("config: switch probability gates on mode and alignment warmup") {
  RunConfig cfg = parse_run_config_text(
      "mode=aligner_switch\np_start=0\np_end=0.4\nswitch_warmup_steps=1000\n"
      "align_warmup_steps=500\n");
  CHECK(cfg.switch_p(0) == 0.0);
  CHECK(cfg.switch_p(499) == 0.0);
  CHECK(cfg.switch_p(500) == 0.0);                      // ramp starts here
  CHECK(cfg.switch_p(1000) == doctest::Approx(0.2));    // halfway up
  CHECK(cfg.switch_p(1500) == doctest::Approx(0.4));
  CHECK(cfg.switch_p(9999) == doctest::Approx(0.4));

  cfg.mode = AblationMode::kBaseline;
  cfg.apply_mode();
  for (int step : {0, 500, 1500}) CHECK(cfg.switch_p(step) == 0.0);
}

TEST_CASE("config: vocab and feature sizes set model and corpus together") {
  RunConfig cfg = parse_run_config_text("vocab_size=9\nfeature_dim=7\n");
  CHECK(cfg.model.vocab_size == 9);
  CHECK(cfg.corpus.vocab_size == 9);
  CHECK(cfg.model.feature_dim == 7);
  CHECK(cfg.corpus.feature_dim == 7);

  RunConfig split;
  split.model.vocab_size = 8;
  CHECK_THROWS_AS(split.validate(), ContractError);
}

TEST_CASE("config: comments and blank lines are ignored") {
  RunConfig cfg = parse_run_config_text(
      "# full-line comment\n\n  steps=12  # trailing comment\n\tseed=7\n");
  CHECK(cfg.steps == 12);
  CHECK(cfg.seed == 7);
}

TEST_CASE("config: malformed input is rejected") {
  CHECK_THROWS_AS(parse_run_config_text("nonsense=4\n"), ContractError);
  CHECK_THROWS_AS(parse_run_config_text("steps\n"), ContractError);
  CHECK_THROWS_AS(parse_run_config_text("steps=abc\n"), ContractError);
  CHECK_THROWS_AS(parse_run_config_text("tie_embeddings=maybe\n"), ContractError);
  CHECK_THROWS_AS(parse_run_config_text("mode=fancy\n"), ContractError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/modalign.cfg"), IoError);
}

TEST_CASE("config: overrides apply on top and re-pin the mode") {
  RunConfig cfg = parse_run_config_text("mode=aligner_switch\n");
  apply_overrides(cfg, {"steps=42", "mode=baseline"});
  CHECK(cfg.steps == 42);
  CHECK(cfg.mode == AblationMode::kBaseline);
  CHECK(cfg.weights.mlm == 0.0);
  CHECK_THROWS_AS(apply_overrides(cfg, {"bogus=1"}), ContractError);
}

TEST_CASE("config: hash covers the architecture only") {
  RunConfig a, b;
  b.seed = 99;
  b.steps = 5;
  b.adam.lr = 1.0;
  CHECK(a.hash() == b.hash());
  CHECK(a.canonical() != b.canonical());
  b.model.d_model = 16;
  CHECK(a.hash() != b.hash());
}
