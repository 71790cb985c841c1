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
#include <vector>

#include "doctest.h"
#include "modalign/ctc.hpp"
#include "modalign/oracle.hpp"
#include "modalign/rng.hpp"
#include "test_support.hpp"

using namespace modalign;

namespace {

struct Instance {
  Tensor log_probs;
  std::vector<int> targets;
};

// Random feasible instance within the exhaustive-oracle budget. Quantized
// logits come from a two-value set so distinct paths tie in score often,
// which exercises the tie rule.
Instance random_instance(Rng& rng, int max_frames, int max_len, int max_vocab, int min_len,
                         bool quantized) {
  while (true) {
    const int frames = 1 + rng.uniform_int(max_frames);
    const int vocab = 1 + rng.uniform_int(max_vocab);
    const int len = min_len + rng.uniform_int(max_len - min_len + 1);
    std::vector<int> targets(static_cast<size_t>(len));
    for (int& t : targets) t = 1 + rng.uniform_int(vocab);
    if (!ctc_feasible(frames, targets)) continue;
    const int classes = vocab + 1;
    std::vector<double> logits(static_cast<size_t>(frames) * classes);
    for (double& v : logits)
      v = quantized ? static_cast<double>(rng.uniform_int(2)) : 4.0 * rng.uniform() - 2.0;
    Tensor lp = log_softmax_rows(Tensor::from({frames, classes}, std::move(logits)));
    return {Tensor::from(lp.shape(), lp.values()), targets};
  }
}

}  // namespace

TEST_CASE("ctc_feasible: length rule with duplicate targets") {
  CHECK(ctc_feasible(3, {1, 2, 3}));
  CHECK_FALSE(ctc_feasible(2, {1, 2, 3}));
  CHECK(ctc_feasible(3, {1, 1}));
  CHECK_FALSE(ctc_feasible(2, {1, 1}));
  CHECK(ctc_feasible(1, {}));
}

TEST_CASE("ctc_loss: single frame, uniform over five classes") {
  Tensor lp = Tensor::full({1, 5}, std::log(0.2));
  CtcLossResult res = ctc_loss(lp, {1});
  CHECK(res.feasible);
  CHECK(res.loss.item() == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("ctc_loss: two frames, one target, uniform over blank and token") {
  Tensor lp = Tensor::full({2, 2}, std::log(0.5));
  CtcLossResult res = ctc_loss(lp, {1});
  // paths (a,a), (a,-), (-,a) out of 4
  CHECK(res.loss.item() == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
}

TEST_CASE("ctc_loss: empty target reduces to all-blank path") {
  Rng rng(21);
  Instance inst = random_instance(rng, 4, 0, 2, 0, false);
  CtcLossResult res = ctc_loss(inst.log_probs, {});
  double blank_sum = 0.0;
  for (int t = 0; t < inst.log_probs.rows(); ++t)
    blank_sum += inst.log_probs.at(static_cast<int64_t>(t) * inst.log_probs.cols());
  CHECK(res.loss.item() == doctest::Approx(-blank_sum).epsilon(1e-12));
  CHECK(res.loss.item() == doctest::Approx(oracle_ctc_loss(inst.log_probs, {})).epsilon(1e-12));
}

TEST_CASE("ctc_loss: infeasible instance flags and carries no gradient") {
  Tensor lp = Tensor::from({2, 3}, std::vector<double>(6, std::log(1.0 / 3.0)), true);
  CtcLossResult res = ctc_loss(lp, {1, 1});
  CHECK_FALSE(res.feasible);
  CHECK(std::isinf(res.loss.item()));
  CHECK_FALSE(res.loss.requires_grad());
}

TEST_CASE("ctc_loss: input contracts") {
  Tensor lp = Tensor::full({2, 3}, std::log(1.0 / 3.0));
  CHECK_THROWS_AS(ctc_loss(lp, {0}), ContractError);   // blank as target
  CHECK_THROWS_AS(ctc_loss(lp, {3}), IndexError);      // out of range
  CHECK_THROWS_AS(ctc_loss(Tensor::zeros({3}), {1}), ShapeError);
}

TEST_CASE("ctc_loss: matches exhaustive enumeration on random instances") {
  Rng rng(2024);
  for (int i = 0; i < 120; ++i) {
    Instance inst = random_instance(rng, 6, 3, 3, 0, i % 4 == 0);
    const double fast = ctc_loss(inst.log_probs, inst.targets).loss.item();
    const double slow = oracle_ctc_loss(inst.log_probs, inst.targets);
    CHECK(std::fabs(fast - slow) < 1e-9);
  }
}

TEST_CASE("ctc_loss: gradient matches enumeration and sums to -1 per frame") {
  Rng rng(2025);
  for (int i = 0; i < 40; ++i) {
    Instance inst = random_instance(rng, 5, 3, 3, 0, false);
    Tensor lp = Tensor::from(inst.log_probs.shape(), inst.log_probs.values(), true);
    CtcLossResult res = ctc_loss(lp, inst.targets);
    backward(res.loss);
    const std::vector<double> oracle = oracle_ctc_grad(inst.log_probs, inst.targets);
    const std::vector<double>& got = lp.grad();
    REQUIRE(got.size() == oracle.size());
    for (size_t j = 0; j < got.size(); ++j) CHECK(std::fabs(got[j] - oracle[j]) < 1e-9);
    const int classes = lp.cols();
    for (int t = 0; t < lp.rows(); ++t) {
      double row = 0.0;
      for (int k = 0; k < classes; ++k) row += got[static_cast<size_t>(t) * classes + k];
      CHECK(std::fabs(row + 1.0) < 1e-9);
    }
  }
}

TEST_CASE("ctc_loss: gradient matches finite differences through the tape") {
  Rng rng(2026);
  for (int i = 0; i < 5; ++i) {
    Instance inst = random_instance(rng, 5, 2, 2, 1, false);
    const std::vector<int> targets = inst.targets;
    const double err = testing::grad_check(
        [&](const Tensor& x) { return ctc_loss(x, targets).loss; }, inst.log_probs);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("ctc_forced_align: sharply diagonal instance") {
  // frame t overwhelmingly favors token t+1
  std::vector<double> logits(3 * 4, 0.0);
  logits[0 * 4 + 1] = 20.0;
  logits[1 * 4 + 2] = 20.0;
  logits[2 * 4 + 3] = 20.0;
  Tensor lp = log_softmax_rows(Tensor::from({3, 4}, logits));
  AlignmentPath path = ctc_forced_align(lp, {1, 2, 3});
  REQUIRE(path.segments.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(path.segments[static_cast<size_t>(i)].token_index == i);
    CHECK(path.segments[static_cast<size_t>(i)].start == i);
    CHECK(path.segments[static_cast<size_t>(i)].end == i + 1);
  }
  Vocab vocab(3);
  CHECK(format_alignment(path, {1, 2, 3}, vocab) == "0 0 1 t1\n1 1 2 t2\n2 2 3 t3\n");
}

TEST_CASE("ctc_forced_align: blank margins around a single token") {
  std::vector<double> logits(4 * 2, 0.0);
  logits[0 * 2 + 0] = 10.0;  // blank
  logits[1 * 2 + 1] = 10.0;  // token
  logits[2 * 2 + 1] = 10.0;  // token
  logits[3 * 2 + 0] = 10.0;  // blank
  Tensor lp = log_softmax_rows(Tensor::from({4, 2}, logits));
  AlignmentPath path = ctc_forced_align(lp, {1});
  REQUIRE(path.segments.size() == 1);
  CHECK(path.segments[0].token_index == 0);
  CHECK(path.segments[0].start == 1);
  CHECK(path.segments[0].end == 3);
}

TEST_CASE("ctc_forced_align: infeasible raises alignment error") {
  Tensor lp = Tensor::full({2, 3}, std::log(1.0 / 3.0));
  CHECK_THROWS_AS(ctc_forced_align(lp, {1, 1, 2}), AlignmentError);
}

TEST_CASE("ctc_forced_align: matches exhaustive search including ties") {
  Rng rng(3030);
  int tie_heavy = 0;
  for (int i = 0; i < 120; ++i) {
    const bool quantized = i % 2 == 0;
    tie_heavy += quantized;
    Instance inst = random_instance(rng, 6, 3, 3, 1, quantized);
    AlignmentPath fast = ctc_forced_align(inst.log_probs, inst.targets);
    AlignmentPath slow = oracle_forced_align(inst.log_probs, inst.targets);
    CHECK(fast.frame_labels == slow.frame_labels);
    REQUIRE(fast.segments.size() == slow.segments.size());
    for (size_t s = 0; s < fast.segments.size(); ++s) {
      CHECK(fast.segments[s].token_index == slow.segments[s].token_index);
      CHECK(fast.segments[s].start == slow.segments[s].start);
      CHECK(fast.segments[s].end == slow.segments[s].end);
    }
    const double vs = ctc_viterbi_score(inst.log_probs, inst.targets);
    CHECK(vs == doctest::Approx(oracle_viterbi_score(inst.log_probs, inst.targets)).epsilon(1e-12));
  }
  CHECK(tie_heavy > 0);
}

TEST_CASE("ctc_forced_align: fully uniform scores exercise pure tie-breaking") {
  for (int frames = 2; frames <= 6; ++frames) {
    Tensor lp = Tensor::full({frames, 4}, std::log(0.25));
    for (const std::vector<int>& targets :
         {std::vector<int>{1}, std::vector<int>{1, 2}, std::vector<int>{2, 2}}) {
      if (!ctc_feasible(frames, targets)) continue;
      AlignmentPath fast = ctc_forced_align(lp, targets);
      AlignmentPath slow = oracle_forced_align(lp, targets);
      CHECK(fast.frame_labels == slow.frame_labels);
    }
  }
}

TEST_CASE("ctc alignment properties: collapse, order, viterbi bound") {
  Rng rng(4040);
  int multi_path = 0;
  int strict = 0;
  for (int i = 0; i < 60; ++i) {
    Instance inst = random_instance(rng, 6, 3, 3, 1, false);
    AlignmentPath path = ctc_forced_align(inst.log_probs, inst.targets);

    REQUIRE(path.segments.size() == inst.targets.size());
    int prev_end = 0;
    for (size_t s = 0; s < path.segments.size(); ++s) {
      const Segment& seg = path.segments[s];
      CHECK(seg.token_index == static_cast<int>(s));
      CHECK(seg.start >= prev_end);
      CHECK(seg.end > seg.start);
      CHECK(seg.end <= inst.log_probs.rows());
      prev_end = seg.end;
    }

    const double viterbi = ctc_viterbi_score(inst.log_probs, inst.targets);
    const double forward = -ctc_loss(inst.log_probs, inst.targets).loss.item();
    CHECK(viterbi <= forward + 1e-12);
    int required = static_cast<int>(inst.targets.size());
    for (size_t s = 1; s < inst.targets.size(); ++s)
      if (inst.targets[s] == inst.targets[s - 1]) ++required;
    if (inst.log_probs.rows() > required) {
      ++multi_path;
      strict += viterbi < forward;
    }
  }
  // With several legal paths the sum strictly exceeds the max, except when
  // one path so dominates that the sum rounds to it in double precision.
  CHECK(multi_path > 20);
  CHECK(strict * 10 >= multi_path * 9);
}

TEST_CASE("ctc: viterbi strictly below forward on a uniform instance") {
  Tensor lp = Tensor::full({2, 2}, std::log(0.5));
  // forward: three paths, log(3/4); viterbi: one path, log(1/4)
  CHECK(ctc_viterbi_score(lp, {1}) == doctest::Approx(std::log(0.25)).epsilon(1e-12));
  CHECK(ctc_viterbi_score(lp, {1}) < -ctc_loss(lp, {1}).loss.item());
}

TEST_CASE("ctc_greedy_decode: collapse rule and empty case") {
  std::vector<double> logits(4 * 3, 0.0);
  logits[0 * 3 + 1] = 5.0;
  logits[1 * 3 + 1] = 5.0;
  logits[2 * 3 + 0] = 5.0;
  logits[3 * 3 + 2] = 5.0;
  Tensor lp = log_softmax_rows(Tensor::from({4, 3}, logits));
  CHECK(ctc_greedy_decode(lp) == std::vector<int>{1, 2});

  std::vector<double> blank_logits(3 * 3, 0.0);
  for (int t = 0; t < 3; ++t) blank_logits[static_cast<size_t>(t) * 3] = 5.0;
  CHECK(ctc_greedy_decode(log_softmax_rows(Tensor::from({3, 3}, blank_logits))).empty());
}

TEST_CASE("ctc_greedy_decode: equals argmax-collapse oracle on random instances") {
  Rng rng(5050);
  for (int i = 0; i < 50; ++i) {
    Instance inst = random_instance(rng, 6, 3, 3, 0, i % 3 == 0);
    const int classes = inst.log_probs.cols();
    std::vector<int> argmax(static_cast<size_t>(inst.log_probs.rows()));
    for (int t = 0; t < inst.log_probs.rows(); ++t) {
      int best = 0;
      for (int k = 1; k < classes; ++k)
        if (inst.log_probs.at(static_cast<int64_t>(t) * classes + k) >
            inst.log_probs.at(static_cast<int64_t>(t) * classes + best))
          best = k;
      argmax[static_cast<size_t>(t)] = best;
    }
    CHECK(ctc_greedy_decode(inst.log_probs) == collapse_labels(argmax));
  }
}
