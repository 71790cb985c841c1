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

#include "modalign/metrics.hpp"

#include <algorithm>

#include "modalign/common.hpp"

namespace modalign {

EditAlignment edit_align(const std::vector<int>& ref, const std::vector<int>& hyp) {
  const int r = static_cast<int>(ref.size());
  const int h = static_cast<int>(hyp.size());
  // dp[i][j]: edit distance between ref[0..i) and hyp[0..j).
  std::vector<std::vector<int>> dp(static_cast<size_t>(r) + 1,
                                   std::vector<int>(static_cast<size_t>(h) + 1, 0));
  for (int i = 0; i <= r; ++i) dp[static_cast<size_t>(i)][0] = i;
  for (int j = 0; j <= h; ++j) dp[0][static_cast<size_t>(j)] = j;
  for (int i = 1; i <= r; ++i) {
    for (int j = 1; j <= h; ++j) {
      const int sub = dp[static_cast<size_t>(i) - 1][static_cast<size_t>(j) - 1] +
                      (ref[static_cast<size_t>(i) - 1] == hyp[static_cast<size_t>(j) - 1] ? 0 : 1);
      const int del = dp[static_cast<size_t>(i) - 1][static_cast<size_t>(j)] + 1;
      const int ins = dp[static_cast<size_t>(i)][static_cast<size_t>(j) - 1] + 1;
      dp[static_cast<size_t>(i)][static_cast<size_t>(j)] = std::min({sub, del, ins});
    }
  }

  EditAlignment out;
  int i = r, j = h;
  while (i > 0 || j > 0) {
    const int cur = dp[static_cast<size_t>(i)][static_cast<size_t>(j)];
    if (i > 0 && j > 0) {
      const bool same = ref[static_cast<size_t>(i) - 1] == hyp[static_cast<size_t>(j) - 1];
      if (cur == dp[static_cast<size_t>(i) - 1][static_cast<size_t>(j) - 1] + (same ? 0 : 1)) {
        out.steps.push_back({same ? EditOp::kMatch : EditOp::kSubstitute, i - 1, j - 1});
        same ? ++out.matches : ++out.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && cur == dp[static_cast<size_t>(i) - 1][static_cast<size_t>(j)] + 1) {
      out.steps.push_back({EditOp::kDelete, i - 1, -1});
      ++out.deletions;
      --i;
      continue;
    }
    out.steps.push_back({EditOp::kInsert, -1, j - 1});
    ++out.insertions;
    --j;
  }
  std::reverse(out.steps.begin(), out.steps.end());
  return out;
}

void WerCounts::add(const std::vector<int>& ref, const std::vector<int>& hyp) {
  if (ref.empty()) throw ContractError("WerCounts: empty reference");
  errors += edit_align(ref, hyp).distance();
  ref_len += static_cast<int>(ref.size());
}

double WerCounts::wer() const {
  if (ref_len == 0) throw ContractError("WerCounts: no references accumulated");
  return static_cast<double>(errors) / ref_len;
}

double wer(const std::vector<int>& ref, const std::vector<int>& hyp) {
  WerCounts counts;
  counts.add(ref, hyp);
  return counts.wer();
}

void SlotCounts::add(const std::vector<int>& ref_tokens, const std::vector<int>& ref_slots,
                     const std::vector<int>& hyp_tokens, const std::vector<int>& hyp_slots) {
  if (ref_tokens.size() != ref_slots.size() || hyp_tokens.size() != hyp_slots.size())
    throw ContractError("SlotCounts: tokens and slots must be the same length");
  const EditAlignment align = edit_align(ref_tokens, hyp_tokens);
  for (const EditStep& step : align.steps) {
    const int ref_tag = step.ref_index >= 0 ? ref_slots[static_cast<size_t>(step.ref_index)] : 0;
    const int hyp_tag = step.hyp_index >= 0 ? hyp_slots[static_cast<size_t>(step.hyp_index)] : 0;
    switch (step.op) {
      case EditOp::kMatch:
      case EditOp::kSubstitute:
        if (hyp_tag != 0 && hyp_tag == ref_tag) {
          ++tp;
        } else {
          if (hyp_tag != 0) ++fp;
          if (ref_tag != 0) ++fn;
        }
        break;
      case EditOp::kInsert:
        if (hyp_tag != 0) ++fp;
        break;
      case EditOp::kDelete:
        if (ref_tag != 0) ++fn;
        break;
    }
  }
}

double SlotCounts::precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp); }

double SlotCounts::recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn); }

double SlotCounts::f1() const {
  if (tp == 0 && fp == 0 && fn == 0) return 1.0;
  const double p = precision();
  const double r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

}  // namespace modalign
