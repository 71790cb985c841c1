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

#include <vector>

namespace modalign {

enum class EditOp { kMatch, kSubstitute, kDelete, kInsert };

// One step of a minimum-edit-distance alignment. ref_index is -1 for
// insertions, hyp_index is -1 for deletions.
struct EditStep {
  EditOp op;
  int ref_index;
  int hyp_index;
};

struct EditAlignment {
  std::vector<EditStep> steps;  // in reference order
  int matches = 0;
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;

  int distance() const { return substitutions + deletions + insertions; }
};

// Levenshtein alignment with unit costs. The backtrace is deterministic:
// on ties it takes the diagonal (match or substitution) first, then a
// deletion, then an insertion, so every scorer built on it reproduces
// exactly.
EditAlignment edit_align(const std::vector<int>& ref, const std::vector<int>& hyp);

// Micro-averaged WER accumulator: (S + D + I) / total reference length.
struct WerCounts {
  int errors = 0;
  int ref_len = 0;

  void add(const std::vector<int>& ref, const std::vector<int>& hyp);
  double wer() const;
};

// Single-pair convenience wrapper.
double wer(const std::vector<int>& ref, const std::vector<int>& hyp);

// Micro-averaged slot F1 over non-O tags (0 = O). Aligned pairs count a
// true positive when both tags agree and are non-O; a non-O hypothesis tag
// that misses (mismatch or insertion) is a false positive; a non-O
// reference tag that is missed (mismatch or deletion) is a false negative.
struct SlotCounts {
  int tp = 0;
  int fp = 0;
  int fn = 0;

  // Aligns by tokens (the same alignment WER uses), then scores tags.
  void add(const std::vector<int>& ref_tokens, const std::vector<int>& ref_slots,
           const std::vector<int>& hyp_tokens, const std::vector<int>& hyp_slots);

  double precision() const;
  double recall() const;
  // 0 when nothing was retrieved or retrievable; 1 when there was nothing
  // to find and nothing was claimed.
  double f1() const;
};

}  // namespace modalign
