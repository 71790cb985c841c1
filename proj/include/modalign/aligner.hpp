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

#include "modalign/ctc.hpp"
#include "modalign/encoder.hpp"
#include "modalign/tensor.hpp"
#include "modalign/vocab.hpp"

namespace modalign {

// One linear projection into the blank+content output space, physically
// shared by the speech CTC path and the text MLM path: both call the same
// instance, so either loss updates both paths.
//
// Untied mode owns a [d_model x (V+1)] weight. Tied mode borrows the first
// V+1 rows of the text encoder's embedding table as the projection matrix
// instead; the bias is always its own parameter.
class SharedAligner {
 public:
  SharedAligner(int d_model, const Vocab& vocab, Rng& rng);          // untied
  SharedAligner(const Vocab& vocab, const TextEncoder& text);        // tied

  Tensor logits(const Tensor& embeddings) const;   // [N x (V+1)]
  Tensor project(const Tensor& embeddings) const;  // row-normalized log-probs

  void collect(const std::string& prefix, ParamList& out) const;

  bool tied() const { return tied_; }
  int head_classes() const { return head_classes_; }

 private:
  bool tied_ = false;
  int d_model_ = 0;
  int head_classes_ = 0;
  Tensor weight_;  // untied only
  Tensor table_;   // tied only: the text encoder's table handle
  Tensor bias_;
};

// project then ctc_loss; inherits the feasibility flag.
CtcLossResult speech_ctc_loss(const Tensor& speech_emb, const std::vector<int>& targets,
                              const SharedAligner& aligner);

// Cross-entropy of the shared projection against the original tokens at
// masked positions only; exact zero when nothing is masked.
Tensor text_mlm_loss(const Tensor& text_emb, const MaskedBatch& masked,
                     const SharedAligner& aligner);

}  // namespace modalign
