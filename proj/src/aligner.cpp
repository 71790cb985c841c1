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

#include "modalign/aligner.hpp"

#include <cmath>

namespace modalign {

SharedAligner::SharedAligner(int d_model, const Vocab& vocab, Rng& rng)
    : tied_(false), d_model_(d_model), head_classes_(vocab.head_classes()) {
  weight_ = Tensor::randn({d_model, head_classes_}, 1.0 / std::sqrt(static_cast<double>(d_model)),
                          rng, /*requires_grad=*/true);
  bias_ = Tensor::zeros({head_classes_}, /*requires_grad=*/true);
}

SharedAligner::SharedAligner(const Vocab& vocab, const TextEncoder& text)
    : tied_(true),
      d_model_(text.config().d_model),
      head_classes_(vocab.head_classes()),
      table_(text.table()) {
  if (table_.rows() < head_classes_)
    throw ContractError("SharedAligner: embedding table smaller than the head");
  bias_ = Tensor::zeros({head_classes_}, /*requires_grad=*/true);
}

Tensor SharedAligner::logits(const Tensor& embeddings) const {
  if (embeddings.ndim() != 2 || embeddings.cols() != d_model_)
    throw ShapeError("SharedAligner: embeddings " + shape_str(embeddings.shape()) +
                     " do not match d_model " + std::to_string(d_model_));
  if (tied_)
    return add_row_bias(matmul_nt(embeddings, slice_rows(table_, 0, head_classes_)), bias_);
  return add_row_bias(matmul(embeddings, weight_), bias_);
}

Tensor SharedAligner::project(const Tensor& embeddings) const {
  return log_softmax_rows(logits(embeddings));
}

void SharedAligner::collect(const std::string& prefix, ParamList& out) const {
  if (!tied_) out.emplace_back(prefix + ".w", weight_);
  out.emplace_back(prefix + ".b", bias_);
}

CtcLossResult speech_ctc_loss(const Tensor& speech_emb, const std::vector<int>& targets,
                              const SharedAligner& aligner) {
  return ctc_loss(aligner.project(speech_emb), targets);
}

Tensor text_mlm_loss(const Tensor& text_emb, const MaskedBatch& masked,
                     const SharedAligner& aligner) {
  if (masked.original_tokens.size() != masked.masked.size())
    throw ContractError("text_mlm_loss: malformed MaskedBatch");
  std::vector<uint8_t> ignore(masked.masked.size());
  bool any = false;
  for (size_t i = 0; i < masked.masked.size(); ++i) {
    ignore[i] = masked.masked[i] ? 0 : 1;
    any = any || masked.masked[i];
  }
  if (!any) return Tensor::scalar(0.0);
  return cross_entropy(aligner.logits(text_emb), masked.original_tokens, ignore);
}

}  // namespace modalign
