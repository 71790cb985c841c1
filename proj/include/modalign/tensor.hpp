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
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "modalign/common.hpp"
#include "modalign/rng.hpp"

namespace modalign {

struct TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

// One value in the computation graph. Ops allocate a node per result and
// record a backprop closure that scatters the node's gradient into its
// inputs' gradients. Leaves (no closure) are parameters or constants.
struct TensorNode {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily, same length as value
  bool requires_grad = false;
  bool backward_done = false;  // set on a loss root once backward() ran
  std::vector<NodePtr> inputs;
  std::function<void(TensorNode&)> backprop;

  int64_t size() const { return static_cast<int64_t>(value.size()); }
  bool is_leaf() const { return !backprop; }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

// Value-semantics handle over a shared graph node. Copying a Tensor copies
// the handle, not the storage; parameters stay shared across forward passes.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double fill, bool requires_grad = false);
  static Tensor from(std::vector<int> shape, std::vector<double> data, bool requires_grad = false);
  static Tensor randn(std::vector<int> shape, double stddev, Rng& rng, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int64_t size() const { return node_->size(); }
  int rows() const { return node_->shape[0]; }
  int cols() const { return node_->shape[1]; }

  double* data() { return node_->value.data(); }
  const double* data() const { return node_->value.data(); }
  std::vector<double>& values() { return node_->value; }
  const std::vector<double>& values() const { return node_->value; }
  double at(int64_t i) const { return node_->value[static_cast<size_t>(i)]; }

  // Scalar extraction; contract-checked.
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  // Gradient read access; allocates zeros if backward never reached this node.
  const std::vector<double>& grad() const {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad() { node_->ensure_grad(); std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

  NodePtr node() const { return node_; }

 private:
  NodePtr node_;
};

// Named parameter registry, the currency between modules, the optimizer
// and checkpoints. Entries are handles: copying the list shares storage.
using ParamList = std::vector<std::pair<std::string, Tensor>>;

// Reverse-mode sweep from a scalar loss. Gradients of leaf tensors
// accumulate across calls (explicit zero_grad resets them); intermediate
// node gradients are scratch and reset per call. A second backward() on
// the same loss root is rejected.
void backward(const Tensor& loss);

// ---- ops ------------------------------------------------------------

// C[m,n] = A[m,k] * B[k,n]
Tensor matmul(const Tensor& a, const Tensor& b);
// C[m,n] = A[m,k] * B[n,k]^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);        // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);        // elementwise
Tensor scale(const Tensor& x, double c);
Tensor add_row_bias(const Tensor& x, const Tensor& bias);  // [n,c] + [c]
Tensor relu(const Tensor& x);
Tensor sum(const Tensor& x);                         // -> scalar
Tensor mean(const Tensor& x);                        // -> scalar

// Row-wise softmax / log-softmax over the last axis of a 2-D tensor,
// computed with max-subtraction.
Tensor softmax_rows(const Tensor& x);
Tensor log_softmax_rows(const Tensor& x);
// Softmax where row i sees only columns [0, limits[i]); the rest get
// exactly zero probability and no gradient. Used for causal attention.
Tensor softmax_rows_limited(const Tensor& x, const std::vector<int>& limits);

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);

// Mean negative log-softmax probability over unignored positions.
// `ignore` may be empty (nothing ignored) or one flag per row.
// All rows ignored -> exact zero with zero gradient.
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                     const std::vector<uint8_t>& ignore = {});

// out[r] = mean of input rows [r*factor, min((r+1)*factor, T)); ceil(T/factor) rows.
Tensor mean_pool_rows(const Tensor& x, int factor);

// Row gather: out[i] = table[ids[i]].
Tensor embedding_rows(const Tensor& table, const std::vector<int>& ids);

Tensor slice_rows(const Tensor& x, int start, int len);
Tensor slice_cols(const Tensor& x, int start, int len);
Tensor concat_cols(const std::vector<Tensor>& xs);

// x + a constant row matrix (no gradient into the constant).
Tensor add_const(const Tensor& x, const std::vector<double>& c);

// Inverted dropout; identity when training is false or rate == 0.
Tensor dropout(const Tensor& x, double rate, Rng& rng, bool training);

// Row mixer for modality switching: source[t] = {0, i} copies speech row i,
// {1, j} copies text row j. Gradients route to whichever source supplied
// each row; copies are bit-exact.
Tensor mix_rows(const Tensor& speech, const Tensor& text,
                const std::vector<std::pair<int, int>>& source);

// Weighted sum of scalar tensors.
Tensor weighted_sum(const std::vector<std::pair<double, Tensor>>& terms);

// True when every stored value is finite.
bool all_finite(const Tensor& x);

}  // namespace modalign
