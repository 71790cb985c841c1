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

#include "modalign/tensor.hpp"

#include <algorithm>
#include <unordered_set>

namespace modalign {

namespace {

int64_t shape_numel(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

NodePtr make_leaf(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
  auto node = std::make_shared<TensorNode>();
  if (shape_numel(shape) != static_cast<int64_t>(data.size()))
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  return node;
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  std::vector<double> data(static_cast<size_t>(shape_numel(shape)), 0.0);
  return Tensor(make_leaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::full(std::vector<int> shape, double fill, bool requires_grad) {
  std::vector<double> data(static_cast<size_t>(shape_numel(shape)), fill);
  return Tensor(make_leaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
  return Tensor(make_leaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::randn(std::vector<int> shape, double stddev, Rng& rng, bool requires_grad) {
  std::vector<double> data(static_cast<size_t>(shape_numel(shape)));
  for (double& v : data) v = stddev * rng.normal();
  return Tensor(make_leaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return Tensor(make_leaf({1}, {v}, requires_grad));
}

double Tensor::item() const {
  if (!node_ || node_->value.size() != 1)
    throw ContractError("item(): tensor is not a scalar");
  return node_->value[0];
}

void backward(const Tensor& loss) {
  NodePtr root = loss.node();
  if (!root) throw ContractError("backward: undefined tensor");
  if (root->value.size() != 1)
    throw ContractError("backward: loss must be a scalar, got shape " + shape_str(root->shape));
  if (root->backward_done)
    throw ContractError("backward: tape for this loss was already consumed");
  root->backward_done = true;

  // Topological order via iterative post-order DFS.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->inputs.size()) {
      TensorNode* child = node->inputs[next_child].get();
      ++next_child;
      if (child->requires_grad && visited.insert(child).second)
        stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Intermediate gradients are per-sweep scratch; leaf gradients persist
  // so separate losses accumulate.
  for (TensorNode* node : order) {
    node->ensure_grad();
    if (!node->is_leaf() && node != root.get())
      std::fill(node->grad.begin(), node->grad.end(), 0.0);
  }
  if (!root->is_leaf()) std::fill(root->grad.begin(), root->grad.end(), 0.0);
  root->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* node = *it;
    if (node->backprop) node->backprop(*node);
  }
}

bool all_finite(const Tensor& x) {
  for (double v : x.values())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace modalign
