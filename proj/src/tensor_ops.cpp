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

#include <algorithm>
#include <cmath>

#include "modalign/tensor.hpp"

namespace modalign {

namespace {

NodePtr make_op(std::vector<int> shape, std::vector<double> value,
                std::vector<NodePtr> inputs,
                std::function<void(TensorNode&)> backprop) {
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->inputs = std::move(inputs);
  for (const auto& in : node->inputs)
    node->requires_grad = node->requires_grad || in->requires_grad;
  if (node->requires_grad) node->backprop = std::move(backprop);
  return node;
}

void require_2d(const Tensor& x, const char* op) {
  if (x.ndim() != 2)
    throw ShapeError(std::string(op) + ": expected 2-D tensor, got " + shape_str(x.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
}

// Row-wise log-sum-exp with max shift; probs (optional) receives softmax.
double row_lse(const double* x, int c, double* probs = nullptr) {
  double m = x[0];
  for (int j = 1; j < c; ++j) m = std::max(m, x[j]);
  double s = 0.0;
  for (int j = 0; j < c; ++j) s += std::exp(x[j] - m);
  double lse = m + std::log(s);
  if (probs)
    for (int j = 0; j < c; ++j) probs[j] = std::exp(x[j] - lse);
  return lse;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  if (a.cols() != b.rows())
    throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  const int m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
  const double* av = a.data();
  const double* bv = b.data();
  for (int i = 0; i < m; ++i)
    for (int l = 0; l < k; ++l) {
      const double ail = av[i * k + l];
      if (ail == 0.0) continue;
      for (int j = 0; j < n; ++j) out[i * n + j] += ail * bv[l * n + j];
    }
  return Tensor(make_op(
      {m, n}, std::move(out), {a.node(), b.node()},
      [m, k, n](TensorNode& self) {
        auto& na = *self.inputs[0];
        auto& nb = *self.inputs[1];
        const double* g = self.grad.data();
        if (na.requires_grad) {
          double* da = na.grad.data();
          const double* bv = nb.value.data();
          for (int i = 0; i < m; ++i)
            for (int l = 0; l < k; ++l) {
              double acc = 0.0;
              for (int j = 0; j < n; ++j) acc += g[i * n + j] * bv[l * n + j];
              da[i * k + l] += acc;
            }
        }
        if (nb.requires_grad) {
          double* db = nb.grad.data();
          const double* av = na.value.data();
          for (int l = 0; l < k; ++l)
            for (int j = 0; j < n; ++j) {
              double acc = 0.0;
              for (int i = 0; i < m; ++i) acc += av[i * k + l] * g[i * n + j];
              db[l * n + j] += acc;
            }
        }
      }));
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul_nt");
  require_2d(b, "matmul_nt");
  if (a.cols() != b.cols())
    throw ShapeError("matmul_nt: inner dimensions disagree, " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  const int m = a.rows(), k = a.cols(), n = b.rows();
  std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
  const double* av = a.data();
  const double* bv = b.data();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int l = 0; l < k; ++l) acc += av[i * k + l] * bv[j * k + l];
      out[i * n + j] = acc;
    }
  return Tensor(make_op(
      {m, n}, std::move(out), {a.node(), b.node()},
      [m, k, n](TensorNode& self) {
        auto& na = *self.inputs[0];
        auto& nb = *self.inputs[1];
        const double* g = self.grad.data();
        if (na.requires_grad) {
          double* da = na.grad.data();
          const double* bv = nb.value.data();
          for (int i = 0; i < m; ++i)
            for (int l = 0; l < k; ++l) {
              double acc = 0.0;
              for (int j = 0; j < n; ++j) acc += g[i * n + j] * bv[j * k + l];
              da[i * k + l] += acc;
            }
        }
        if (nb.requires_grad) {
          double* db = nb.grad.data();
          const double* av = na.value.data();
          for (int j = 0; j < n; ++j)
            for (int l = 0; l < k; ++l) {
              double acc = 0.0;
              for (int i = 0; i < m; ++i) acc += g[i * n + j] * av[i * k + l];
              db[j * k + l] += acc;
            }
        }
      }));
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.values());
  const double* bv = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return Tensor(make_op(a.shape(), std::move(out), {a.node(), b.node()},
                        [](TensorNode& self) {
                          for (int side = 0; side < 2; ++side) {
                            auto& in = *self.inputs[side];
                            if (!in.requires_grad) continue;
                            for (size_t i = 0; i < self.grad.size(); ++i)
                              in.grad[i] += self.grad[i];
                          }
                        }));
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.values());
  const double* bv = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return Tensor(make_op(a.shape(), std::move(out), {a.node(), b.node()},
                        [](TensorNode& self) {
                          auto& na = *self.inputs[0];
                          auto& nb = *self.inputs[1];
                          for (size_t i = 0; i < self.grad.size(); ++i) {
                            if (na.requires_grad) na.grad[i] += self.grad[i];
                            if (nb.requires_grad) nb.grad[i] -= self.grad[i];
                          }
                        }));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.values());
  const double* bv = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return Tensor(make_op(a.shape(), std::move(out), {a.node(), b.node()},
                        [](TensorNode& self) {
                          auto& na = *self.inputs[0];
                          auto& nb = *self.inputs[1];
                          for (size_t i = 0; i < self.grad.size(); ++i) {
                            if (na.requires_grad) na.grad[i] += self.grad[i] * nb.value[i];
                            if (nb.requires_grad) nb.grad[i] += self.grad[i] * na.value[i];
                          }
                        }));
}

Tensor scale(const Tensor& x, double c) {
  std::vector<double> out(x.values());
  for (double& v : out) v *= c;
  return Tensor(make_op(x.shape(), std::move(out), {x.node()},
                        [c](TensorNode& self) {
                          auto& in = *self.inputs[0];
                          if (!in.requires_grad) return;
                          for (size_t i = 0; i < self.grad.size(); ++i)
                            in.grad[i] += c * self.grad[i];
                        }));
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  require_2d(x, "add_row_bias");
  if (bias.ndim() != 1 || bias.dim(0) != x.cols())
    throw ShapeError("add_row_bias: bias shape " + shape_str(bias.shape()) +
                     " does not match columns of " + shape_str(x.shape()));
  const int n = x.rows(), c = x.cols();
  std::vector<double> out(x.values());
  const double* bv = bias.data();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j) out[i * c + j] += bv[j];
  return Tensor(make_op(x.shape(), std::move(out), {x.node(), bias.node()},
                        [n, c](TensorNode& self) {
                          auto& nx = *self.inputs[0];
                          auto& nb = *self.inputs[1];
                          if (nx.requires_grad)
                            for (size_t i = 0; i < self.grad.size(); ++i)
                              nx.grad[i] += self.grad[i];
                          if (nb.requires_grad)
                            for (int i = 0; i < n; ++i)
                              for (int j = 0; j < c; ++j)
                                nb.grad[j] += self.grad[i * c + j];
                        }));
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.values());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  return Tensor(make_op(x.shape(), std::move(out), {x.node()},
                        [](TensorNode& self) {
                          auto& in = *self.inputs[0];
                          if (!in.requires_grad) return;
                          for (size_t i = 0; i < self.grad.size(); ++i)
                            if (in.value[i] > 0.0) in.grad[i] += self.grad[i];
                        }));
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  return Tensor(make_op({1}, {s}, {x.node()}, [](TensorNode& self) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    for (size_t i = 0; i < in.grad.size(); ++i) in.grad[i] += self.grad[0];
  }));
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw ContractError("mean: empty tensor");
  double s = 0.0;
  for (double v : x.values()) s += v;
  const double inv = 1.0 / static_cast<double>(x.size());
  return Tensor(make_op({1}, {s * inv}, {x.node()}, [inv](TensorNode& self) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    for (size_t i = 0; i < in.grad.size(); ++i) in.grad[i] += self.grad[0] * inv;
  }));
}

Tensor softmax_rows(const Tensor& x) {
  require_2d(x, "softmax_rows");
  const int n = x.rows(), c = x.cols();
  std::vector<double> out(static_cast<size_t>(n) * c);
  for (int i = 0; i < n; ++i) row_lse(x.data() + i * c, c, out.data() + i * c);
  return Tensor(make_op(x.shape(), std::move(out), {x.node()},
                        [n, c](TensorNode& self) {
                          auto& in = *self.inputs[0];
                          if (!in.requires_grad) return;
                          for (int i = 0; i < n; ++i) {
                            const double* y = self.value.data() + i * c;
                            const double* dy = self.grad.data() + i * c;
                            double dot = 0.0;
                            for (int j = 0; j < c; ++j) dot += dy[j] * y[j];
                            for (int j = 0; j < c; ++j)
                              in.grad[i * c + j] += y[j] * (dy[j] - dot);
                          }
                        }));
}

Tensor log_softmax_rows(const Tensor& x) {
  require_2d(x, "log_softmax_rows");
  const int n = x.rows(), c = x.cols();
  std::vector<double> out(static_cast<size_t>(n) * c);
  for (int i = 0; i < n; ++i) {
    double lse = row_lse(x.data() + i * c, c);
    for (int j = 0; j < c; ++j) out[i * c + j] = x.data()[i * c + j] - lse;
  }
  return Tensor(make_op(x.shape(), std::move(out), {x.node()},
                        [n, c](TensorNode& self) {
                          auto& in = *self.inputs[0];
                          if (!in.requires_grad) return;
                          for (int i = 0; i < n; ++i) {
                            const double* y = self.value.data() + i * c;
                            const double* dy = self.grad.data() + i * c;
                            double gsum = 0.0;
                            for (int j = 0; j < c; ++j) gsum += dy[j];
                            for (int j = 0; j < c; ++j)
                              in.grad[i * c + j] += dy[j] - std::exp(y[j]) * gsum;
                          }
                        }));
}

Tensor softmax_rows_limited(const Tensor& x, const std::vector<int>& limits) {
  require_2d(x, "softmax_rows_limited");
  const int n = x.rows(), c = x.cols();
  if (static_cast<int>(limits.size()) != n)
    throw ShapeError("softmax_rows_limited: one limit per row required");
  std::vector<double> out(static_cast<size_t>(n) * c, 0.0);
  for (int i = 0; i < n; ++i) {
    const int lim = limits[i];
    if (lim < 1 || lim > c)
      throw ContractError("softmax_rows_limited: limit out of range");
    row_lse(x.data() + i * c, lim, out.data() + i * c);
  }
  return Tensor(make_op(x.shape(), std::move(out), {x.node()},
                        [n, c, limits](TensorNode& self) {
                          auto& in = *self.inputs[0];
                          if (!in.requires_grad) return;
                          for (int i = 0; i < n; ++i) {
                            const int lim = limits[i];
                            const double* y = self.value.data() + i * c;
                            const double* dy = self.grad.data() + i * c;
                            double dot = 0.0;
                            for (int j = 0; j < lim; ++j) dot += dy[j] * y[j];
                            for (int j = 0; j < lim; ++j)
                              in.grad[i * c + j] += y[j] * (dy[j] - dot);
                          }
                        }));
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_2d(x, "layer_norm");
  const int n = x.rows(), d = x.cols();
  if (d < 1) throw ContractError("layer_norm: feature dimension must be >= 1");
  if (eps <= 0.0) throw ContractError("layer_norm: eps must be positive");
  if (gain.ndim() != 1 || gain.dim(0) != d || bias.ndim() != 1 || bias.dim(0) != d)
    throw ShapeError("layer_norm: gain/bias must have shape [" + std::to_string(d) + "]");
  std::vector<double> out(static_cast<size_t>(n) * d);
  std::vector<double> xhat(static_cast<size_t>(n) * d);
  std::vector<double> inv_std(static_cast<size_t>(n));
  const double* xv = x.data();
  const double* gv = gain.data();
  const double* bv = bias.data();
  for (int i = 0; i < n; ++i) {
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += xv[i * d + j];
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      double dvj = xv[i * d + j] - mu;
      var += dvj * dvj;
    }
    var /= d;
    const double s = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<size_t>(i)] = s;
    for (int j = 0; j < d; ++j) {
      double h = (xv[i * d + j] - mu) * s;
      xhat[static_cast<size_t>(i * d + j)] = h;
      out[static_cast<size_t>(i * d + j)] = gv[j] * h + bv[j];
    }
  }
  return Tensor(make_op(
      x.shape(), std::move(out), {x.node(), gain.node(), bias.node()},
      [n, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](TensorNode& self) {
        auto& nx = *self.inputs[0];
        auto& ng = *self.inputs[1];
        auto& nb = *self.inputs[2];
        for (int i = 0; i < n; ++i) {
          const double* dy = self.grad.data() + i * d;
          const double* h = xhat.data() + i * d;
          const double s = inv_std[static_cast<size_t>(i)];
          if (nx.requires_grad) {
            double mw = 0.0, mwh = 0.0;
            for (int j = 0; j < d; ++j) {
              double w = ng.value[static_cast<size_t>(j)] * dy[j];
              mw += w;
              mwh += w * h[j];
            }
            mw /= d;
            mwh /= d;
            for (int j = 0; j < d; ++j) {
              double w = ng.value[static_cast<size_t>(j)] * dy[j];
              nx.grad[static_cast<size_t>(i * d + j)] += (w - mw - h[j] * mwh) * s;
            }
          }
          for (int j = 0; j < d; ++j) {
            if (ng.requires_grad) ng.grad[static_cast<size_t>(j)] += dy[j] * h[j];
            if (nb.requires_grad) nb.grad[static_cast<size_t>(j)] += dy[j];
          }
        }
      }));
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                     const std::vector<uint8_t>& ignore) {
  require_2d(logits, "cross_entropy");
  const int n = logits.rows(), c = logits.cols();
  if (static_cast<int>(targets.size()) != n)
    throw ShapeError("cross_entropy: expected " + std::to_string(n) + " targets, got " +
                     std::to_string(targets.size()));
  if (!ignore.empty() && static_cast<int>(ignore.size()) != n)
    throw ShapeError("cross_entropy: ignore mask length mismatch");
  int active = 0;
  double loss = 0.0;
  std::vector<double> lses(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    if (!ignore.empty() && ignore[static_cast<size_t>(i)]) continue;
    const int t = targets[static_cast<size_t>(i)];
    if (t < 0 || t >= c)
      throw IndexError("cross_entropy: target id " + std::to_string(t) +
                       " out of range [0, " + std::to_string(c) + ")");
    double lse = row_lse(logits.data() + i * c, c);
    lses[static_cast<size_t>(i)] = lse;
    loss += lse - logits.data()[i * c + t];
    ++active;
  }
  if (active == 0)
    return Tensor(make_op({1}, {0.0}, {logits.node()}, [](TensorNode&) {}));
  loss /= active;
  return Tensor(make_op(
      {1}, {loss}, {logits.node()},
      [n, c, targets, ignore, active, lses = std::move(lses)](TensorNode& self) {
        auto& in = *self.inputs[0];
        if (!in.requires_grad) return;
        const double g = self.grad[0] / active;
        for (int i = 0; i < n; ++i) {
          if (!ignore.empty() && ignore[static_cast<size_t>(i)]) continue;
          const double lse = lses[static_cast<size_t>(i)];
          for (int j = 0; j < c; ++j) {
            double p = std::exp(in.value[static_cast<size_t>(i * c + j)] - lse);
            double ind = (j == targets[static_cast<size_t>(i)]) ? 1.0 : 0.0;
            in.grad[static_cast<size_t>(i * c + j)] += g * (p - ind);
          }
        }
      }));
}

Tensor mean_pool_rows(const Tensor& x, int factor) {
  require_2d(x, "mean_pool_rows");
  if (factor < 1) throw ContractError("mean_pool_rows: factor must be >= 1");
  const int t = x.rows(), f = x.cols();
  if (t < 1) throw ContractError("mean_pool_rows: empty input");
  const int tp = (t + factor - 1) / factor;
  std::vector<double> out(static_cast<size_t>(tp) * f, 0.0);
  for (int r = 0; r < tp; ++r) {
    const int lo = r * factor;
    const int hi = std::min(t, lo + factor);
    for (int i = lo; i < hi; ++i)
      for (int j = 0; j < f; ++j) out[static_cast<size_t>(r * f + j)] += x.data()[i * f + j];
    const double inv = 1.0 / (hi - lo);
    for (int j = 0; j < f; ++j) out[static_cast<size_t>(r * f + j)] *= inv;
  }
  return Tensor(make_op({tp, f}, std::move(out), {x.node()},
                        [t, f, factor, tp](TensorNode& self) {
                          auto& in = *self.inputs[0];
                          if (!in.requires_grad) return;
                          for (int r = 0; r < tp; ++r) {
                            const int lo = r * factor;
                            const int hi = std::min(t, lo + factor);
                            const double inv = 1.0 / (hi - lo);
                            for (int i = lo; i < hi; ++i)
                              for (int j = 0; j < f; ++j)
                                in.grad[static_cast<size_t>(i * f + j)] +=
                                    self.grad[static_cast<size_t>(r * f + j)] * inv;
                          }
                        }));
}

Tensor embedding_rows(const Tensor& table, const std::vector<int>& ids) {
  require_2d(table, "embedding_rows");
  const int rows = table.rows(), d = table.cols();
  const int n = static_cast<int>(ids.size());
  std::vector<double> out(static_cast<size_t>(n) * d);
  for (int i = 0; i < n; ++i) {
    const int id = ids[static_cast<size_t>(i)];
    if (id < 0 || id >= rows)
      throw IndexError("embedding_rows: id " + std::to_string(id) + " out of range [0, " +
                       std::to_string(rows) + ")");
    std::copy_n(table.data() + static_cast<size_t>(id) * d, d, out.begin() + static_cast<size_t>(i) * d);
  }
  return Tensor(make_op({n, d}, std::move(out), {table.node()},
                        [d, n, ids](TensorNode& self) {
                          auto& in = *self.inputs[0];
                          if (!in.requires_grad) return;
                          for (int i = 0; i < n; ++i) {
                            const int id = ids[static_cast<size_t>(i)];
                            for (int j = 0; j < d; ++j)
                              in.grad[static_cast<size_t>(id) * d + j] +=
                                  self.grad[static_cast<size_t>(i * d + j)];
                          }
                        }));
}

Tensor slice_rows(const Tensor& x, int start, int len) {
  require_2d(x, "slice_rows");
  if (start < 0 || len < 0 || start + len > x.rows())
    throw ShapeError("slice_rows: range [" + std::to_string(start) + ", " +
                     std::to_string(start + len) + ") exceeds " + shape_str(x.shape()));
  const int c = x.cols();
  std::vector<double> out(x.data() + static_cast<size_t>(start) * c,
                          x.data() + static_cast<size_t>(start + len) * c);
  return Tensor(make_op({len, c}, std::move(out), {x.node()},
                        [start, len, c](TensorNode& self) {
                          auto& in = *self.inputs[0];
                          if (!in.requires_grad) return;
                          for (int i = 0; i < len; ++i)
                            for (int j = 0; j < c; ++j)
                              in.grad[static_cast<size_t>((start + i) * c + j)] +=
                                  self.grad[static_cast<size_t>(i * c + j)];
                        }));
}

Tensor slice_cols(const Tensor& x, int start, int len) {
  require_2d(x, "slice_cols");
  if (start < 0 || len < 0 || start + len > x.cols())
    throw ShapeError("slice_cols: range [" + std::to_string(start) + ", " +
                     std::to_string(start + len) + ") exceeds " + shape_str(x.shape()));
  const int n = x.rows(), c = x.cols();
  std::vector<double> out(static_cast<size_t>(n) * len);
  for (int i = 0; i < n; ++i)
    std::copy_n(x.data() + static_cast<size_t>(i) * c + start, len,
                out.begin() + static_cast<size_t>(i) * len);
  return Tensor(make_op({n, len}, std::move(out), {x.node()},
                        [start, len, n, c](TensorNode& self) {
                          auto& in = *self.inputs[0];
                          if (!in.requires_grad) return;
                          for (int i = 0; i < n; ++i)
                            for (int j = 0; j < len; ++j)
                              in.grad[static_cast<size_t>(i * c + start + j)] +=
                                  self.grad[static_cast<size_t>(i * len + j)];
                        }));
}

Tensor concat_cols(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ContractError("concat_cols: no inputs");
  const int n = xs[0].rows();
  int total = 0;
  std::vector<NodePtr> inputs;
  std::vector<int> widths;
  for (const auto& x : xs) {
    require_2d(x, "concat_cols");
    if (x.rows() != n) throw ShapeError("concat_cols: row count mismatch");
    widths.push_back(x.cols());
    total += x.cols();
    inputs.push_back(x.node());
  }
  std::vector<double> out(static_cast<size_t>(n) * total);
  int off = 0;
  for (size_t k = 0; k < xs.size(); ++k) {
    const int c = widths[k];
    for (int i = 0; i < n; ++i)
      std::copy_n(xs[k].data() + static_cast<size_t>(i) * c, c,
                  out.begin() + static_cast<size_t>(i) * total + off);
    off += c;
  }
  return Tensor(make_op({n, total}, std::move(out), std::move(inputs),
                        [n, total, widths](TensorNode& self) {
                          int off2 = 0;
                          for (size_t k = 0; k < widths.size(); ++k) {
                            auto& in = *self.inputs[k];
                            const int c = widths[k];
                            if (in.requires_grad)
                              for (int i = 0; i < n; ++i)
                                for (int j = 0; j < c; ++j)
                                  in.grad[static_cast<size_t>(i * c + j)] +=
                                      self.grad[static_cast<size_t>(i * total + off2 + j)];
                            off2 += c;
                          }
                        }));
}

Tensor add_const(const Tensor& x, const std::vector<double>& c) {
  if (c.size() != x.values().size())
    throw ShapeError("add_const: constant length mismatch");
  std::vector<double> out(x.values());
  for (size_t i = 0; i < out.size(); ++i) out[i] += c[i];
  return Tensor(make_op(x.shape(), std::move(out), {x.node()},
                        [](TensorNode& self) {
                          auto& in = *self.inputs[0];
                          if (!in.requires_grad) return;
                          for (size_t i = 0; i < self.grad.size(); ++i)
                            in.grad[i] += self.grad[i];
                        }));
}

Tensor dropout(const Tensor& x, double rate, Rng& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0)
    throw ContractError("dropout: rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.values().size());
  for (double& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
  std::vector<double> out(x.values());
  for (size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return Tensor(make_op(x.shape(), std::move(out), {x.node()},
                        [mask = std::move(mask)](TensorNode& self) {
                          auto& in = *self.inputs[0];
                          if (!in.requires_grad) return;
                          for (size_t i = 0; i < self.grad.size(); ++i)
                            in.grad[i] += self.grad[i] * mask[i];
                        }));
}

Tensor mix_rows(const Tensor& speech, const Tensor& text,
                const std::vector<std::pair<int, int>>& source) {
  require_2d(speech, "mix_rows");
  require_2d(text, "mix_rows");
  if (speech.cols() != text.cols())
    throw ShapeError("mix_rows: column width mismatch " + shape_str(speech.shape()) +
                     " vs " + shape_str(text.shape()));
  const int d = speech.cols();
  const int n = static_cast<int>(source.size());
  std::vector<double> out(static_cast<size_t>(n) * d);
  for (int i = 0; i < n; ++i) {
    const auto [which, row] = source[static_cast<size_t>(i)];
    const Tensor& src = which == 0 ? speech : text;
    if (row < 0 || row >= src.rows())
      throw IndexError("mix_rows: row " + std::to_string(row) + " out of range for source " +
                       std::to_string(which));
    std::copy_n(src.data() + static_cast<size_t>(row) * d, d,
                out.begin() + static_cast<size_t>(i) * d);
  }
  return Tensor(make_op({n, d}, std::move(out), {speech.node(), text.node()},
                        [d, n, source](TensorNode& self) {
                          for (int i = 0; i < n; ++i) {
                            const auto [which, row] = source[static_cast<size_t>(i)];
                            auto& in = *self.inputs[which == 0 ? 0 : 1];
                            if (!in.requires_grad) continue;
                            for (int j = 0; j < d; ++j)
                              in.grad[static_cast<size_t>(row) * d + j] +=
                                  self.grad[static_cast<size_t>(i * d + j)];
                          }
                        }));
}

Tensor weighted_sum(const std::vector<std::pair<double, Tensor>>& terms) {
  if (terms.empty()) throw ContractError("weighted_sum: no terms");
  double v = 0.0;
  std::vector<NodePtr> inputs;
  std::vector<double> weights;
  for (const auto& [w, t] : terms) {
    if (t.size() != 1) throw ContractError("weighted_sum: terms must be scalars");
    v += w * t.item();
    inputs.push_back(t.node());
    weights.push_back(w);
  }
  return Tensor(make_op({1}, {v}, std::move(inputs),
                        [weights = std::move(weights)](TensorNode& self) {
                          for (size_t k = 0; k < weights.size(); ++k) {
                            auto& in = *self.inputs[k];
                            if (in.requires_grad) in.grad[0] += weights[k] * self.grad[0];
                          }
                        }));
}

}  // namespace modalign
