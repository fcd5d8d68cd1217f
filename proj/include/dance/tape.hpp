/*
 * Copyright 2026 The dance Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dance/tensor.hpp"

namespace dance {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

namespace detail {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
Eigen::Map<const RowMat<T>> cmap(const BasicTensor<T>& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

template <class T>
Eigen::Map<RowMat<T>> mmap(BasicTensor<T>& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

}  // namespace detail

/// Records a forward computation so that backward() can replay it in
/// reverse. Nodes are appended in execution order, so the node vector is a
/// topological order of the graph.
///
/// A node requires a gradient iff it is a variable() leaf or any of its
/// inputs requires one. stop_gradient() and constant() nodes never do.
template <class T>
class Tape {
 public:
  using TensorT = BasicTensor<T>;
  using Backprop = std::function<void(Tape&, std::size_t self)>;

  Var constant(TensorT v) { return append(std::move(v), {}, nullptr, false, false); }

  Var variable(TensorT v) { return append(std::move(v), {}, nullptr, true, false); }

  /// Value-identical copy of x that blocks gradient flow into x.
  Var stop_gradient(Var x) { return append(value(x), {x.id}, nullptr, false, true); }

  /// Record an op. `fn` pushes the node's upstream gradient into its inputs.
  Var push(TensorT v, std::vector<std::size_t> inputs, Backprop fn) {
    bool needs = false;
    for (std::size_t i : inputs) needs = needs || nodes_[i].requires_grad;
    return append(std::move(v), std::move(inputs), needs ? std::move(fn) : nullptr, needs, false);
  }

  const TensorT& value(Var v) const { return nodes_.at(v.id).value; }

  /// Gradient of the last backward() loss w.r.t. v; zeros if no path exists.
  TensorT grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    return n.grad.empty() ? TensorT(n.value.shape()) : n.grad;
  }

  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  bool is_stop_gradient(Var v) const { return nodes_.at(v.id).stop; }
  const std::vector<std::size_t>& inputs(Var v) const { return nodes_.at(v.id).inputs; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Ids of the ops whose gradient rule ran during the last backward(), in
  /// the order they ran.
  const std::vector<std::size_t>& visit_log() const noexcept { return visits_; }

  void backward(Var loss) {
    if (loss.id >= nodes_.size()) throw UsageError("backward: loss is not on this tape");
    if (nodes_[loss.id].value.size() != 1)
      throw UsageError("backward: loss must be a scalar, got shape " +
                       shape_string(nodes_[loss.id].value.shape()));
    for (auto& n : nodes_) n.grad = TensorT{};
    visits_.clear();
    if (!nodes_[loss.id].requires_grad) return;
    nodes_[loss.id].grad = TensorT(nodes_[loss.id].value.shape(), T{1});
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || n.grad.empty() || !n.backprop) continue;
      visits_.push_back(i);
      n.backprop(*this, i);
    }
  }

  /// Upstream gradient of a node during backward().
  const TensorT& upstream(std::size_t id) const { return nodes_[id].grad; }

  /// Accumulation target for an input's gradient; nullptr when the input
  /// does not take gradients.
  TensorT* sink(std::size_t id) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return nullptr;
    if (n.grad.empty()) n.grad = TensorT(n.value.shape());
    return &n.grad;
  }

  const TensorT& value_of(std::size_t id) const { return nodes_[id].value; }

 private:
  struct Node {
    TensorT value;
    TensorT grad;
    std::vector<std::size_t> inputs;
    Backprop backprop;
    bool requires_grad = false;
    bool stop = false;
  };

  Var append(TensorT v, std::vector<std::size_t> inputs, Backprop fn, bool needs, bool stop) {
    nodes_.push_back(Node{std::move(v), TensorT{}, std::move(inputs), std::move(fn), needs, stop});
    return Var{nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
  std::vector<std::size_t> visits_;
};

// ---------------------------------------------------------------------------
// Ops. Every op takes the tape first and returns a new Var.
// ---------------------------------------------------------------------------

namespace detail {

template <class T>
void require_same_shape(const Tape<T>& t, Var a, Var b, const char* op) {
  if (!t.value(a).same_shape(t.value(b)))
    throw ConfigError(std::string(op) + ": shape mismatch " + shape_string(t.value(a).shape()) +
                      " vs " + shape_string(t.value(b).shape()));
}

/// Elementwise unary op with derivative expressed through (x, y).
template <class T, class F, class D>
Var unary(Tape<T>& t, Var x, F f, D dfdx) {
  const auto& xv = t.value(x);
  BasicTensor<T> y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = f(xv[i]);
  return t.push(std::move(y), {x.id}, [xid = x.id, dfdx](Tape<T>& tp, std::size_t self) {
    auto* gx = tp.sink(xid);
    if (!gx) return;
    const auto& g = tp.upstream(self);
    const auto& xv = tp.value_of(xid);
    const auto& yv = tp.value_of(self);
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * dfdx(xv[i], yv[i]);
  });
}

}  // namespace detail

/// y = x W^T + b, x:[n x in], W:[out x in], b:[out].
template <class T>
Var linear(Tape<T>& t, Var x, Var w, Var b) {
  const auto& xv = t.value(x);
  const auto& wv = t.value(w);
  const auto& bv = t.value(b);
  if (xv.cols() != wv.cols())
    throw ConfigError("linear: input width " + std::to_string(xv.cols()) + " != layer input width " +
                      std::to_string(wv.cols()));
  if (bv.size() != wv.rows()) throw ConfigError("linear: bias width != layer output width");
  BasicTensor<T> y({xv.rows(), wv.rows()});
  auto Y = detail::mmap(y);
  Y.noalias() = detail::cmap(xv) * detail::cmap(wv).transpose();
  Y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bv.data(), bv.size());
  return t.push(std::move(y), {x.id, w.id, b.id},
                [xi = x.id, wi = w.id, bi = b.id](Tape<T>& tp, std::size_t self) {
                  auto G = detail::cmap(tp.upstream(self));
                  if (auto* gx = tp.sink(xi)) detail::mmap(*gx).noalias() += G * detail::cmap(tp.value_of(wi));
                  if (auto* gw = tp.sink(wi))
                    detail::mmap(*gw).noalias() += G.transpose() * detail::cmap(tp.value_of(xi));
                  if (auto* gb = tp.sink(bi)) {
                    const std::size_t n = G.rows(), m = G.cols();
                    for (std::size_t j = 0; j < m; ++j) {
                      accum_t<T> s = 0;
                      for (std::size_t i = 0; i < n; ++i) s += G(i, j);
                      (*gb)[j] += static_cast<T>(s);
                    }
                  }
                });
}

template <class T>
Var relu(Tape<T>& t, Var x) {
  return detail::unary(
      t, x, [](T v) { return v > T{0} ? v : T{0}; }, [](T v, T) { return v > T{0} ? T{1} : T{0}; });
}

template <class T>
Var leaky_relu(Tape<T>& t, Var x, T slope = T(0.2)) {
  return detail::unary(
      t, x, [slope](T v) { return v > T{0} ? v : slope * v; },
      [slope](T v, T) { return v > T{0} ? T{1} : slope; });
}

template <class T>
Var tanh(Tape<T>& t, Var x) {
  return detail::unary(
      t, x, [](T v) { return std::tanh(v); }, [](T, T y) { return T{1} - y * y; });
}

template <class T>
T sigmoid_value(T v) {
  if (v >= T{0}) return T{1} / (T{1} + std::exp(-v));
  const T e = std::exp(v);
  return e / (T{1} + e);
}

template <class T>
Var sigmoid(Tape<T>& t, Var x) {
  return detail::unary(
      t, x, [](T v) { return sigmoid_value(v); }, [](T, T y) { return y * (T{1} - y); });
}

/// Row-wise softmax.
template <class T>
Var softmax_rows(Tape<T>& t, Var x) {
  const auto& xv = t.value(x);
  BasicTensor<T> y(xv.shape());
  const std::size_t n = xv.rows(), k = xv.cols();
  for (std::size_t i = 0; i < n; ++i) {
    auto in = xv.row(i);
    auto out = y.row(i);
    const T mx = *std::max_element(in.begin(), in.end());
    accum_t<T> s = 0;
    for (std::size_t j = 0; j < k; ++j) s += (out[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < k; ++j) out[j] = static_cast<T>(out[j] / s);
  }
  return t.push(std::move(y), {x.id}, [xi = x.id](Tape<T>& tp, std::size_t self) {
    auto* gx = tp.sink(xi);
    if (!gx) return;
    const auto& g = tp.upstream(self);
    const auto& yv = tp.value_of(self);
    const std::size_t n = yv.rows(), k = yv.cols();
    for (std::size_t i = 0; i < n; ++i) {
      accum_t<T> dot = 0;
      for (std::size_t j = 0; j < k; ++j) dot += g(i, j) * yv(i, j);
      for (std::size_t j = 0; j < k; ++j) (*gx)(i, j) += yv(i, j) * (g(i, j) - static_cast<T>(dot));
    }
  });
}

template <class T>
Var add(Tape<T>& t, Var a, Var b) {
  detail::require_same_shape(t, a, b, "add");
  BasicTensor<T> y = t.value(a);
  const auto& bv = t.value(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return t.push(std::move(y), {a.id, b.id}, [ai = a.id, bi = b.id](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.upstream(self);
    for (std::size_t id : {ai, bi})
      if (auto* s = tp.sink(id))
        for (std::size_t i = 0; i < g.size(); ++i) (*s)[i] += g[i];
  });
}

template <class T>
Var sub(Tape<T>& t, Var a, Var b) {
  detail::require_same_shape(t, a, b, "sub");
  BasicTensor<T> y = t.value(a);
  const auto& bv = t.value(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  return t.push(std::move(y), {a.id, b.id}, [ai = a.id, bi = b.id](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.upstream(self);
    if (auto* s = tp.sink(ai))
      for (std::size_t i = 0; i < g.size(); ++i) (*s)[i] += g[i];
    if (auto* s = tp.sink(bi))
      for (std::size_t i = 0; i < g.size(); ++i) (*s)[i] -= g[i];
  });
}

/// Elementwise product.
template <class T>
Var mul(Tape<T>& t, Var a, Var b) {
  detail::require_same_shape(t, a, b, "mul");
  BasicTensor<T> y = t.value(a);
  const auto& bv = t.value(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  return t.push(std::move(y), {a.id, b.id}, [ai = a.id, bi = b.id](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.upstream(self);
    const auto& av = tp.value_of(ai);
    const auto& bv = tp.value_of(bi);
    if (auto* s = tp.sink(ai))
      for (std::size_t i = 0; i < g.size(); ++i) (*s)[i] += g[i] * bv[i];
    if (auto* s = tp.sink(bi))
      for (std::size_t i = 0; i < g.size(); ++i) (*s)[i] += g[i] * av[i];
  });
}

template <class T>
Var scale(Tape<T>& t, Var x, double c) {
  const T ct = static_cast<T>(c);
  return detail::unary(
      t, x, [ct](T v) { return ct * v; }, [ct](T, T) { return ct; });
}

template <class T>
Var add_scalar(Tape<T>& t, Var x, double c) {
  const T ct = static_cast<T>(c);
  return detail::unary(
      t, x, [ct](T v) { return v + ct; }, [](T, T) { return T{1}; });
}

template <class T>
Var square(Tape<T>& t, Var x) {
  return detail::unary(
      t, x, [](T v) { return v * v; }, [](T v, T) { return T{2} * v; });
}

/// Floor used by every log in the loss functions.
inline constexpr double kLogFloor = 1e-7;

/// log(max(x, floor)); zero derivative where the floor is active.
template <class T>
Var log_clamped(Tape<T>& t, Var x, double floor = kLogFloor) {
  const T f = static_cast<T>(floor);
  return detail::unary(
      t, x, [f](T v) { return std::log(std::max(v, f)); },
      [f](T v, T) { return v > f ? T{1} / v : T{0}; });
}

/// Sum of all entries as a [1x1] tensor.
template <class T>
Var sum(Tape<T>& t, Var x) {
  accum_t<T> s = 0;
  for (T v : t.value(x).values()) s += v;
  return t.push(BasicTensor<T>::scalar(static_cast<T>(s)), {x.id}, [xi = x.id](Tape<T>& tp, std::size_t self) {
    auto* gx = tp.sink(xi);
    if (!gx) return;
    const T g = tp.upstream(self)[0];
    for (auto& v : gx->values()) v += g;
  });
}

/// Mean of all entries as a [1x1] tensor.
template <class T>
Var mean(Tape<T>& t, Var x) {
  const auto n = static_cast<accum_t<T>>(t.value(x).size());
  accum_t<T> s = 0;
  for (T v : t.value(x).values()) s += v;
  return t.push(BasicTensor<T>::scalar(static_cast<T>(s / n)), {x.id},
                [xi = x.id, n](Tape<T>& tp, std::size_t self) {
                  auto* gx = tp.sink(xi);
                  if (!gx) return;
                  const T g = static_cast<T>(tp.upstream(self)[0] / n);
                  for (auto& v : gx->values()) v += g;
                });
}

/// Sum of squared entries as a [1x1] tensor.
template <class T>
Var sum_squares(Tape<T>& t, Var x) {
  accum_t<T> s = 0;
  for (T v : t.value(x).values()) s += static_cast<accum_t<T>>(v) * v;
  return t.push(BasicTensor<T>::scalar(static_cast<T>(s)), {x.id}, [xi = x.id](Tape<T>& tp, std::size_t self) {
    auto* gx = tp.sink(xi);
    if (!gx) return;
    const T g = tp.upstream(self)[0];
    const auto& xv = tp.value_of(xi);
    for (std::size_t i = 0; i < xv.size(); ++i) (*gx)[i] += T{2} * g * xv[i];
  });
}

/// Column means: [n x k] -> [1 x k].
template <class T>
Var col_mean(Tape<T>& t, Var x) {
  const auto& xv = t.value(x);
  const std::size_t n = xv.rows(), k = xv.cols();
  BasicTensor<T> y({1, k});
  for (std::size_t j = 0; j < k; ++j) {
    accum_t<T> s = 0;
    for (std::size_t i = 0; i < n; ++i) s += xv(i, j);
    y[j] = static_cast<T>(s / static_cast<accum_t<T>>(n));
  }
  return t.push(std::move(y), {x.id}, [xi = x.id](Tape<T>& tp, std::size_t self) {
    auto* gx = tp.sink(xi);
    if (!gx) return;
    const auto& g = tp.upstream(self);
    const std::size_t n = gx->rows(), k = gx->cols();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) (*gx)(i, j) += g[j] / static_cast<T>(n);
  });
}

/// Columns [begin, end) of a matrix.
template <class T>
Var slice_cols(Tape<T>& t, Var x, std::size_t begin, std::size_t end) {
  BasicTensor<T> y = t.value(x).slice_cols(begin, end);
  return t.push(std::move(y), {x.id}, [xi = x.id, begin, end](Tape<T>& tp, std::size_t self) {
    auto* gx = tp.sink(xi);
    if (!gx) return;
    const auto& g = tp.upstream(self);
    const std::size_t w = end - begin;
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < w; ++j) (*gx)(i, begin + j) += g(i, j);
  });
}

template <class T>
Var concat_cols(Tape<T>& t, Var a, Var b) {
  BasicTensor<T> y = concat_cols(t.value(a), t.value(b));
  const std::size_t ca = t.value(a).cols();
  return t.push(std::move(y), {a.id, b.id}, [ai = a.id, bi = b.id, ca](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.upstream(self);
    const std::size_t w = g.cols();
    if (auto* ga = tp.sink(ai))
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < ca; ++j) (*ga)(i, j) += g(i, j);
    if (auto* gb = tp.sink(bi))
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = ca; j < w; ++j) (*gb)(i, j - ca) += g(i, j);
  });
}

/// Pairwise squared Euclidean distances: z:[n x d], c:[k x d] -> [n x k].
template <class T>
Var sq_distances(Tape<T>& t, Var z, Var c) {
  const auto& zv = t.value(z);
  const auto& cv = t.value(c);
  if (zv.cols() != cv.cols()) throw ConfigError("sq_distances: dimension mismatch");
  const std::size_t n = zv.rows(), k = cv.rows(), d = zv.cols();
  BasicTensor<T> y({n, k});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      accum_t<T> s = 0;
      for (std::size_t l = 0; l < d; ++l) {
        const accum_t<T> diff = static_cast<accum_t<T>>(zv(i, l)) - cv(j, l);
        s += diff * diff;
      }
      y(i, j) = static_cast<T>(s);
    }
  return t.push(std::move(y), {z.id, c.id}, [zi = z.id, ci = c.id](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.upstream(self);
    const auto& zv = tp.value_of(zi);
    const auto& cv = tp.value_of(ci);
    auto* gz = tp.sink(zi);
    auto* gc = tp.sink(ci);
    const std::size_t n = zv.rows(), k = cv.rows(), d = zv.cols();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        const T w = T{2} * g(i, j);
        for (std::size_t l = 0; l < d; ++l) {
          const T diff = zv(i, l) - cv(j, l);
          if (gz) (*gz)(i, l) += w * diff;
          if (gc) (*gc)(j, l) -= w * diff;
        }
      }
  });
}

/// Student's t kernel (1 + d2/alpha)^(-(alpha+1)/2), elementwise.
template <class T>
Var student_t_kernel(Tape<T>& t, Var d2, double alpha) {
  const T a = static_cast<T>(alpha);
  const T e = -(a + T{1}) / T{2};
  return detail::unary(
      t, d2, [a, e](T v) { return std::pow(T{1} + v / a, e); },
      [a, e](T v, T y) { return e * y / (a + v); });
}

/// Divide each row by its sum.
template <class T>
Var row_normalize(Tape<T>& t, Var x) {
  const auto& xv = t.value(x);
  const std::size_t n = xv.rows(), k = xv.cols();
  BasicTensor<T> y(xv.shape());
  for (std::size_t i = 0; i < n; ++i) {
    accum_t<T> s = 0;
    for (std::size_t j = 0; j < k; ++j) s += xv(i, j);
    for (std::size_t j = 0; j < k; ++j) y(i, j) = static_cast<T>(xv(i, j) / s);
  }
  return t.push(std::move(y), {x.id}, [xi = x.id](Tape<T>& tp, std::size_t self) {
    auto* gx = tp.sink(xi);
    if (!gx) return;
    const auto& g = tp.upstream(self);
    const auto& xv = tp.value_of(xi);
    const auto& yv = tp.value_of(self);
    const std::size_t n = xv.rows(), k = xv.cols();
    for (std::size_t i = 0; i < n; ++i) {
      accum_t<T> s = 0, dot = 0;
      for (std::size_t j = 0; j < k; ++j) {
        s += xv(i, j);
        dot += g(i, j) * yv(i, j);
      }
      for (std::size_t j = 0; j < k; ++j) (*gx)(i, j) += static_cast<T>((g(i, j) - dot) / s);
    }
  });
}

}  // namespace dance
