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

#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dance/random.hpp"
#include "dance/tape.hpp"

namespace dance {

enum class Activation { identity, relu, leaky_relu, tanh, sigmoid, softmax };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softmax: return "softmax";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  for (auto a : {Activation::identity, Activation::relu, Activation::leaky_relu, Activation::tanh,
                 Activation::sigmoid, Activation::softmax})
    if (s == to_string(a)) return a;
  throw ConfigError("unknown activation '" + s + "'");
}

/// Slope of the negative half of leaky_relu.
inline constexpr double kLeakySlope = 0.2;

template <class T>
Var activate(Tape<T>& t, Var x, Activation a) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::relu: return relu(t, x);
    case Activation::leaky_relu: return leaky_relu(t, x, static_cast<T>(kLeakySlope));
    case Activation::tanh: return tanh(t, x);
    case Activation::sigmoid: return sigmoid(t, x);
    case Activation::softmax: return softmax_rows(t, x);
  }
  return x;
}

template <class T>
struct DenseLayer {
  BasicTensor<T> weight;  // [out x in]
  BasicTensor<T> bias;    // [out]
  Activation activation = Activation::identity;

  std::size_t in() const { return weight.cols(); }
  std::size_t out() const { return weight.rows(); }
};

/// Parameters of one fully-connected sub-net.
template <class T>
struct NetParams {
  std::vector<DenseLayer<T>> layers;

  std::size_t input_width() const { return layers.empty() ? 0 : layers.front().in(); }
  std::size_t output_width() const { return layers.empty() ? 0 : layers.back().out(); }

  /// Parameter tensors in the fixed order W0, b0, W1, b1, ...
  std::vector<BasicTensor<T>*> tensors() {
    std::vector<BasicTensor<T>*> out;
    for (auto& l : layers) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
    return out;
  }
  std::vector<const BasicTensor<T>*> tensors() const {
    std::vector<const BasicTensor<T>*> out;
    for (const auto& l : layers) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }

  void validate() const {
    if (layers.empty()) throw ConfigError("net has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.bias.size() != l.out())
        throw ConfigError("layer " + std::to_string(i) + ": bias width != output width");
      if (i + 1 < layers.size()) {
        if (l.out() != layers[i + 1].in())
          throw ConfigError("layer " + std::to_string(i) + " output width " + std::to_string(l.out()) +
                            " != layer " + std::to_string(i + 1) + " input width " +
                            std::to_string(layers[i + 1].in()));
        if (l.activation == Activation::softmax)
          throw ConfigError("layer " + std::to_string(i) + ": softmax is only allowed as the final activation");
      }
    }
  }

  template <class U>
  NetParams<U> cast() const {
    NetParams<U> out;
    for (const auto& l : layers) out.layers.push_back({l.weight.template cast<U>(), l.bias.template cast<U>(), l.activation});
    return out;
  }

  friend bool operator==(const NetParams& a, const NetParams& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i)
      if (!(a.layers[i].weight == b.layers[i].weight) || !(a.layers[i].bias == b.layers[i].bias) ||
          a.layers[i].activation != b.layers[i].activation)
        return false;
    return true;
  }
};

/// Fully-connected net over `widths` (input, hidden..., output). Weights are
/// Glorot-uniform, biases zero.
namespace detail {
/// Layer widths in -> hidden... -> out.
inline std::vector<std::size_t> chain(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}
}  // namespace detail

template <class T = float>
NetParams<T> make_mlp(std::span<const std::size_t> widths, Activation hidden, Activation output, Rng& rng) {
  if (widths.size() < 2) throw ConfigError("make_mlp: need at least input and output widths");
  NetParams<T> net;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::size_t in = widths[i], out = widths[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    BasicTensor<T> w({out, in});
    for (auto& v : w.values()) v = static_cast<T>(u(rng));
    net.layers.push_back({std::move(w), BasicTensor<T>({out}), i + 2 == widths.size() ? output : hidden});
  }
  net.validate();
  return net;
}

template <class T = float>
NetParams<T> make_mlp(std::initializer_list<std::size_t> widths, Activation hidden, Activation output, Rng& rng) {
  std::vector<std::size_t> w(widths);
  return make_mlp<T>(std::span<const std::size_t>(w), hidden, output, rng);
}

/// Tape handles for a net's parameters, aligned with NetParams::tensors().
struct BoundNet {
  std::vector<Var> params;
};

/// Record a net's parameters on the tape. Trainable nets get variable()
/// leaves; frozen nets get constants, so no gradient reaches them.
template <class T>
BoundNet bind(Tape<T>& t, const NetParams<T>& net, bool trainable = true) {
  BoundNet b;
  for (const auto* p : net.tensors()) b.params.push_back(trainable ? t.variable(*p) : t.constant(*p));
  return b;
}

template <class T>
Var forward(Tape<T>& t, const NetParams<T>& net, const BoundNet& bound, Var x) {
  if (bound.params.size() != 2 * net.layers.size()) throw UsageError("forward: net bound to a different shape");
  Var h = x;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    if (t.value(h).cols() != l.in())
      throw ConfigError("layer " + std::to_string(i) + ": input width " + std::to_string(t.value(h).cols()) +
                        " does not match layer input width " + std::to_string(l.in()));
    h = activate(t, linear(t, h, bound.params[2 * i], bound.params[2 * i + 1]), l.activation);
  }
  return h;
}

/// Convenience: bind as trainable and run forward in one call.
template <class T>
Var forward(Tape<T>& t, const NetParams<T>& net, Var x, BoundNet* bound_out = nullptr) {
  BoundNet b = bind(t, net, true);
  Var y = forward(t, net, b, x);
  if (bound_out) *bound_out = std::move(b);
  return y;
}

/// Gradients of the last backward() w.r.t. the bound parameters.
template <class T>
std::vector<BasicTensor<T>> gradients(const Tape<T>& t, const BoundNet& bound) {
  std::vector<BasicTensor<T>> g;
  g.reserve(bound.params.size());
  for (Var v : bound.params) g.push_back(t.grad(v));
  return g;
}

/// Forward pass without keeping the tape.
template <class T>
BasicTensor<T> predict(const NetParams<T>& net, const BasicTensor<T>& x) {
  Tape<T> t;
  Var in = t.constant(x);
  BoundNet b = bind(t, net, false);
  return t.value(forward(t, net, b, in));
}

}  // namespace dance
