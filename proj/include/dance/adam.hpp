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
#include <cstdint>
#include <span>
#include <vector>

#include "dance/net.hpp"

namespace dance {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
struct AdamState {
  AdamOptions options;
  std::vector<BasicTensor<T>> m;
  std::vector<BasicTensor<T>> v;
  std::uint64_t step = 0;
};

template <class T>
AdamState<T> make_adam(std::span<const BasicTensor<T>* const> params, AdamOptions opt = {}) {
  AdamState<T> s{opt, {}, {}, 0};
  for (const auto* p : params) {
    s.m.emplace_back(p->shape());
    s.v.emplace_back(p->shape());
  }
  return s;
}

template <class T>
AdamState<T> make_adam(const NetParams<T>& net, AdamOptions opt = {}) {
  auto ps = net.tensors();
  return make_adam<T>(std::span<const BasicTensor<T>* const>(ps), opt);
}

/// One bias-corrected Adam update. Throws NonFiniteError before touching
/// anything if a gradient holds NaN/Inf.
template <class T>
void adam_step(std::span<BasicTensor<T>* const> params, std::span<const BasicTensor<T>> grads, AdamState<T>& s) {
  if (params.size() != grads.size() || params.size() != s.m.size())
    throw UsageError("adam_step: parameter/gradient/state count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(grads[i]) || !params[i]->same_shape(s.m[i]))
      throw UsageError("adam_step: gradient " + std::to_string(i) + " shape " + shape_string(grads[i].shape()) +
                       " does not match parameter " + shape_string(params[i]->shape()));
    if (!grads[i].all_finite())
      throw NonFiniteError("non-finite gradient in parameter tensor " + std::to_string(i));
  }
  ++s.step;
  const auto& o = s.options;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    auto& m = s.m[i];
    auto& v = s.v[i];
    const auto& g = grads[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j];
      const double mj = o.beta1 * m[j] + (1.0 - o.beta1) * gj;
      const double vj = o.beta2 * v[j] + (1.0 - o.beta2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      p[j] = static_cast<T>(p[j] - o.lr * (mj / c1) / (std::sqrt(vj / c2) + o.eps));
    }
  }
}

template <class T>
void adam_step(NetParams<T>& net, std::span<const BasicTensor<T>> grads, AdamState<T>& s) {
  auto ps = net.tensors();
  adam_step<T>(std::span<BasicTensor<T>* const>(ps), grads, s);
}

}  // namespace dance
