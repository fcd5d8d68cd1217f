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

// Regularized information maximization on the clustering features: a small
// softmax classifier trained to make confident, balanced assignments. The
// restart with the lowest final conditional entropy seeds the centroids.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "dance/adam.hpp"
#include "dance/data.hpp"
#include "dance/net.hpp"

namespace dance {

struct RimOptions {
  std::size_t k = 2;
  double mu = 1.0;
  double lambda = 1e-4;
  std::size_t iterations = 300;
  std::size_t restarts = 10;
  std::vector<std::size_t> hidden{64, 64};
  AdamOptions adam{};
};

namespace detail {
template <class T>
void require_row_stochastic(const BasicTensor<T>& p, const char* op) {
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double s = 0;
    for (T v : p.row(i)) {
      if (v < T{0}) throw UsageError(std::string(op) + ": negative probability in row " + std::to_string(i));
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-3)
      throw UsageError(std::string(op) + ": row " + std::to_string(i) + " sums to " + std::to_string(s));
  }
}
}  // namespace detail

/// -(1/n) sum_i sum_j p_ij log p_ij.
template <class T>
Var cond_entropy(Tape<T>& t, Var p) {
  const double n = static_cast<double>(t.value(p).rows());
  return scale(t, sum(t, mul(t, p, log_clamped(t, p))), -1.0 / n);
}

/// sum_j pbar_j log pbar_j with pbar the column means: the negative entropy
/// of the label marginal, so minimizing it balances cluster sizes.
template <class T>
Var label_entropy(Tape<T>& t, Var p) {
  Var marginal = col_mean(t, p);
  return sum(t, mul(t, marginal, log_clamped(t, marginal)));
}

template <class T>
double cond_entropy(const BasicTensor<T>& p) {
  detail::require_row_stochastic(p, "cond_entropy");
  Tape<T> t;
  return t.value(cond_entropy(t, t.constant(p)))[0];
}

template <class T>
double label_entropy(const BasicTensor<T>& p) {
  detail::require_row_stochastic(p, "label_entropy");
  Tape<T> t;
  return t.value(label_entropy(t, t.constant(p)))[0];
}

/// cond_entropy + mu * label_entropy + lambda * sum of squared weights
/// (biases are not decayed).
template <class T>
Var rim_loss(Tape<T>& t, const NetParams<T>& net, const BoundNet& bound, Var z_c, double mu, double lambda) {
  Var p = forward(t, net, bound, z_c);
  Var loss = add(t, cond_entropy(t, p), scale(t, label_entropy(t, p), mu));
  if (lambda != 0.0)
    for (std::size_t i = 0; i < net.layers.size(); ++i)
      loss = add(t, loss, scale(t, sum_squares(t, bound.params[2 * i]), lambda));
  return loss;
}

template <class T>
double rim_loss(const NetParams<T>& net, const BasicTensor<T>& z_c, double mu, double lambda) {
  Tape<T> t;
  BoundNet b = bind(t, net, false);
  return t.value(rim_loss(t, net, b, t.constant(z_c), mu, lambda))[0];
}

/// Net plus the affine input normalization it was trained under.
template <class T = float>
struct RimNet {
  NetParams<T> net;
  Standardizer input;

  BasicTensor<T> probabilities(const BasicTensor<T>& z_c) const {
    return predict(net, input.apply(z_c.template cast<float>()).template cast<T>());
  }
};

template <class T = float>
struct RimRun {
  RimNet<T> model;
  double cond_ent = std::numeric_limits<double>::infinity();
};

template <class T>
std::vector<int> hard_assign(const BasicTensor<T>& p) {
  std::vector<int> a(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) a[i] = static_cast<int>(argmax_row(p, i));
  return a;
}

/// Full-batch training of one randomly initialized RIM net. The inputs are
/// z-scored first so that one learning rate fits any latent scale.
template <class T>
RimRun<T> train_rim_once(const BasicTensor<T>& z_c, const RimOptions& opt, std::uint64_t seed) {
  if (opt.k < 2) throw ConfigError("RIM needs k >= 2");
  Rng rng(seed);
  RimRun<T> run;
  run.model.input = fit_standardizer(z_c.template cast<float>());
  const BasicTensor<T> z = run.model.input.apply(z_c.template cast<float>()).template cast<T>();
  run.model.net = make_mlp<T>(detail::chain(z.cols(), opt.hidden, opt.k), Activation::relu, Activation::softmax, rng);
  auto state = make_adam(run.model.net, opt.adam);
  for (std::size_t it = 0; it < opt.iterations; ++it) {
    Tape<T> t;
    BoundNet b = bind(t, run.model.net);
    Var loss = rim_loss(t, run.model.net, b, t.constant(z), opt.mu, opt.lambda);
    if (!std::isfinite(t.value(loss)[0])) return run;  // discarded: cond_ent stays +inf
    t.backward(loss);
    try {
      adam_step<T>(run.model.net, gradients(t, b), state);
    } catch (const NonFiniteError&) {
      return run;
    }
  }
  const auto p = predict(run.model.net, z);
  Tape<T> t;
  run.cond_ent = t.value(cond_entropy(t, t.constant(p)))[0];
  if (!std::isfinite(run.cond_ent)) run.cond_ent = std::numeric_limits<double>::infinity();
  return run;
}

template <class T = float>
struct RimResult {
  RimNet<T> best;
  double best_cond_ent = std::numeric_limits<double>::infinity();
  std::size_t chosen_restart = 0;
  /// Final conditional entropy per restart; +inf marks a discarded restart
  /// (non-finite training or an empty cluster).
  std::vector<double> restart_scores;
  std::vector<double> raw_cond_ent;
  BasicTensor<T> centroids;  // [k x d]
  std::vector<int> assignments;
};

/// Mean of the rows assigned to each cluster; false if a cluster is empty.
template <class T>
bool cluster_means(const BasicTensor<T>& z, const std::vector<int>& a, std::size_t k, BasicTensor<T>& out) {
  const std::size_t d = z.cols();
  std::vector<double> sums(k * d, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    ++counts[a[i]];
    for (std::size_t l = 0; l < d; ++l) sums[a[i] * d + l] += z(i, l);
  }
  if (std::find(counts.begin(), counts.end(), 0u) != counts.end()) return false;
  out = BasicTensor<T>({k, d});
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t l = 0; l < d; ++l) out(j, l) = static_cast<T>(sums[j * d + l] / counts[j]);
  return true;
}

/// `restarts` independent trainings (restart r seeded from (seed, r)), keep
/// the one with the lowest conditional entropy whose hard assignment uses
/// every cluster, and return its cluster means as centroids.
template <class T>
RimResult<T> rim_init(const BasicTensor<T>& z_c, const RimOptions& opt, std::uint64_t seed) {
  if (opt.restarts < 1) throw ConfigError("RIM needs at least one restart");
  if (z_c.rows() < opt.k) throw ConfigError("RIM: fewer points than clusters");
  RimResult<T> res;
  std::vector<RimRun<T>> runs;
  for (std::size_t r = 0; r < opt.restarts; ++r) {
    runs.push_back(train_rim_once(z_c, opt, derive_seed(seed, {stream::rim, r})));
    res.raw_cond_ent.push_back(runs.back().cond_ent);
  }
  res.restart_scores = res.raw_cond_ent;
  std::vector<BasicTensor<T>> centroids(opt.restarts);
  std::vector<std::vector<int>> assignments(opt.restarts);
  for (std::size_t r = 0; r < opt.restarts; ++r) {
    if (!std::isfinite(res.restart_scores[r])) continue;
    assignments[r] = hard_assign(runs[r].model.probabilities(z_c));
    if (!cluster_means(z_c, assignments[r], opt.k, centroids[r]))
      res.restart_scores[r] = std::numeric_limits<double>::infinity();
  }
  const auto best = std::min_element(res.restart_scores.begin(), res.restart_scores.end());
  if (!std::isfinite(*best)) throw TrainingError("rim-init", opt.iterations, "degenerate RIM initialization");
  res.chosen_restart = static_cast<std::size_t>(best - res.restart_scores.begin());
  res.best_cond_ent = *best;
  res.best = std::move(runs[res.chosen_restart].model);
  res.centroids = std::move(centroids[res.chosen_restart]);
  res.assignments = std::move(assignments[res.chosen_restart]);
  return res;
}

}  // namespace dance
