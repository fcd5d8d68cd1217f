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

// Centroid refinement with Student's t soft assignments and a sharpened
// target distribution. The encoder, the decoder and the centroids are
// updated jointly; the decorrelator keeps playing during refinement.

#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "dance/adam.hpp"
#include "dance/dan.hpp"

namespace dance {

template <class T = float>
struct ClusterModel {
  BasicTensor<T> centroids;  // [k x d]
  double alpha = 1.0;

  std::size_t k() const { return centroids.rows(); }
  std::size_t dims() const { return centroids.cols(); }

  double min_pairwise_distance() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < k(); ++a)
      for (std::size_t b = a + 1; b < k(); ++b) {
        double d2 = 0;
        for (std::size_t l = 0; l < dims(); ++l) {
          const double diff = static_cast<double>(centroids(a, l)) - centroids(b, l);
          d2 += diff * diff;
        }
        best = std::min(best, std::sqrt(d2));
      }
    return best;
  }

  void validate() const {
    if (k() < 2) throw ConfigError("cluster model needs k >= 2");
    if (!(alpha > 0)) throw ConfigError("alpha must be > 0");
    if (!(min_pairwise_distance() > 0)) throw ConfigError("centroids must be pairwise distinct");
  }
};

template <class T>
Var soft_assign(Tape<T>& t, Var z, Var centroids, double alpha) {
  return row_normalize(t, student_t_kernel(t, sq_distances(t, z, centroids), alpha));
}

/// q_ij proportional to (1 + |z_i - c_j|^2 / alpha)^(-(alpha+1)/2), rows sum to 1.
template <class T>
BasicTensor<T> soft_assign(const BasicTensor<T>& z, const ClusterModel<T>& model) {
  Tape<T> t;
  return t.value(soft_assign(t, t.constant(z), t.constant(model.centroids), model.alpha));
}

/// p_ij proportional to q_ij^2 / f_j with cluster frequency f_j = sum_i q_ij.
template <class T>
BasicTensor<T> target_distribution(const BasicTensor<T>& q) {
  const std::size_t n = q.rows(), k = q.cols();
  std::vector<accum_t<T>> f(k, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) f[j] += q(i, j);
  BasicTensor<T> p(q.shape());
  for (std::size_t i = 0; i < n; ++i) {
    accum_t<T> s = 0;
    std::vector<accum_t<T>> w(k);
    for (std::size_t j = 0; j < k; ++j) s += (w[j] = static_cast<accum_t<T>>(q(i, j)) * q(i, j) / f[j]);
    for (std::size_t j = 0; j < k; ++j) p(i, j) = static_cast<T>(w[j] / s);
  }
  return p;
}

namespace detail {
template <class T>
accum_t<T> sum_xlogx(const BasicTensor<T>& p) {
  accum_t<T> s = 0;
  for (T v : p.values())
    if (v > T{0}) s += static_cast<accum_t<T>>(v) * std::log(static_cast<accum_t<T>>(v));
  return s;
}
}  // namespace detail

/// KL(P || Q) summed over points; `p` is a constant target. 0 log 0 := 0.
template <class T>
Var dec_loss(Tape<T>& t, const BasicTensor<T>& p, Var q) {
  if (!p.same_shape(t.value(q))) throw ConfigError("dec_loss: p and q shapes differ");
  Var cross = sum(t, mul(t, t.constant(p), log_clamped(t, q)));
  return add_scalar(t, scale(t, cross, -1.0), static_cast<double>(detail::sum_xlogx(p)));
}

template <class T>
double dec_loss(const BasicTensor<T>& p, const BasicTensor<T>& q) {
  Tape<T> t;
  return t.value(dec_loss(t, p, t.constant(q)))[0];
}

/// Mean over points of the largest soft-assignment probability.
template <class T>
double mean_confidence(const BasicTensor<T>& q) {
  double s = 0;
  for (std::size_t i = 0; i < q.rows(); ++i) s += q(i, argmax_row(q, i));
  return s / static_cast<double>(q.rows());
}

/// Nearest centroid by squared distance; ties go to the lower index.
template <class T>
std::vector<int> final_assign(const BasicTensor<T>& z, const BasicTensor<T>& centroids) {
  if (z.cols() != centroids.cols()) throw ConfigError("final_assign: dimension mismatch");
  std::vector<int> labels(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centroids.rows(); ++j) {
      double d2 = 0;
      for (std::size_t l = 0; l < z.cols(); ++l) {
        const double diff = static_cast<double>(z(i, l)) - centroids(j, l);
        d2 += diff * diff;
      }
      if (d2 < best) {
        best = d2;
        labels[i] = static_cast<int>(j);
      }
    }
  }
  return labels;
}

inline constexpr double kCentroidCollapseDistance = 1e-6;

struct DecOptions {
  double beta_dec = 0.1;
  std::size_t iterations = 2000;
  std::size_t batch_size = 256;
  AdamOptions adam{};
  /// Keep the decorrelator game running (false when refining a plain
  /// autoencoder).
  bool adversarial = true;
  /// Leading latent columns used as the clustering space.
  std::size_t cluster_dims = 2;
};

namespace detail {

template <class T>
class DecTerm final : public LatentTerm<T> {
 public:
  DecTerm(ClusterModel<T>& cluster, const DecOptions& opt)
      : cluster_(cluster), opt_(opt), state_(make_adam<T>(std::span<const BasicTensor<T>* const>(ptrs()), opt.adam)) {}

  Var build(Tape<T>& t, Var z) override {
    const std::size_t w = t.value(z).cols();
    Var zc = opt_.cluster_dims == w ? z : slice_cols(t, z, 0, opt_.cluster_dims);
    centroids_ = t.variable(cluster_.centroids);
    Var q = soft_assign(t, zc, centroids_, cluster_.alpha);
    const auto p = target_distribution(t.value(q));
    Var kl = dec_loss(t, p, q);
    last_ = t.value(kl)[0];
    return scale(t, kl, opt_.beta_dec);
  }

  void update(const Tape<T>& t) override {
    std::vector<BasicTensor<T>> g{t.grad(centroids_)};
    std::vector<BasicTensor<T>*> params{&cluster_.centroids};
    adam_step<T>(std::span<BasicTensor<T>* const>(params), g, state_);
    ++iteration_;
    const double d = cluster_.min_pairwise_distance();
    if (d < kCentroidCollapseDistance)
      throw TrainingError("dec-refine", iteration_ - 1,
                          "centroid collapse: minimum pairwise distance " + std::to_string(d));
  }

  double last_value() const override { return last_; }

 private:
  std::vector<const BasicTensor<T>*> ptrs() const { return {&cluster_.centroids}; }

  ClusterModel<T>& cluster_;
  DecOptions opt_;
  AdamState<T> state_;
  Var centroids_{};
  double last_ = 0;
  std::size_t iteration_ = 0;
};

}  // namespace detail

/// Joint refinement of encoder, decoder and centroids on
/// rec + beta_cor * cor_q + beta_dec * KL(P || Q), with the decorrelator
/// updated every iteration as in pre-training.
template <class T>
LossHistory refine(DanModel<T>& model, ClusterModel<T>& cluster, const BasicTensor<T>& x, const DecOptions& options,
                   std::uint64_t seed) {
  cluster.validate();
  if (options.cluster_dims != cluster.dims())
    throw ConfigError("refine: centroid width " + std::to_string(cluster.dims()) + " != cluster space width " +
                      std::to_string(options.cluster_dims));
  if (options.cluster_dims > model.latent_width()) throw ConfigError("refine: cluster space wider than latent");
  if (options.beta_dec < 0) throw ConfigError("beta_dec must be >= 0");
  detail::DecTerm<T> term(cluster, options);
  DanTrainOptions loop{options.iterations, options.batch_size, options.adam, options.adversarial, "dec-refine"};
  return detail::run_dan_loop<T>(model, x, loop, seed, &term);
}

/// Leading `dims` latent columns of every row of x.
template <class T>
BasicTensor<T> cluster_space(const DanModel<T>& model, const BasicTensor<T>& x, std::size_t dims) {
  BasicTensor<T> z = predict(model.encoder, x);
  return dims == z.cols() ? z : z.slice_cols(0, dims);
}

}  // namespace dance
