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

// k-means with k-means++ seeding and Lloyd iterations. Used both as an
// ablation baseline and as the centroid initializer when RIM is disabled.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "dance/random.hpp"
#include "dance/tensor.hpp"

namespace dance {

struct KMeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iter = 300;
  double tol = 1e-4;
};

template <class T = float>
struct KMeansModel {
  BasicTensor<T> centroids;  // [k x d]
  double inertia = 0;
};

template <class T = float>
struct KMeansResult {
  KMeansModel<T> model;
  std::vector<int> labels;
  std::size_t chosen_restart = 0;
  std::vector<double> restart_inertia;
  std::size_t iterations = 0;
};

template <class T = float>
struct LloydStep {
  BasicTensor<T> centroids;
  std::vector<int> labels;
  /// Inertia of the assignment against the input centroids.
  double inertia = 0;
};

namespace detail {
template <class T>
double sq_dist(const BasicTensor<T>& x, std::size_t i, const BasicTensor<T>& c, std::size_t j) {
  double s = 0;
  for (std::size_t l = 0; l < x.cols(); ++l) {
    const double d = static_cast<double>(x(i, l)) - static_cast<double>(c(j, l));
    s += d * d;
  }
  return s;
}

/// Nearest centroid per row (ties to the lower index) and its squared distance.
template <class T>
std::vector<int> nearest(const BasicTensor<T>& x, const BasicTensor<T>& c, std::vector<double>& d2) {
  std::vector<int> labels(x.rows());
  d2.assign(x.rows(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c.rows(); ++j) {
      const double d = sq_dist(x, i, c, j);
      if (d < best) {
        best = d;
        labels[i] = static_cast<int>(j);
      }
    }
    d2[i] = best;
  }
  return labels;
}
}  // namespace detail

/// Sum over rows of the squared distance to the nearest centroid.
template <class T>
double inertia(const BasicTensor<T>& x, const BasicTensor<T>& centroids) {
  std::vector<double> d2;
  detail::nearest(x, centroids, d2);
  double s = 0;
  for (double v : d2) s += v;
  return s;
}

/// Assign, then average. An emptied cluster is moved to the row farthest
/// from its nearest centroid, which then becomes that cluster's only member.
template <class T>
LloydStep<T> lloyd_step(const BasicTensor<T>& x, const BasicTensor<T>& centroids) {
  if (x.cols() != centroids.cols()) throw ConfigError("lloyd_step: dimension mismatch");
  const std::size_t k = centroids.rows(), d = x.cols();
  LloydStep<T> out;
  std::vector<double> d2;
  out.labels = detail::nearest(x, centroids, d2);
  for (double v : d2) out.inertia += v;

  std::vector<double> sums(k * d, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto j = static_cast<std::size_t>(out.labels[i]);
    ++counts[j];
    for (std::size_t l = 0; l < d; ++l) sums[j * d + l] += x(i, l);
  }
  out.centroids = BasicTensor<T>({k, d});
  for (std::size_t j = 0; j < k; ++j) {
    if (counts[j] == 0) {
      std::size_t far = 0;
      for (std::size_t i = 1; i < x.rows(); ++i)
        if (d2[i] > d2[far]) far = i;
      const auto old = static_cast<std::size_t>(out.labels[far]);
      for (std::size_t l = 0; l < d; ++l) {
        sums[old * d + l] -= x(far, l);
        sums[j * d + l] = x(far, l);
      }
      --counts[old];
      counts[j] = 1;
      out.labels[far] = static_cast<int>(j);
      d2[far] = 0;
    }
  }
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t l = 0; l < d; ++l)
      out.centroids(j, l) = counts[j] ? static_cast<T>(sums[j * d + l] / static_cast<double>(counts[j]))
                                      : centroids(j, l);
  return out;
}

/// k-means++: first index uniform, later ones sampled proportionally to
/// the squared distance to the closest chosen seed.
template <class T>
std::vector<std::size_t> kmeanspp_indices(const BasicTensor<T>& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows();
  std::vector<std::size_t> idx{std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)};
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (idx.size() < k) {
    const std::size_t last = idx.back();
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      for (std::size_t l = 0; l < x.cols(); ++l) {
        const double diff = static_cast<double>(x(i, l)) - x(last, l);
        s += diff * diff;
      }
      d2[i] = std::min(d2[i], s);
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        if (u < d2[i]) {
          pick = i;
          break;
        }
        u -= d2[i];
      }
    } else {
      // All remaining points coincide with a seed: take the first unused row.
      for (std::size_t i = 0; i < n; ++i)
        if (std::find(idx.begin(), idx.end(), i) == idx.end()) {
          pick = i;
          break;
        }
    }
    idx.push_back(pick);
  }
  return idx;
}

/// Lloyd iterations from the given seed rows until the largest centroid
/// shift drops below tol or max_iter steps have run.
template <class T>
KMeansResult<T> kmeans_from_seeds(const BasicTensor<T>& x, const std::vector<std::size_t>& seeds,
                                  std::size_t max_iter, double tol) {
  KMeansResult<T> r;
  BasicTensor<T> c = x.gather_rows(seeds);
  for (std::size_t it = 0; it < max_iter; ++it) {
    LloydStep<T> s = lloyd_step(x, c);
    double shift = 0;
    for (std::size_t j = 0; j < c.rows(); ++j) {
      double d = 0;
      for (std::size_t l = 0; l < c.cols(); ++l) {
        const double diff = static_cast<double>(s.centroids(j, l)) - c(j, l);
        d += diff * diff;
      }
      shift = std::max(shift, std::sqrt(d));
    }
    c = std::move(s.centroids);
    r.iterations = it + 1;
    if (shift < tol) break;
  }
  std::vector<double> d2;
  r.labels = detail::nearest(x, c, d2);
  for (double v : d2) r.model.inertia += v;
  r.model.centroids = std::move(c);
  return r;
}

/// Best of `restarts` seeded runs by inertia; the earliest restart wins ties.
template <class T>
KMeansResult<T> kmeans_fit(const BasicTensor<T>& x, std::size_t k, const KMeansOptions& opt, Rng& rng) {
  if (k < 1) throw ConfigError("kmeans: k must be >= 1");
  if (x.rows() < k) throw ConfigError("kmeans: n < k");
  if (opt.restarts < 1) throw ConfigError("kmeans: restarts must be >= 1");
  KMeansResult<T> best;
  std::vector<double> all;
  for (std::size_t r = 0; r < opt.restarts; ++r) {
    KMeansResult<T> run = kmeans_from_seeds(x, kmeanspp_indices(x, k, rng), opt.max_iter, opt.tol);
    all.push_back(run.model.inertia);
    if (r == 0 || run.model.inertia < best.model.inertia) {
      best = std::move(run);
      best.chosen_restart = r;
    }
  }
  best.restart_inertia = std::move(all);
  return best;
}

}  // namespace dance
