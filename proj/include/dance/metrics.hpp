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

// External clustering metrics: accuracy under the best one-to-one label
// matching, and normalized mutual information.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "dance/error.hpp"

namespace dance {

using CostMatrix = std::vector<std::vector<double>>;

struct Assignment {
  std::vector<std::size_t> perm;  // row i -> column perm[i]
  double cost = 0;
};

namespace detail {

/// O(m^3) shortest-augmenting-path solver; returns an optimal permutation
/// without any tie preference.
inline std::vector<std::size_t> solve_assignment(const CostMatrix& a) {
  const std::size_t m = a.size();
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual source.
  std::vector<double> u(m + 1, 0), v(m + 1, 0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> perm(m);
  for (std::size_t j = 1; j <= m; ++j) perm[p[j] - 1] = j - 1;
  return perm;
}

inline double assignment_cost(const CostMatrix& a, const std::vector<std::size_t>& perm) {
  double s = 0;
  for (std::size_t i = 0; i < perm.size(); ++i) s += a[i][perm[i]];
  return s;
}

inline double optimal_cost(const CostMatrix& a) {
  return a.empty() ? 0.0 : assignment_cost(a, solve_assignment(a));
}

}  // namespace detail

/// Minimum-cost perfect matching on a square matrix. Among optimal
/// permutations the lexicographically smallest one is returned.
inline Assignment hungarian(const CostMatrix& cost) {
  const std::size_t m = cost.size();
  for (const auto& row : cost) {
    if (row.size() != m) throw UsageError("hungarian: cost matrix must be square");
    for (double c : row)
      if (!std::isfinite(c)) throw UsageError("hungarian: non-finite cost");
  }
  Assignment out;
  if (m == 0) return out;
  const double best = detail::optimal_cost(cost);
  double scale = 1;
  for (const auto& row : cost)
    for (double c : row) scale = std::max(scale, std::abs(c));
  const double tol = 1e-9 * scale * static_cast<double>(m);

  // Fix rows in order, each to the smallest column that still admits an
  // optimal completion of the remaining rows and columns.
  std::vector<std::size_t> rows_left(m), cols_left(m);
  for (std::size_t i = 0; i < m; ++i) rows_left[i] = cols_left[i] = i;
  double fixed = 0;
  for (std::size_t i = 0; i < m; ++i) {
    rows_left.erase(rows_left.begin());
    for (std::size_t c = 0; c < cols_left.size(); ++c) {
      const std::size_t j = cols_left[c];
      std::vector<std::size_t> rest = cols_left;
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(c));
      CostMatrix sub(rows_left.size(), std::vector<double>(rest.size()));
      for (std::size_t r = 0; r < rows_left.size(); ++r)
        for (std::size_t s = 0; s < rest.size(); ++s) sub[r][s] = cost[rows_left[r]][rest[s]];
      if (fixed + cost[i][j] + detail::optimal_cost(sub) <= best + tol) {
        out.perm.push_back(j);
        fixed += cost[i][j];
        cols_left = std::move(rest);
        break;
      }
    }
  }
  out.cost = detail::assignment_cost(cost, out.perm);
  return out;
}

struct Contingency {
  std::vector<std::vector<long>> counts;  // [k_true x k_pred]
  std::vector<int> true_labels;           // original label of each row
  std::vector<int> pred_labels;           // original label of each column
  long n = 0;
};

/// Labels are compacted in ascending order of their values.
inline Contingency contingency(const std::vector<int>& labels_true, const std::vector<int>& labels_pred) {
  if (labels_true.empty()) throw UsageError("metrics: empty label vectors");
  if (labels_true.size() != labels_pred.size()) throw UsageError("metrics: label vectors differ in length");
  std::map<int, std::size_t> ti, pi;
  for (int v : labels_true) ti.emplace(v, 0);
  for (int v : labels_pred) pi.emplace(v, 0);
  Contingency c;
  for (auto& [label, idx] : ti) {
    idx = c.true_labels.size();
    c.true_labels.push_back(label);
  }
  for (auto& [label, idx] : pi) {
    idx = c.pred_labels.size();
    c.pred_labels.push_back(label);
  }
  c.counts.assign(ti.size(), std::vector<long>(pi.size(), 0));
  for (std::size_t i = 0; i < labels_true.size(); ++i) ++c.counts[ti[labels_true[i]]][pi[labels_pred[i]]];
  c.n = static_cast<long>(labels_true.size());
  return c;
}

struct AccuracyResult {
  double acc = 0;
  long matched = 0;
  /// For each compacted predicted cluster, the compacted true class it is
  /// matched to, or -1 if it falls on padding.
  std::vector<int> pred_to_true;
};

inline AccuracyResult accuracy_detail(const Contingency& c) {
  const std::size_t kt = c.counts.size(), kp = c.counts[0].size(), m = std::max(kt, kp);
  long top = 0;
  for (const auto& row : c.counts)
    for (long v : row) top = std::max(top, v);
  // Rows are predicted clusters, columns true classes, zero-padded to square.
  CostMatrix cost(m, std::vector<double>(m, static_cast<double>(top)));
  for (std::size_t p = 0; p < kp; ++p)
    for (std::size_t t = 0; t < kt; ++t) cost[p][t] = static_cast<double>(top - c.counts[t][p]);
  const Assignment a = hungarian(cost);
  AccuracyResult out;
  for (std::size_t p = 0; p < kp; ++p) {
    const std::size_t t = a.perm[p];
    out.pred_to_true.push_back(t < kt ? static_cast<int>(t) : -1);
    if (t < kt) out.matched += c.counts[t][p];
  }
  out.acc = static_cast<double>(out.matched) / static_cast<double>(c.n);
  return out;
}

/// Fraction of points whose predicted cluster maps to their true class
/// under the best one-to-one cluster/class matching.
inline double acc(const std::vector<int>& labels_true, const std::vector<int>& labels_pred) {
  return accuracy_detail(contingency(labels_true, labels_pred)).acc;
}

/// I(T;P) / sqrt(H(T) H(P)), natural logs. Identical partitions give 1;
/// otherwise a zero entropy on either side gives 0.
inline double nmi(const std::vector<int>& labels_true, const std::vector<int>& labels_pred) {
  const Contingency c = contingency(labels_true, labels_pred);
  const std::size_t kt = c.counts.size(), kp = c.counts[0].size();
  const double n = static_cast<double>(c.n);
  std::vector<double> rt(kt, 0), rp(kp, 0);
  std::size_t nonzero = 0;
  for (std::size_t t = 0; t < kt; ++t)
    for (std::size_t p = 0; p < kp; ++p) {
      rt[t] += static_cast<double>(c.counts[t][p]);
      rp[p] += static_cast<double>(c.counts[t][p]);
      nonzero += c.counts[t][p] > 0;
    }
  if (kt == kp && nonzero == kt) return 1.0;
  auto entropy = [n](const std::vector<double>& r) {
    double h = 0;
    for (double v : r)
      if (v > 0) h -= (v / n) * std::log(v / n);
    return h;
  };
  const double ht = entropy(rt), hp = entropy(rp);
  if (ht <= 0 || hp <= 0) return 0.0;
  double mi = 0;
  for (std::size_t t = 0; t < kt; ++t)
    for (std::size_t p = 0; p < kp; ++p) {
      const double v = static_cast<double>(c.counts[t][p]);
      if (v > 0) mi += (v / n) * std::log(v * n / (rt[t] * rp[p]));
    }
  return std::clamp(mi / std::sqrt(ht * hp), 0.0, 1.0);
}

}  // namespace dance
