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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dance/random.hpp"
#include "dance/tensor.hpp"

namespace dance {

struct Dataset {
  Tensor x;                                // [n x f]
  std::optional<std::vector<int>> labels;  // values in [0, k)
  std::vector<std::string> feature_names;
  std::string provenance;

  std::size_t n() const { return x.rows(); }
  std::size_t features() const { return x.cols(); }

  int num_classes() const {
    if (!labels || labels->empty()) return 0;
    return *std::max_element(labels->begin(), labels->end()) + 1;
  }

  void validate() const {
    if (!x.all_finite()) throw ConfigError("dataset contains non-finite values");
    if (labels) {
      if (labels->size() != n()) throw ConfigError("label count does not match row count");
      for (int l : *labels)
        if (l < 0) throw ConfigError("labels must be non-negative");
    }
  }
};

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

/// Split one CSV record; honours double-quoted fields with "" escapes.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size();
}

}  // namespace detail

/// Reads a CSV with a header row. A final column named "label" is split out
/// as integer labels.
inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": missing header row");
  Dataset ds;
  ds.feature_names = detail::split_csv_line(line);
  for (auto& h : ds.feature_names) h = detail::trim(h);
  const std::size_t width = ds.feature_names.size();
  const bool has_label = !ds.feature_names.empty() && ds.feature_names.back() == "label";
  if (has_label) ds.feature_names.pop_back();
  if (ds.feature_names.empty()) throw FormatError(path + ": no feature columns");

  std::vector<float> values;
  std::vector<int> labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != width)
      throw FormatError(path + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                        " cells, header has " + std::to_string(width));
    for (std::size_t c = 0; c < width; ++c) {
      double v = 0;
      if (!detail::parse_double(cells[c], v))
        throw FormatError(path + ": non-numeric cell at row " + std::to_string(row) + ", column " +
                          std::to_string(c + 1) + " ('" + cells[c] + "')");
      if (has_label && c + 1 == width) {
        if (v < 0 || v != std::floor(v))
          throw FormatError(path + ": invalid label at row " + std::to_string(row));
        labels.push_back(static_cast<int>(v));
      } else {
        values.push_back(static_cast<float>(v));
      }
    }
  }
  const std::size_t n = has_label ? labels.size() : values.size() / ds.feature_names.size();
  if (n == 0) throw FormatError(path + ": no data rows");
  ds.x = Tensor({n, ds.feature_names.size()}, std::move(values));
  if (has_label) ds.labels = std::move(labels);
  ds.provenance = path;
  ds.validate();
  return ds;
}

/// Writes features with 9 significant digits (exact for float32) plus an
/// optional trailing "label" column.
inline void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  const std::size_t f = ds.features();
  for (std::size_t j = 0; j < f; ++j) {
    if (j) out << ',';
    out << (j < ds.feature_names.size() ? ds.feature_names[j] : "f" + std::to_string(j + 1));
  }
  if (ds.labels) out << ",label";
  out << '\n' << std::setprecision(9);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t j = 0; j < f; ++j) {
      if (j) out << ',';
      out << ds.x(i, j);
    }
    if (ds.labels) out << ',' << (*ds.labels)[i];
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

/// Per-feature affine transform (x - mean) / std. Features whose std is
/// below 1e-8 keep std = 1, i.e. they are only centered.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  Tensor apply(const Tensor& x) const {
    if (x.cols() != mean.size())
      throw ConfigError("standardizer expects " + std::to_string(mean.size()) + " features, got " +
                        std::to_string(x.cols()));
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j)
        out(i, j) = static_cast<float>((x(i, j) - mean[j]) / stddev[j]);
    return out;
  }
};

inline constexpr double kConstantFeatureStd = 1e-8;

inline Standardizer fit_standardizer(const Tensor& x) {
  if (x.rows() < 2) throw ConfigError("standardize: need at least 2 rows");
  const std::size_t n = x.rows(), f = x.cols();
  Standardizer s{std::vector<double>(f, 0.0), std::vector<double>(f, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j) s.mean[j] += x(i, j);
  for (auto& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j) {
      const double d = x(i, j) - s.mean[j];
      s.stddev[j] += d * d;
    }
  for (auto& v : s.stddev) {
    v = std::sqrt(v / static_cast<double>(n));
    if (v < kConstantFeatureStd) v = 1.0;
  }
  return s;
}

inline std::pair<Dataset, Standardizer> standardize(const Dataset& ds) {
  Standardizer s = fit_standardizer(ds.x);
  Dataset out = ds;
  out.x = s.apply(ds.x);
  return {std::move(out), std::move(s)};
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// k isotropic unit-variance Gaussian clusters whose centers are pairwise at
/// least `separation` apart. Rows are grouped by cluster. If `centers_out`
/// is given it receives the [k x dims] true centers.
inline Dataset gen_blobs(std::size_t k, std::size_t n_per_cluster, std::size_t dims, double separation, Rng& rng,
                         Tensor* centers_out = nullptr) {
  if (k < 2) throw ConfigError("gen_blobs: k must be >= 2");
  if (!(separation > 0)) throw ConfigError("gen_blobs: separation must be > 0");
  if (n_per_cluster == 0 || dims == 0) throw ConfigError("gen_blobs: empty request");

  // Rejection-sample centers in a box that comfortably fits k separated
  // points; widen the box whenever sampling stalls.
  Tensor centers({k, dims});
  double half = separation * std::max(1.0, std::pow(static_cast<double>(k), 1.0 / dims));
  std::size_t placed = 0, attempts = 0;
  while (placed < k) {
    std::uniform_real_distribution<double> u(-half, half);
    std::vector<double> c(dims);
    for (auto& v : c) v = u(rng);
    bool ok = true;
    for (std::size_t j = 0; j < placed && ok; ++j) {
      double d2 = 0;
      for (std::size_t l = 0; l < dims; ++l) d2 += (c[l] - centers(j, l)) * (c[l] - centers(j, l));
      ok = d2 >= separation * separation;
    }
    if (ok) {
      for (std::size_t l = 0; l < dims; ++l) centers(placed, l) = static_cast<float>(c[l]);
      ++placed;
    } else if (++attempts % 1000 == 0) {
      half *= 1.5;
    }
  }

  Dataset ds;
  ds.x = Tensor({k * n_per_cluster, dims});
  ds.labels = std::vector<int>(k * n_per_cluster);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t i = 0; i < n_per_cluster; ++i) {
      const std::size_t r = c * n_per_cluster + i;
      for (std::size_t l = 0; l < dims; ++l) ds.x(r, l) = static_cast<float>(centers(c, l) + normal(rng));
      (*ds.labels)[r] = static_cast<int>(c);
    }
  for (std::size_t l = 0; l < dims; ++l) ds.feature_names.push_back("x" + std::to_string(l + 1));
  std::ostringstream prov;
  prov << "blobs(k=" << k << ",n_per_cluster=" << n_per_cluster << ",dims=" << dims
       << ",separation=" << separation << ")";
  ds.provenance = prov.str();
  if (centers_out) *centers_out = centers;
  return ds;
}

enum class Traffic { ftp, voip, http };
enum class Mobility { stationary, pedestrian, vehicular };

inline const char* to_string(Traffic t) {
  switch (t) {
    case Traffic::ftp: return "FTP";
    case Traffic::voip: return "VoIP";
    case Traffic::http: return "HTTP";
  }
  return "?";
}

inline const char* to_string(Mobility m) {
  switch (m) {
    case Mobility::stationary: return "stationary";
    case Mobility::pedestrian: return "pedestrian";
    case Mobility::vehicular: return "vehicular";
  }
  return "?";
}

struct UserGroup {
  Traffic traffic;
  Mobility mobility;
};

/// The eight user groups of the mobile-network scenario, in label order.
inline std::vector<UserGroup> default_user_groups() {
  return {{Traffic::ftp, Mobility::stationary},  {Traffic::voip, Mobility::stationary},
          {Traffic::http, Mobility::stationary}, {Traffic::ftp, Mobility::pedestrian},
          {Traffic::voip, Mobility::pedestrian}, {Traffic::http, Mobility::pedestrian},
          {Traffic::voip, Mobility::vehicular},  {Traffic::http, Mobility::vehicular}};
}

struct MobileLikeSpec {
  std::vector<UserGroup> groups = default_user_groups();
  std::size_t users_per_group = 50;
  std::size_t seq_len = 64;
  std::size_t channels = 8;
  std::uint64_t seed = 0;
  /// Additive measurement noise on every channel.
  double noise = 0.1;
  /// Spread of the per-user radio baseline (location), a nuisance factor
  /// shared by all groups.
  double location_spread = 1.0;
  /// Per-step probability that a moving user starts a handover.
  double pedestrian_handover = 0.05;
  double vehicular_handover = 0.12;
  /// Fraction of link efficiency lost to channel aging when moving.
  double pedestrian_aging = 0.25;
  double vehicular_aging = 0.5;
  /// Per-step std of the radio random walk when moving.
  double pedestrian_step = 0.15;
  double vehicular_step = 0.45;
  /// Extra scheduling delay per unit of aging (retransmissions at speed).
  double aging_delay = 8.0;
  /// Mean FTP burst and pause lengths in steps.
  double ftp_burst = 8;
  double ftp_pause = 4;

  void validate() const {
    if (groups.empty()) throw ConfigError("mobile spec: no groups");
    if (users_per_group == 0 || seq_len < 2) throw ConfigError("mobile spec: empty sizes");
    if (channels != 8) throw ConfigError("mobile spec: the generator emits exactly 8 channels");
  }
};

inline const std::vector<std::string>& mobile_channel_names() {
  static const std::vector<std::string> names{"dl_throughput", "ul_throughput", "cqi",       "snr",
                                              "rsrp",          "sched_delay",   "rrc_conn", "rrc_idle"};
  return names;
}

/// Channel index ranges of the generated series.
namespace mobile_channel {
inline constexpr std::size_t dl = 0, ul = 1, cqi = 2, snr = 3, rsrp = 4, delay = 5, connected = 6, idle = 7;
}

/// Synthetic per-user KPI series. Traffic type shapes the throughput
/// channels. Mobility shapes the drift of the radio channels, the rate of
/// connection interruptions and the link efficiency. RRC indicators follow
/// activity and interruptions. Each user is one row of seq_len x channels
/// values, time-major (t0c0, t0c1, ..., t1c0, ...).
inline Dataset gen_mobile_like(const MobileLikeSpec& spec) {
  spec.validate();
  const std::size_t T = spec.seq_len, C = spec.channels;
  const std::size_t n = spec.groups.size() * spec.users_per_group;
  Rng rng(derive_seed(spec.seed, {0x6D6F62ull}));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Dataset ds;
  ds.x = Tensor({n, T * C});
  ds.labels = std::vector<int>(n);
  std::vector<double> activity(T), rate(T), radio(T), drop(T);

  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    const auto [traffic, mobility] = spec.groups[g];
    for (std::size_t u = 0; u < spec.users_per_group; ++u) {
      const std::size_t row = g * spec.users_per_group + u;
      (*ds.labels)[row] = static_cast<int>(g);

      // Traffic: on/off process with type-specific dwell times and rates.
      double p_on_to_off = 0, p_off_to_on = 0, peak = 0;
      switch (traffic) {
        case Traffic::ftp: p_on_to_off = 1.0 / spec.ftp_burst; p_off_to_on = 1.0 / spec.ftp_pause; peak = 1.0; break;
        case Traffic::voip: p_on_to_off = 0.0; p_off_to_on = 1.0; peak = 0.15; break;
        case Traffic::http: p_on_to_off = 1.0 / 2; p_off_to_on = 1.0 / 8; peak = 0.6; break;
      }
      const double user_gain = 1.0 + 0.2 * normal(rng);
      bool on = unif(rng) < p_off_to_on / (p_off_to_on + p_on_to_off);
      for (std::size_t t = 0; t < T; ++t) {
        activity[t] = on ? 1.0 : 0.0;
        rate[t] = on ? peak * user_gain * (1.0 + 0.1 * normal(rng)) : 0.0;
        on = on ? unif(rng) >= p_on_to_off : unif(rng) < p_off_to_on;
      }

      // Mobility: random walk of the radio condition around a per-user
      // location baseline. Moving users hand over between cells, which
      // briefly interrupts the connection, and their link adaptation lags
      // the channel, which costs efficiency. Vehicles also cross coverage
      // holes that cut the radio quality.
      double step = 0, p_handover = 0, aging = 0, p_hole = 0;
      switch (mobility) {
        case Mobility::stationary: step = 0.02; break;
        case Mobility::pedestrian:
          step = spec.pedestrian_step, p_handover = spec.pedestrian_handover, aging = spec.pedestrian_aging;
          break;
        case Mobility::vehicular:
          step = spec.vehicular_step, p_handover = spec.vehicular_handover, aging = spec.vehicular_aging;
          p_hole = 0.04;
          break;
      }
      double level = spec.location_spread * normal(rng);
      int hole_left = 0, handover_left = 0;
      for (std::size_t t = 0; t < T; ++t) {
        level += step * normal(rng);
        if (hole_left == 0 && unif(rng) < p_hole) hole_left = 2 + static_cast<int>(unif(rng) * 3);
        if (handover_left == 0 && unif(rng) < p_handover) handover_left = 1 + static_cast<int>(unif(rng) * 2);
        radio[t] = level - (hole_left > 0 ? 2.5 : 0.0);
        drop[t] = hole_left > 0 || handover_left > 0 ? 1.0 : 0.0;
        if (hole_left > 0) --hole_left;
        if (handover_left > 0) --handover_left;
      }

      int idle_timer = 0;
      auto x = ds.x.row(row);
      for (std::size_t t = 0; t < T; ++t) {
        using namespace mobile_channel;
        const double quality = radio[t];
        // Link efficiency in (0, 1); nothing is delivered while interrupted.
        const double eff = (1.0 - aging) / (1.0 + std::exp(-quality));
        const double served = drop[t] > 0 ? 0.0 : rate[t] * (0.5 + eff);
        const double ul_share = traffic == Traffic::voip ? 0.9 : (traffic == Traffic::ftp ? 0.08 : 0.2);
        if (activity[t] > 0) idle_timer = 4;
        const bool rrc_on = idle_timer > 0;
        if (idle_timer > 0) --idle_timer;
        double v[8];
        v[dl] = served;
        v[ul] = ul_share * served;
        v[cqi] = 7.5 + 5.0 * (1.0 / (1.0 + std::exp(-quality)) - 0.5) * 2.0;
        v[snr] = 10.0 + 6.0 * quality;
        v[rsrp] = -95.0 + 5.0 * quality;
        v[delay] = rrc_on ? 2.0 + 4.0 * (1.0 - eff) * (0.5 + activity[t]) + spec.aging_delay * aging : 0.0;
        v[connected] = rrc_on && drop[t] == 0 ? 1.0 : 0.0;
        v[idle] = rrc_on ? (drop[t] > 0 ? 0.5 : 0.0) : 1.0;
        for (std::size_t c = 0; c < C; ++c) x[t * C + c] = static_cast<float>(v[c] + spec.noise * normal(rng));
      }
    }
  }
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t c = 0; c < C; ++c) ds.feature_names.push_back(mobile_channel_names()[c] + "_t" + std::to_string(t));
  std::ostringstream prov;
  prov << "mobile_like(groups=" << spec.groups.size() << ",users_per_group=" << spec.users_per_group
       << ",seq_len=" << T << ",channels=" << C << ",seed=" << spec.seed << ")";
  ds.provenance = prov.str();
  return ds;
}

}  // namespace dance
