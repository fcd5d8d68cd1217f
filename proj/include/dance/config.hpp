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

// Run configuration: line-based `key = value` text, `#` starts a comment.
// Every key has a default; unknown keys are rejected.

#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dance/data.hpp"
#include "dance/error.hpp"

namespace dance {

struct RunConfig {
  // Data: "blobs", "mobile", or a path to a CSV file.
  std::string data = "blobs";
  std::uint64_t data_seed = 0;
  std::size_t blobs_k = 4;
  std::size_t blobs_per_cluster = 500;
  std::size_t blobs_dims = 16;
  double blobs_separation = 8.0;
  std::size_t mobile_users_per_group = 50;
  std::size_t mobile_seq_len = 64;
  double mobile_noise = 0.1;

  std::size_t k = 4;
  std::size_t n_zc = 2;
  std::size_t n_zr = 2;
  double sigma = 1.0;
  double beta_cor = 1.0;
  double beta_dec = 0.1;
  double mu = 1.0;
  double lambda = 1e-4;
  double alpha = 1.0;
  double lr = 1e-3;
  double rim_lr = 1e-3;
  /// Pre-training step size decays linearly to lr * pretrain_final_lr_scale.
  double pretrain_final_lr_scale = 1.0;
  std::size_t e_pre = 6000;
  std::size_t e_rim = 300;
  std::size_t n_rim = 10;
  std::size_t e_dec = 4000;
  std::size_t batch_size = 256;
  std::size_t kmeans_restarts = 10;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<std::size_t> encoder_widths{64, 64};
  std::vector<std::size_t> decoder_widths{64, 64};
  std::vector<std::size_t> decorrelator_widths{64, 64};
  std::vector<std::size_t> rim_widths{64, 64};

  bool use_dan = true;
  bool use_rim = true;
  bool use_dec = true;
  /// Every run is single-threaded and bitwise reproducible; the flag is
  /// kept so configs can state the requirement explicitly.
  bool deterministic = true;
  /// Loss histories keep every n-th iteration (and the last one).
  std::size_t history_every = 50;
  std::string out_dir = "out";

  void validate() const;
  /// Canonical `key = value` text, one line per key in declaration order.
  std::string to_text() const;
};

namespace detail {

inline std::string trim_ws(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <class U>
U parse_number(const std::string& key, const std::string& v) {
  U out{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || v.empty()) {
    if constexpr (std::is_floating_point_v<U>)
      throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    else
      throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'");
}

template <class U>
std::vector<U> parse_list(const std::string& key, const std::string& v) {
  std::vector<U> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<U>(key, trim_ws(item)));
  return out;
}

template <class U>
std::string join(const std::vector<U>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
  return s;
}

/// Shortest text that parses back to exactly v.
inline std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct ConfigKey {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class U>
ConfigKey number_key(U RunConfig::*field, const char* name) {
  return {[field, name](RunConfig& c, const std::string& v) { c.*field = parse_number<U>(name, v); },
          [field](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<U>)
              return format_double(c.*field);
            else
              return std::to_string(c.*field);
          }};
}

template <class U>
ConfigKey list_key(std::vector<U> RunConfig::*field, const char* name) {
  return {[field, name](RunConfig& c, const std::string& v) { c.*field = parse_list<U>(name, v); },
          [field](const RunConfig& c) { return join(c.*field); }};
}

inline ConfigKey bool_key(bool RunConfig::*field, const char* name) {
  return {[field, name](RunConfig& c, const std::string& v) { c.*field = parse_bool(name, v); },
          [field](const RunConfig& c) { return std::string(c.*field ? "true" : "false"); }};
}

inline ConfigKey string_key(std::string RunConfig::*field, const char* name) {
  return {[field, name](RunConfig& c, const std::string& v) {
            if (v.empty()) throw ConfigError(std::string("key '") + name + "': empty value");
            c.*field = v;
          },
          [field](const RunConfig& c) { return c.*field; }};
}

/// Ordered key table; the order is the canonical echo order.
inline const std::vector<std::pair<std::string, ConfigKey>>& config_keys() {
  static const std::vector<std::pair<std::string, ConfigKey>> keys = [] {
    std::vector<std::pair<std::string, ConfigKey>> k;
    auto add = [&k](const char* name, ConfigKey key) { k.emplace_back(name, std::move(key)); };
    add("data", string_key(&RunConfig::data, "data"));
    add("data_seed", number_key(&RunConfig::data_seed, "data_seed"));
    add("blobs_k", number_key(&RunConfig::blobs_k, "blobs_k"));
    add("blobs_per_cluster", number_key(&RunConfig::blobs_per_cluster, "blobs_per_cluster"));
    add("blobs_dims", number_key(&RunConfig::blobs_dims, "blobs_dims"));
    add("blobs_separation", number_key(&RunConfig::blobs_separation, "blobs_separation"));
    add("mobile_users_per_group", number_key(&RunConfig::mobile_users_per_group, "mobile_users_per_group"));
    add("mobile_seq_len", number_key(&RunConfig::mobile_seq_len, "mobile_seq_len"));
    add("mobile_noise", number_key(&RunConfig::mobile_noise, "mobile_noise"));
    add("k", number_key(&RunConfig::k, "k"));
    add("n_zc", number_key(&RunConfig::n_zc, "n_zc"));
    add("n_zr", number_key(&RunConfig::n_zr, "n_zr"));
    add("sigma", number_key(&RunConfig::sigma, "sigma"));
    add("beta_cor", number_key(&RunConfig::beta_cor, "beta_cor"));
    add("beta_dec", number_key(&RunConfig::beta_dec, "beta_dec"));
    add("mu", number_key(&RunConfig::mu, "mu"));
    add("lambda", number_key(&RunConfig::lambda, "lambda"));
    add("alpha", number_key(&RunConfig::alpha, "alpha"));
    add("lr", number_key(&RunConfig::lr, "lr"));
    add("rim_lr", number_key(&RunConfig::rim_lr, "rim_lr"));
    add("pretrain_final_lr_scale", number_key(&RunConfig::pretrain_final_lr_scale, "pretrain_final_lr_scale"));
    add("e_pre", number_key(&RunConfig::e_pre, "e_pre"));
    add("e_rim", number_key(&RunConfig::e_rim, "e_rim"));
    add("n_rim", number_key(&RunConfig::n_rim, "n_rim"));
    add("e_dec", number_key(&RunConfig::e_dec, "e_dec"));
    add("batch_size", number_key(&RunConfig::batch_size, "batch_size"));
    add("kmeans_restarts", number_key(&RunConfig::kmeans_restarts, "kmeans_restarts"));
    add("seeds", list_key(&RunConfig::seeds, "seeds"));
    add("encoder_widths", list_key(&RunConfig::encoder_widths, "encoder_widths"));
    add("decoder_widths", list_key(&RunConfig::decoder_widths, "decoder_widths"));
    add("decorrelator_widths", list_key(&RunConfig::decorrelator_widths, "decorrelator_widths"));
    add("rim_widths", list_key(&RunConfig::rim_widths, "rim_widths"));
    add("use_dan", bool_key(&RunConfig::use_dan, "use_dan"));
    add("use_rim", bool_key(&RunConfig::use_rim, "use_rim"));
    add("use_dec", bool_key(&RunConfig::use_dec, "use_dec"));
    add("deterministic", bool_key(&RunConfig::deterministic, "deterministic"));
    add("history_every", number_key(&RunConfig::history_every, "history_every"));
    add("out_dir", string_key(&RunConfig::out_dir, "out_dir"));
    return k;
  }();
  return keys;
}

inline const ConfigKey* find_key(const std::string& name) {
  for (const auto& [k, v] : config_keys())
    if (k == name) return &v;
  return nullptr;
}

}  // namespace detail

/// Set one key from its textual value; errors name the key.
inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  const auto* k = detail::find_key(key);
  if (!k) throw ConfigError("unknown key '" + key + "'");
  k->set(c, detail::trim_ws(value));
}

inline std::string get_config_value(const RunConfig& c, const std::string& key) {
  const auto* k = detail::find_key(key);
  if (!k) throw ConfigError("unknown key '" + key + "'");
  return k->get(c);
}

inline void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) { throw ConfigError("key '" + key + "': " + why); };
  if (k < 2) fail("k", "must be >= 2");
  if (n_zc < 1) fail("n_zc", "must be >= 1");
  if (n_zr < 1) fail("n_zr", "must be >= 1");
  if (!(sigma > 0)) fail("sigma", "must be > 0");
  if (!(beta_cor >= 0)) fail("beta_cor", "must be >= 0");
  if (!(beta_dec >= 0)) fail("beta_dec", "must be >= 0");
  if (!(mu >= 0)) fail("mu", "must be >= 0");
  if (!(lambda >= 0)) fail("lambda", "must be >= 0");
  if (!(alpha > 0)) fail("alpha", "must be > 0");
  if (!(lr > 0)) fail("lr", "must be > 0");
  if (!(rim_lr > 0)) fail("rim_lr", "must be > 0");
  if (!(pretrain_final_lr_scale > 0 && pretrain_final_lr_scale <= 1))
    fail("pretrain_final_lr_scale", "must be in (0, 1]");
  if (e_pre < 1) fail("e_pre", "must be >= 1");
  if (n_rim < 1) fail("n_rim", "must be >= 1");
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (kmeans_restarts < 1) fail("kmeans_restarts", "must be >= 1");
  if (seeds.empty()) fail("seeds", "needs at least one seed");
  if (history_every < 1) fail("history_every", "must be >= 1");
  if (blobs_k < 2) fail("blobs_k", "must be >= 2");
  if (blobs_per_cluster < 1) fail("blobs_per_cluster", "must be >= 1");
  if (blobs_dims < 1) fail("blobs_dims", "must be >= 1");
  if (!(blobs_separation > 0)) fail("blobs_separation", "must be > 0");
  if (mobile_users_per_group < 1) fail("mobile_users_per_group", "must be >= 1");
  if (mobile_seq_len < 1) fail("mobile_seq_len", "must be >= 1");
  if (!(mobile_noise >= 0)) fail("mobile_noise", "must be >= 0");
  for (const auto& [name, ws] : {std::pair{"encoder_widths", &encoder_widths}, std::pair{"decoder_widths", &decoder_widths},
                                 std::pair{"decorrelator_widths", &decorrelator_widths},
                                 std::pair{"rim_widths", &rim_widths}})
    for (std::size_t w : *ws)
      if (w < 1) fail(name, "widths must be >= 1");
}

inline std::string RunConfig::to_text() const {
  std::string s;
  for (const auto& [name, key] : detail::config_keys()) s += name + " = " + key.get(*this) + "\n";
  return s;
}

/// Parse config text on top of `base`. `source` prefixes error messages.
inline RunConfig parse_config(const std::string& text, RunConfig base = {}, const std::string& source = "config") {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim_ws(line);
    if (line.empty()) continue;
    const std::string where = source + " line " + std::to_string(lineno);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
    const std::string key = detail::trim_ws(line.substr(0, eq));
    try {
      set_config_value(base, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return base;
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), std::move(base), path);
}

/// The dataset named by `data`, with labels when the source provides them.
inline Dataset load_dataset(const RunConfig& c) {
  if (c.data == "blobs") {
    Rng rng(derive_seed(c.data_seed, {0}));
    return gen_blobs(c.blobs_k, c.blobs_per_cluster, c.blobs_dims, c.blobs_separation, rng);
  }
  if (c.data == "mobile") {
    MobileLikeSpec spec;
    spec.users_per_group = c.mobile_users_per_group;
    spec.seq_len = c.mobile_seq_len;
    spec.noise = c.mobile_noise;
    spec.seed = c.data_seed;
    return gen_mobile_like(spec);
  }
  return load_csv(c.data);
}

}  // namespace dance
