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

// End-to-end runs: pre-training, cluster initialization, refinement, and
// the component ablation, plus the artifacts they leave behind.
//
// Every phase draws from streams keyed by (run seed, phase) only. A phase
// therefore produces the same result whichever combination of components
// it is part of, which lets the ablation share phases between cells while
// each cell still equals the corresponding single run.

#pragma once

#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dance/config.hpp"
#include "dance/container.hpp"
#include "dance/dan.hpp"
#include "dance/data.hpp"
#include "dance/dec.hpp"
#include "dance/kmeans.hpp"
#include "dance/metrics.hpp"
#include "dance/rim.hpp"

namespace dance {

using json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

struct Components {
  bool dan = true;
  bool rim = true;
  bool dec = true;

  std::string name() const {
    std::string s;
    for (auto [on, n] : {std::pair{dan, "DAN"}, std::pair{rim, "RIM"}, std::pair{dec, "DEC"}})
      if (on) s += (s.empty() ? "" : "+") + std::string(n);
    return s.empty() ? "none" : s;
  }
};

/// The power set of {DAN, RIM, DEC}, from no components to all three.
inline std::vector<Components> all_combinations() {
  std::vector<Components> out;
  for (int m = 0; m < 8; ++m) out.push_back({(m & 4) != 0, (m & 2) != 0, (m & 1) != 0});
  return out;
}

struct PipelineModel {
  DanModel<float> dan;
  ClusterModel<float> cluster;
  Standardizer standardizer;
  std::size_t cluster_dims = 0;
  std::string config_text;
};

struct PhaseFailure {
  std::string phase;
  std::size_t iteration = 0;
  std::string message;
};

struct Prepared {
  Dataset raw;
  Tensor x;  // standardized
  Standardizer standardizer;
};

inline Prepared prepare(const RunConfig& c) {
  c.validate();
  Prepared p;
  p.raw = load_dataset(c);
  p.raw.validate();
  if (p.raw.n() < c.k) throw ConfigError("dataset has fewer rows than k = " + std::to_string(c.k));
  p.standardizer = fit_standardizer(p.raw.x);
  // Rounded to float so the checkpoint stores exactly the transform used here.
  for (auto* v : {&p.standardizer.mean, &p.standardizer.stddev})
    for (double& e : *v) e = static_cast<float>(e);
  p.x = p.standardizer.apply(p.raw.x);
  return p;
}

// ---------------------------------------------------------------------------
// Phases
// ---------------------------------------------------------------------------

struct PretrainStage {
  DanModel<float> model;
  LossHistory history;
  std::optional<double> decorrelator_accuracy;
};

struct InitStage {
  ClusterModel<float> cluster;
  std::vector<int> labels;
  json info;
};

struct RefineStage {
  DanModel<float> model;
  ClusterModel<float> cluster;
  LossHistory history;
  std::optional<double> decorrelator_accuracy;
};

inline std::size_t cluster_dims(const RunConfig& c, bool use_dan) { return use_dan ? c.n_zc : c.n_zc + c.n_zr; }

/// Without DAN the same networks train as a plain autoencoder.
inline PretrainStage stage_pretrain(const RunConfig& c, const Tensor& x, std::uint64_t seed, bool use_dan) {
  Rng init(derive_seed(seed, {stream::init}));
  DanArchitecture arch{x.cols(), c.n_zc, c.n_zr, c.encoder_widths, c.decoder_widths, c.decorrelator_widths};
  PretrainStage s{make_dan<float>(arch, c.sigma, use_dan ? c.beta_cor : 0.0, init), {}, std::nullopt};
  DanTrainOptions opt{c.e_pre, c.batch_size, AdamOptions{c.lr}, use_dan, "dan-pretrain", c.pretrain_final_lr_scale};
  s.history = pretrain(s.model, x, opt, derive_seed(seed, {stream::pretrain}));
  if (use_dan) {
    Rng probe(derive_seed(seed, {stream::probe, 0}));
    s.decorrelator_accuracy = decorrelator_accuracy(s.model, x, probe);
  }
  return s;
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

/// Centroids in the clustering space from RIM or k-means.
inline json matrix_json(const Tensor& m) {
  json out = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

inline InitStage stage_init(const RunConfig& c, const Tensor& z, std::uint64_t seed, bool use_rim) {
  InitStage s;
  s.cluster.alpha = c.alpha;
  if (use_rim) {
    RimOptions opt{c.k, c.mu, c.lambda, c.e_rim, c.n_rim, c.rim_widths, AdamOptions{c.rim_lr}};
    auto r = rim_init(z, opt, derive_seed(seed, {stream::rim}));
    s.cluster.centroids = r.centroids;
    s.labels = r.assignments;
    json scores = json::array();
    for (double v : r.restart_scores) scores.push_back(finite_or_null(v));
    s.info = {{"method", "rim"},
              {"restart_scores", scores},
              {"chosen_restart", r.chosen_restart},
              {"best_cond_ent", r.best_cond_ent},
              {"centroids", matrix_json(r.centroids)}};
  } else {
    Rng rng(derive_seed(seed, {stream::kmeans}));
    auto r = kmeans_fit(z, c.k, {c.kmeans_restarts, 300, 1e-4}, rng);
    s.cluster.centroids = r.model.centroids;
    s.labels = r.labels;
    s.info = {{"method", "kmeans"},
              {"restart_inertia", r.restart_inertia},
              {"chosen_restart", r.chosen_restart},
              {"inertia", r.model.inertia},
              {"centroids", matrix_json(r.model.centroids)}};
  }
  if (s.cluster.min_pairwise_distance() < kCentroidCollapseDistance)
    throw TrainingError(use_rim ? "rim-init" : "kmeans-init", 0, "initial centroids coincide");
  return s;
}

inline RefineStage stage_refine(const RunConfig& c, const PretrainStage& pre, const InitStage& init, const Tensor& x,
                                std::uint64_t seed, bool use_dan) {
  RefineStage s{pre.model, init.cluster, {}, std::nullopt};
  DecOptions opt;
  opt.beta_dec = c.beta_dec;
  opt.iterations = c.e_dec;
  opt.batch_size = c.batch_size;
  opt.adam = AdamOptions{c.lr};
  opt.adversarial = use_dan;
  opt.cluster_dims = cluster_dims(c, use_dan);
  if (c.e_dec > 0) s.history = refine(s.model, s.cluster, x, opt, derive_seed(seed, {stream::refine}));
  if (use_dan) {
    Rng probe(derive_seed(seed, {stream::probe, 1}));
    s.decorrelator_accuracy = decorrelator_accuracy(s.model, x, probe);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json history_json(const LossHistory& h, std::size_t every, bool with_dec) {
  json out = json::array();
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i % every != 0 && i + 1 != h.size()) continue;
    json r{{"iteration", h[i].iteration}, {"rec", h[i].rec}, {"cor_q", h[i].cor_q}, {"cor_d", h[i].cor_d}};
    if (with_dec) r["dec"] = h[i].dec;
    out.push_back(std::move(r));
  }
  return out;
}

/// Every setting that can change a result. out_dir is left out so that
/// identical runs written to different places produce identical reports.
inline json config_json(const RunConfig& c) {
  json out = json::object();
  for (const auto& [name, key] : detail::config_keys())
    if (name != "out_dir") out[name] = key.get(c);
  return out;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

struct MetricSummary {
  double acc = 0;
  double nmi = 0;
  json report;
};

inline MetricSummary metric_report(const std::vector<int>& truth, const std::vector<int>& pred, std::uint64_t seed,
                                   const std::string& phase) {
  const Contingency ct = contingency(truth, pred);
  const AccuracyResult a = accuracy_detail(ct);
  MetricSummary m{a.acc, nmi(truth, pred), {}};
  json perm = json::array();
  for (std::size_t p = 0; p < a.pred_to_true.size(); ++p)
    perm.push_back({{"pred", ct.pred_labels[p]},
                    {"true", a.pred_to_true[p] < 0 ? json(nullptr) : json(ct.true_labels[a.pred_to_true[p]])}});
  m.report = {{"acc", m.acc},        {"nmi", m.nmi}, {"contingency", ct.counts}, {"true_labels", ct.true_labels},
              {"pred_labels", ct.pred_labels}, {"matched_permutation", perm}, {"seed", seed}, {"phase", phase}};
  return m;
}

struct RunOutcome {
  bool ok = false;
  Components components;
  std::uint64_t seed = 0;
  std::vector<int> labels;
  std::optional<double> acc;
  std::optional<double> nmi;
  std::optional<PhaseFailure> failure;
  std::optional<PipelineModel> model;
  json report;
};

namespace detail {

/// Phase results reused across ablation cells, indexed by flag.
struct SharedPhases {
  std::optional<PretrainStage> pre[2];
  std::optional<PhaseFailure> pre_fail[2];
  std::optional<InitStage> init[2][2];
  std::optional<PhaseFailure> init_fail[2][2];
};

inline PhaseFailure failure_from(const std::exception& e, const std::string& phase) {
  if (const auto* t = dynamic_cast<const TrainingError*>(&e)) return {t->phase(), t->iteration(), t->what()};
  return {phase, 0, e.what()};
}

inline json failure_json(const PhaseFailure& f) {
  return {{"phase", f.phase}, {"iteration", f.iteration}, {"message", f.message}};
}

inline RunOutcome assemble(const RunConfig& c, const Prepared& data, std::uint64_t seed, Components comp,
                           SharedPhases& sh) {
  RunOutcome out;
  out.components = comp;
  out.seed = seed;
  json& r = out.report;
  r["schema_version"] = kReportSchemaVersion;
  r["generated_at"] = utc_timestamp();
  r["seed"] = seed;
  r["components"] = {{"dan", comp.dan}, {"rim", comp.rim}, {"dec", comp.dec}};
  r["dataset"] = {{"provenance", data.raw.provenance}, {"n", data.raw.n()}, {"features", data.raw.features()}};
  r["config"] = config_json(c);
  json phases = json::object();
  auto fail = [&](const PhaseFailure& f) {
    out.failure = f;
    r["phases"] = phases;
    r["ok"] = false;
    r["failure"] = failure_json(f);
    return out;
  };

  const int d = comp.dan, i = comp.rim;
  if (!sh.pre[d] && !sh.pre_fail[d]) {
    try {
      sh.pre[d] = stage_pretrain(c, data.x, seed, comp.dan);
    } catch (const std::exception& e) {
      sh.pre_fail[d] = failure_from(e, "dan-pretrain");
    }
  }
  if (sh.pre_fail[d]) return fail(*sh.pre_fail[d]);
  const PretrainStage& pre = *sh.pre[d];
  phases["pretrain"] = {{"adversarial", comp.dan},
                        {"iterations", pre.history.size()},
                        {"history", history_json(pre.history, c.history_every, false)}};
  if (pre.decorrelator_accuracy) phases["pretrain"]["decorrelator_accuracy"] = *pre.decorrelator_accuracy;

  const std::size_t dims = cluster_dims(c, comp.dan);
  if (!sh.init[d][i] && !sh.init_fail[d][i]) {
    try {
      sh.init[d][i] = stage_init(c, cluster_space(pre.model, data.x, dims), seed, comp.rim);
    } catch (const std::exception& e) {
      sh.init_fail[d][i] = failure_from(e, comp.rim ? "rim-init" : "kmeans-init");
    }
  }
  if (sh.init_fail[d][i]) return fail(*sh.init_fail[d][i]);
  const InitStage& init = *sh.init[d][i];
  phases["init"] = init.info;

  PipelineModel model{pre.model, init.cluster, data.standardizer, dims, c.to_text()};
  out.labels = init.labels;
  if (comp.dec) {
    try {
      RefineStage ref = stage_refine(c, pre, init, data.x, seed, comp.dan);
      phases["refine"] = {{"iterations", ref.history.size()},
                          {"history", history_json(ref.history, c.history_every, true)}};
      if (ref.decorrelator_accuracy) phases["refine"]["decorrelator_accuracy"] = *ref.decorrelator_accuracy;
      model.dan = std::move(ref.model);
      model.cluster = std::move(ref.cluster);
      out.labels = final_assign(cluster_space(model.dan, data.x, dims), model.cluster.centroids);
    } catch (const std::exception& e) {
      return fail(failure_from(e, "dec-refine"));
    }
  }
  r["phases"] = phases;
  r["labels"] = out.labels;
  if (data.raw.labels) {
    const auto m = metric_report(*data.raw.labels, out.labels, seed, comp.dec ? "dec-refine" : r["phases"]["init"]["method"].get<std::string>() + "-init");
    out.acc = m.acc;
    out.nmi = m.nmi;
    r["metrics"] = m.report;
  } else {
    r["metrics"] = nullptr;
  }
  r["ok"] = true;
  r["failure"] = nullptr;
  out.ok = true;
  out.model = std::move(model);
  return out;
}

}  // namespace detail

/// One run of the enabled phases for one seed. Phase errors are reported
/// in the outcome (ok == false) rather than thrown; configuration and data
/// errors propagate.
inline RunOutcome run_pipeline(const RunConfig& c, const Prepared& data, std::uint64_t seed, Components comp) {
  detail::SharedPhases sh;
  return detail::assemble(c, data, seed, comp, sh);
}

inline RunOutcome run_pipeline(const RunConfig& c, std::uint64_t seed) {
  return run_pipeline(c, prepare(c), seed, {c.use_dan, c.use_rim, c.use_dec});
}

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

struct AblationCell {
  std::uint64_t seed = 0;
  std::optional<double> acc;
  std::optional<double> nmi;
  std::optional<PhaseFailure> failure;
  std::optional<double> decorrelator_accuracy;
};

struct AblationRow {
  Components components;
  std::vector<AblationCell> cells;  // one per seed, in seed order
  std::size_t completed = 0;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double std = std::numeric_limits<double>::quiet_NaN();
  double min = std::numeric_limits<double>::quiet_NaN();
  double max = std::numeric_limits<double>::quiet_NaN();
};

inline void summarize(AblationRow& row) {
  std::vector<double> v;
  for (const auto& c : row.cells)
    if (c.acc) v.push_back(*c.acc);
  row.completed = v.size();
  if (v.empty()) return;
  double s = 0;
  for (double a : v) s += a;
  row.mean = s / static_cast<double>(v.size());
  double ss = 0;
  for (double a : v) ss += (a - row.mean) * (a - row.mean);
  row.std = std::sqrt(ss / static_cast<double>(v.size()));
  row.min = *std::min_element(v.begin(), v.end());
  row.max = *std::max_element(v.begin(), v.end());
}

struct AblationResult {
  std::vector<AblationRow> rows;  // all_combinations() order
  json report;
};

/// All eight component combinations for every seed in the config. Each
/// cell equals run_pipeline(config, seed, combination).
inline AblationResult run_ablation(const RunConfig& c, const Prepared& data) {
  if (c.seeds.size() < 2) throw ConfigError("key 'seeds': ablation needs at least 2 seeds");
  if (!data.raw.labels) throw ConfigError("ablation needs a labelled dataset");
  AblationResult res;
  for (const auto& comp : all_combinations()) res.rows.push_back({comp, {}});
  for (std::uint64_t seed : c.seeds) {
    detail::SharedPhases sh;
    for (auto& row : res.rows) {
      RunOutcome o = detail::assemble(c, data, seed, row.components, sh);
      AblationCell cell{seed, o.acc, o.nmi, o.failure, std::nullopt};
      if (o.ok && row.components.dan) {
        const json& ph = o.report["phases"];
        const json& last = row.components.dec ? ph["refine"] : ph["pretrain"];
        if (last.contains("decorrelator_accuracy")) cell.decorrelator_accuracy = last["decorrelator_accuracy"].get<double>();
      }
      row.cells.push_back(std::move(cell));
    }
  }
  json rows = json::array();
  for (auto& row : res.rows) {
    summarize(row);
    json accs = json::array(), failures = json::array();
    for (const auto& cell : row.cells) {
      accs.push_back(cell.acc ? json(*cell.acc) : json(nullptr));
      if (cell.failure) {
        json f = detail::failure_json(*cell.failure);
        f["seed"] = cell.seed;
        failures.push_back(std::move(f));
      }
    }
    rows.push_back({{"dan", row.components.dan},
                    {"rim", row.components.rim},
                    {"dec", row.components.dec},
                    {"name", row.components.name()},
                    {"acc", accs},
                    {"completed", row.completed},
                    {"mean", finite_or_null(row.mean)},
                    {"std", finite_or_null(row.std)},
                    {"min", finite_or_null(row.min)},
                    {"max", finite_or_null(row.max)},
                    {"failures", failures}});
  }
  res.report = {{"schema_version", kReportSchemaVersion},
                {"generated_at", utc_timestamp()},
                {"seeds", c.seeds},
                {"dataset", {{"provenance", data.raw.provenance}, {"n", data.raw.n()}, {"features", data.raw.features()}}},
                {"config", config_json(c)},
                {"rows", rows}};
  return res;
}

inline std::string ablation_csv(const AblationResult& r) {
  std::ostringstream s;
  s.precision(6);
  s << std::fixed;
  s << "DAN,RIM,DEC,avg,std,min,max\n";
  for (const auto& row : r.rows) {
    s << row.components.dan << ',' << row.components.rim << ',' << row.components.dec;
    for (double v : {row.mean, row.std, row.min, row.max}) {
      s << ',';
      if (std::isfinite(v)) s << v;
    }
    s << '\n';
  }
  return s.str();
}

// ---------------------------------------------------------------------------
// Checkpoints and exports
// ---------------------------------------------------------------------------

namespace detail {

inline void put_net(std::vector<NamedTensor>& out, const std::string& prefix, const NetParams<float>& net) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const std::string p = prefix + "/" + std::to_string(i) + "/";
    out.push_back({p + "W", net.layers[i].weight});
    out.push_back({p + "b", net.layers[i].bias});
    out.push_back({p + "activation", Tensor::scalar(static_cast<float>(net.layers[i].activation))});
  }
}

inline bool has_tensor(const std::vector<NamedTensor>& ts, const std::string& name) {
  for (const auto& t : ts)
    if (t.name == name) return true;
  return false;
}

inline NetParams<float> get_net(const std::vector<NamedTensor>& ts, const std::string& prefix) {
  NetParams<float> net;
  for (std::size_t i = 0; has_tensor(ts, prefix + "/" + std::to_string(i) + "/W"); ++i) {
    const std::string p = prefix + "/" + std::to_string(i) + "/";
    const float a = find_tensor(ts, p + "activation")[0];
    if (a < 0 || a > static_cast<float>(Activation::softmax) || a != std::floor(a))
      throw ContainerError(ContainerError::Kind::malformed, "bad activation code in '" + p + "activation'");
    net.layers.push_back({find_tensor(ts, p + "W"), find_tensor(ts, p + "b"), static_cast<Activation>(static_cast<int>(a))});
  }
  if (net.layers.empty()) throw ContainerError(ContainerError::Kind::malformed, "checkpoint has no '" + prefix + "' net");
  net.validate();
  return net;
}

inline Tensor doubles_tensor(const std::vector<double>& v) {
  std::vector<float> f(v.begin(), v.end());
  const std::size_t n = f.size();  // read before the move; argument order is unspecified
  return Tensor({n}, std::move(f));
}

}  // namespace detail

/// Checkpoint layout: nets as "<net>/<layer>/{W,b,activation}", centroids
/// and alpha under "cluster/", the input standardization under
/// "standardizer/", latent split under "meta/", and the run config as text.
inline std::vector<NamedTensor> checkpoint_tensors(const PipelineModel& m) {
  std::vector<NamedTensor> ts;
  detail::put_net(ts, "encoder", m.dan.encoder);
  detail::put_net(ts, "decoder", m.dan.decoder);
  detail::put_net(ts, "decorrelator", m.dan.decorrelator);
  ts.push_back({"cluster/centroids", m.cluster.centroids});
  ts.push_back({"cluster/alpha", Tensor::scalar(static_cast<float>(m.cluster.alpha))});
  ts.push_back({"standardizer/mean", detail::doubles_tensor(m.standardizer.mean)});
  ts.push_back({"standardizer/std", detail::doubles_tensor(m.standardizer.stddev)});
  ts.push_back({"meta/latent", Tensor::vector({static_cast<float>(m.dan.n_zc), static_cast<float>(m.dan.n_zr)})});
  ts.push_back({"meta/cluster_dims", Tensor::scalar(static_cast<float>(m.cluster_dims))});
  ts.push_back({"meta/prior", Tensor::vector({static_cast<float>(m.dan.prior_sigma), static_cast<float>(m.dan.beta_cor)})});
  ts.push_back({"config", text_to_tensor(m.config_text)});
  return ts;
}

inline PipelineModel model_from_checkpoint(const std::vector<NamedTensor>& ts) {
  PipelineModel m;
  m.dan.encoder = detail::get_net(ts, "encoder");
  m.dan.decoder = detail::get_net(ts, "decoder");
  m.dan.decorrelator = detail::get_net(ts, "decorrelator");
  const Tensor& latent = find_tensor(ts, "meta/latent");
  m.dan.n_zc = static_cast<std::size_t>(latent[0]);
  m.dan.n_zr = static_cast<std::size_t>(latent[1]);
  const Tensor& prior = find_tensor(ts, "meta/prior");
  m.dan.prior_sigma = prior[0];
  m.dan.beta_cor = prior[1];
  m.dan.validate();
  m.cluster.centroids = find_tensor(ts, "cluster/centroids");
  m.cluster.alpha = find_tensor(ts, "cluster/alpha")[0];
  m.cluster_dims = static_cast<std::size_t>(find_tensor(ts, "meta/cluster_dims")[0]);
  if (m.cluster.dims() != m.cluster_dims || m.cluster_dims > m.dan.latent_width())
    throw ContainerError(ContainerError::Kind::malformed, "checkpoint centroid width does not match cluster_dims");
  for (float v : find_tensor(ts, "standardizer/mean").values()) m.standardizer.mean.push_back(v);
  for (float v : find_tensor(ts, "standardizer/std").values()) m.standardizer.stddev.push_back(v);
  if (m.standardizer.mean.size() != m.dan.features())
    throw ContainerError(ContainerError::Kind::malformed, "checkpoint standardizer width does not match encoder");
  m.config_text = tensor_to_text(find_tensor(ts, "config"));
  return m;
}

struct Embedding {
  Tensor z;  // [n x (n_zc + n_zr)]
  std::vector<int> labels;
};

/// Standardize with the stored transform, encode, and assign to the
/// nearest centroid.
inline Embedding embed(const PipelineModel& m, const Tensor& raw_x) {
  if (raw_x.cols() != m.dan.features())
    throw ConfigError("dataset has " + std::to_string(raw_x.cols()) + " features but the checkpoint expects " +
                      std::to_string(m.dan.features()));
  const Tensor x = m.standardizer.apply(raw_x);
  Embedding e{predict(m.dan.encoder, x), {}};
  const Tensor zc = m.cluster_dims == e.z.cols() ? e.z : e.z.slice_cols(0, m.cluster_dims);
  e.labels = final_assign(zc, m.cluster.centroids);
  return e;
}

/// Columns zc_1..zc_n, zr_1..zr_n, pred_label and, if known, true_label.
inline void export_embeddings(const PipelineModel& m, const Dataset& ds, const std::string& path) {
  const Embedding e = embed(m, ds.x);
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f.precision(9);
  for (std::size_t j = 0; j < m.dan.n_zc; ++j) f << "zc_" << j + 1 << ',';
  for (std::size_t j = 0; j < m.dan.n_zr; ++j) f << "zr_" << j + 1 << ',';
  f << "pred_label" << (ds.labels ? ",true_label" : "") << '\n';
  for (std::size_t i = 0; i < e.z.rows(); ++i) {
    for (std::size_t j = 0; j < e.z.cols(); ++j) f << e.z(i, j) << ',';
    f << e.labels[i];
    if (ds.labels) f << ',' << (*ds.labels)[i];
    f << '\n';
  }
  if (!f) throw ConfigError("write failed for '" + path + "'");
}

/// report.json, and for a successful run model.dnce, embeddings.csv and
/// labels.csv, all under `dir`.
inline void write_run_artifacts(const RunOutcome& o, const Dataset& raw, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path d(dir);
  std::ofstream(d / "report.json") << o.report.dump(2) << '\n';
  if (!o.model) return;
  save_tensors((d / "model.dnce").string(), checkpoint_tensors(*o.model));
  export_embeddings(*o.model, raw, (d / "embeddings.csv").string());
  std::ofstream lf(d / "labels.csv");
  lf << "index,label\n";
  for (std::size_t i = 0; i < o.labels.size(); ++i) lf << i << ',' << o.labels[i] << '\n';
}

}  // namespace dance
