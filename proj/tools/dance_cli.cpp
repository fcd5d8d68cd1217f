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

// Command-line front end. Settings are layered: built-in defaults, then
// the --config file, then --set overrides, then the dedicated global flags.
//
// Exit status: 0 when every requested run completed, 1 when at least one
// run failed in a training phase, 2 for configuration or input errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dance/dance.hpp"

namespace fs = std::filesystem;
using dance::json;

namespace {

struct Globals {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool deterministic = false;
};

dance::RunConfig resolve(const Globals& g, dance::RunConfig base = {}) {
  dance::RunConfig c = g.config_path.empty() ? std::move(base) : dance::load_config(g.config_path, std::move(base));
  for (const auto& s : g.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw dance::ConfigError("--set '" + s + "': expected key=value");
    dance::set_config_value(c, dance::detail::trim_ws(s.substr(0, eq)), s.substr(eq + 1));
  }
  if (g.seed) c.seeds = {*g.seed};
  if (!g.out_dir.empty()) c.out_dir = g.out_dir;
  if (g.deterministic) c.deterministic = true;
  c.validate();
  return c;
}

void write_json(const fs::path& p, const json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p);
  f << j.dump(2) << '\n';
  if (!f) throw dance::ConfigError("cannot write '" + p.string() + "'");
}

void write_text(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  f << s;
  if (!f) throw dance::ConfigError("cannot write '" + p.string() + "'");
}

// Checkpoint-based commands start from the config stored with the model so
// the dataset defaults to the one it was trained on.
struct Loaded {
  dance::PipelineModel model;
  dance::RunConfig config;
};

Loaded load_checkpoint(const Globals& g, const std::string& path) {
  Loaded l{dance::model_from_checkpoint(dance::load_tensors(path)), {}};
  l.config = resolve(g, dance::parse_config(l.model.config_text, {}, path));
  return l;
}

int cmd_generate(const Globals& g, const std::string& output) {
  const dance::RunConfig c = resolve(g);
  const dance::Dataset ds = dance::load_dataset(c);
  const fs::path out = output.empty() ? fs::path(c.out_dir) / "data.csv" : fs::path(output);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  dance::save_csv(ds, out.string());
  std::cout << "wrote " << ds.n() << " rows x " << ds.features() << " features to " << out.string() << '\n';
  return 0;
}

int cmd_train(const Globals& g) {
  const dance::RunConfig c = resolve(g);
  const dance::Prepared data = dance::prepare(c);
  const dance::Components comp{c.use_dan, c.use_rim, c.use_dec};
  json runs = json::array();
  bool all_ok = true;
  for (std::uint64_t seed : c.seeds) {
    const dance::RunOutcome o = dance::run_pipeline(c, data, seed, comp);
    dance::write_run_artifacts(o, data.raw, (fs::path(c.out_dir) / ("seed_" + std::to_string(seed))).string());
    json r = {{"seed", seed}, {"ok", o.ok}};
    r["acc"] = o.acc ? json(*o.acc) : json(nullptr);
    r["nmi"] = o.nmi ? json(*o.nmi) : json(nullptr);
    r["failure"] = o.report["failure"];
    runs.push_back(r);
    all_ok = all_ok && o.ok;
    std::cout << "seed " << seed << ": ";
    if (o.ok && o.acc)
      std::cout << "acc " << *o.acc << " nmi " << *o.nmi << '\n';
    else if (o.ok)
      std::cout << "done (no labels)\n";
    else
      std::cout << "FAILED in " << o.failure->phase << ": " << o.failure->message << '\n';
  }
  write_json(fs::path(c.out_dir) / "summary.json", {{"schema_version", dance::kReportSchemaVersion},
                                                    {"components", comp.name()},
                                                    {"config", dance::config_json(c)},
                                                    {"runs", runs}});
  return all_ok ? 0 : 1;
}

int cmd_evaluate(const Globals& g, const std::string& checkpoint) {
  const Loaded l = load_checkpoint(g, checkpoint);
  const dance::Dataset ds = dance::load_dataset(l.config);
  const dance::Embedding e = dance::embed(l.model, ds.x);
  json out = {{"schema_version", dance::kReportSchemaVersion},
              {"checkpoint", checkpoint},
              {"dataset", {{"provenance", ds.provenance}, {"n", ds.n()}, {"features", ds.features()}}},
              {"labels", e.labels}};
  if (ds.labels) {
    const auto m = dance::metric_report(*ds.labels, e.labels, 0, "evaluate");
    out["metrics"] = m.report;
    std::cout << "acc " << m.acc << " nmi " << m.nmi << '\n';
  } else {
    out["metrics"] = nullptr;
    std::cout << "dataset has no labels; wrote assignments only\n";
  }
  write_json(fs::path(l.config.out_dir) / "evaluation.json", out);
  return 0;
}

int cmd_ablate(const Globals& g) {
  const dance::RunConfig c = resolve(g);
  const dance::Prepared data = dance::prepare(c);
  const dance::AblationResult a = dance::run_ablation(c, data);
  const std::string csv = dance::ablation_csv(a);
  write_json(fs::path(c.out_dir) / "ablation.json", a.report);
  write_text(fs::path(c.out_dir) / "ablation.csv", csv);
  std::cout << csv;
  bool all_ok = true;
  for (const auto& row : a.rows) all_ok = all_ok && row.completed == row.cells.size();
  return all_ok ? 0 : 1;
}

int cmd_export(const Globals& g, const std::string& checkpoint, const std::string& output) {
  const Loaded l = load_checkpoint(g, checkpoint);
  const dance::Dataset ds = dance::load_dataset(l.config);
  const fs::path out = output.empty() ? fs::path(l.config.out_dir) / "embeddings.csv" : fs::path(output);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  dance::export_embeddings(l.model, ds, out.string());
  std::cout << "wrote " << ds.n() << " embeddings to " << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep clustering with decorrelated latent spaces"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--set", g.sets, "override one config key (key=value); repeatable");
  app.add_option("--seed", g.seed, "run this single seed instead of the configured list");
  app.add_option("--out-dir", g.out_dir, "directory for reports and artifacts");
  app.add_flag("--deterministic", g.deterministic, "require bitwise reproducible runs");

  std::string output, checkpoint;
  auto* gen = app.add_subcommand("generate", "write the configured dataset as CSV");
  gen->add_option("-o,--output", output, "CSV path (default <out-dir>/data.csv)");
  auto* train = app.add_subcommand("train", "run the pipeline for every configured seed");
  auto* eval = app.add_subcommand("evaluate", "assign a dataset with a trained checkpoint and score it");
  eval->add_option("checkpoint", checkpoint, "model.dnce file")->required()->check(CLI::ExistingFile);
  auto* abl = app.add_subcommand("ablate", "run all eight component combinations over the seeds");
  auto* exp = app.add_subcommand("export", "write latent embeddings and labels from a checkpoint");
  exp->add_option("checkpoint", checkpoint, "model.dnce file")->required()->check(CLI::ExistingFile);
  exp->add_option("-o,--output", output, "CSV path (default <out-dir>/embeddings.csv)");
  for (auto* sub : {gen, train, eval, abl, exp}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed()) return cmd_generate(g, output);
    if (train->parsed()) return cmd_train(g);
    if (eval->parsed()) return cmd_evaluate(g, checkpoint);
    if (abl->parsed()) return cmd_ablate(g);
    return cmd_export(g, checkpoint, output);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
