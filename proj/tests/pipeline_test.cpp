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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dance/pipeline.hpp"

namespace dance {
namespace {

namespace fs = std::filesystem;

RunConfig tiny_config() {
  return parse_config(R"(
    data = blobs
    blobs_k = 3
    blobs_per_cluster = 60
    blobs_dims = 5
    k = 3
    e_pre = 200
    e_rim = 200
    n_rim = 3
    e_dec = 60
    batch_size = 64
    encoder_widths = 16
    decoder_widths = 16
    decorrelator_widths = 16
    rim_widths = 16
    seeds = 1, 2
    history_every = 20
  )");
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

json without_timestamp(json j) {
  j.erase("generated_at");
  return j;
}

TEST(Config, DefaultsAndComments) {
  const RunConfig c = parse_config("# comment only\n\nk = 5   # trailing\nsigma=2.5\nuse_rim = false\n");
  EXPECT_EQ(c.k, 5u);
  EXPECT_DOUBLE_EQ(c.sigma, 2.5);
  EXPECT_FALSE(c.use_rim);
  EXPECT_EQ(c.e_pre, 6000u);
  EXPECT_EQ(c.seeds.size(), 8u);
  EXPECT_DOUBLE_EQ(c.beta_cor, 1.0);
}

TEST(Config, ErrorsNameKeyAndLine) {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string unknown = message("k = 3\nbogus = 1\n");
  EXPECT_NE(unknown.find("line 2"), std::string::npos) << unknown;
  EXPECT_NE(unknown.find("'bogus'"), std::string::npos) << unknown;
  const std::string bad = message("\n\nsigma = big\n");
  EXPECT_NE(bad.find("line 3"), std::string::npos) << bad;
  EXPECT_NE(bad.find("'sigma'"), std::string::npos) << bad;
  EXPECT_NE(message("k\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("seeds = 1,x\n").find("'seeds'"), std::string::npos);
}

TEST(Config, ValidationNamesKey) {
  RunConfig c;
  c.k = 1;
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'k'"), std::string::npos);
  }
}

TEST(Config, CanonicalTextRoundTrips) {
  RunConfig c = tiny_config();
  c.sigma = 0.1;
  const RunConfig back = parse_config(c.to_text());
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_DOUBLE_EQ(back.sigma, 0.1);
  EXPECT_NE(c.to_text().find("sigma = 0.1\n"), std::string::npos);
}

TEST(Config, FinalLearningRateScaleInUnitInterval) {
  for (double bad : {0.0, -0.5, 1.5}) {
    RunConfig c;
    c.pretrain_final_lr_scale = bad;
    EXPECT_THROW(c.validate(), ConfigError) << bad;
  }
  RunConfig c;
  c.pretrain_final_lr_scale = 0.1;
  EXPECT_NO_THROW(c.validate());
}

TEST(Combinations, ArePowerSet) {
  const auto all = all_combinations();
  ASSERT_EQ(all.size(), 8u);
  std::set<std::string> names;
  for (const auto& c : all) names.insert(c.name());
  EXPECT_EQ(names.size(), 8u);
  EXPECT_EQ(all.front().name(), "none");
  EXPECT_EQ(all.back().name(), "DAN+RIM+DEC");
}

struct PipelineFixture : ::testing::Test {
  void SetUp() override {
    config = tiny_config();
    data = prepare(config);
  }
  RunConfig config;
  Prepared data;
};

TEST_F(PipelineFixture, FullRunReportContract) {
  const RunOutcome o = run_pipeline(config, data, 1, {});
  ASSERT_TRUE(o.ok) << o.report.dump(2);
  const json& r = o.report;
  EXPECT_EQ(r["schema_version"], 1);
  EXPECT_EQ(r["labels"].size(), data.raw.n());
  EXPECT_TRUE(r["metrics"].contains("acc"));
  EXPECT_TRUE(r["metrics"].contains("nmi"));
  EXPECT_TRUE(r["metrics"].contains("contingency"));
  EXPECT_TRUE(r["metrics"].contains("matched_permutation"));
  EXPECT_FALSE(r["phases"]["pretrain"]["history"].empty());
  EXPECT_FALSE(r["phases"]["refine"]["history"].empty());
  EXPECT_EQ(r["phases"]["init"]["method"], "rim");
  EXPECT_EQ(r["phases"]["init"]["restart_scores"].size(), 3u);
  EXPECT_TRUE(r["phases"]["pretrain"].contains("decorrelator_accuracy"));
  ASSERT_TRUE(o.model.has_value());
  EXPECT_EQ(o.model->cluster_dims, 2u);
}

TEST_F(PipelineFixture, SameSeedGivesIdenticalReport) {
  const RunOutcome a = run_pipeline(config, data, 1, {});
  const RunOutcome b = run_pipeline(config, data, 1, {});
  EXPECT_EQ(without_timestamp(a.report).dump(), without_timestamp(b.report).dump());
}

TEST_F(PipelineFixture, BaselineIsAutoencoderPlusKMeansOnFullLatent) {
  const RunOutcome o = run_pipeline(config, data, 2, {false, false, false});
  ASSERT_TRUE(o.ok);
  EXPECT_EQ(o.report["phases"]["init"]["method"], "kmeans");
  EXPECT_FALSE(o.report["phases"].contains("refine"));
  EXPECT_FALSE(o.report["phases"]["pretrain"].contains("decorrelator_accuracy"));
  EXPECT_EQ(o.model->cluster_dims, 4u);
  EXPECT_EQ(o.model->dan.beta_cor, 0.0);
  // Final labels are the k-means labels on the autoencoder latent.
  const Tensor z = cluster_space(o.model->dan, data.x, 4);
  Rng rng(derive_seed(2, {stream::kmeans}));
  const auto km = kmeans_fit(z, 3, {config.kmeans_restarts, 300, 1e-4}, rng);
  EXPECT_EQ(o.labels, km.labels);
}

TEST_F(PipelineFixture, AblationCellsEqualIndividualRuns) {
  const AblationResult a = run_ablation(config, data);
  ASSERT_EQ(a.rows.size(), 8u);
  for (const auto& row : a.rows) {
    ASSERT_EQ(row.cells.size(), 2u);
    for (const auto& cell : row.cells) {
      const RunOutcome o = run_pipeline(config, data, cell.seed, row.components);
      ASSERT_EQ(o.acc.has_value(), cell.acc.has_value());
      if (o.acc) EXPECT_EQ(*o.acc, *cell.acc) << row.components.name() << " seed " << cell.seed;
    }
  }
  const std::string csv = ablation_csv(a);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "DAN,RIM,DEC,avg,std,min,max");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
  const AblationResult b = run_ablation(config, data);
  EXPECT_EQ(without_timestamp(a.report).dump(), without_timestamp(b.report).dump());
}

TEST_F(PipelineFixture, AblationNeedsTwoSeeds) {
  config.seeds = {1};
  EXPECT_THROW(run_ablation(config, data), ConfigError);
}

TEST_F(PipelineFixture, CheckpointRoundTripAndStableExport) {
  const RunOutcome o = run_pipeline(config, data, 2, {});
  ASSERT_TRUE(o.ok);
  const fs::path dir = fs::temp_directory_path() / ("dance_pipeline_" + std::to_string(::getpid()));
  write_run_artifacts(o, data.raw, dir.string());
  const PipelineModel m = model_from_checkpoint(load_tensors((dir / "model.dnce").string()));
  EXPECT_EQ(m.dan.encoder, o.model->dan.encoder);
  EXPECT_EQ(m.cluster.centroids, o.model->cluster.centroids);
  EXPECT_EQ(m.config_text, config.to_text());

  export_embeddings(m, data.raw, (dir / "a.csv").string());
  export_embeddings(m, data.raw, (dir / "b.csv").string());
  const std::string a = slurp(dir / "a.csv");
  EXPECT_EQ(a, slurp(dir / "b.csv"));
  // The reloaded checkpoint is the trained model, not an approximation of it.
  EXPECT_EQ(a, slurp(dir / "embeddings.csv"));
  EXPECT_EQ(a.substr(0, a.find('\n')), "zc_1,zc_2,zr_1,zr_2,pred_label,true_label");
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), static_cast<long>(data.raw.n() + 1));

  const Embedding e = embed(m, data.raw.x);
  EXPECT_EQ(e.labels, final_assign(e.z.slice_cols(0, 2), m.cluster.centroids));

  Dataset narrow{Tensor({3, 2})};
  try {
    export_embeddings(m, narrow, (dir / "c.csv").string());
    FAIL();
  } catch (const ConfigError& err) {
    const std::string msg = err.what();
    EXPECT_NE(msg.find("2 features"), std::string::npos) << msg;
    EXPECT_NE(msg.find("expects 5"), std::string::npos) << msg;
  }
  fs::remove_all(dir);
}

TEST_F(PipelineFixture, PhaseFailureIsReportedNotThrown) {
  config.lr = 1e30;
  const RunOutcome o = run_pipeline(config, data, 1, {});
  EXPECT_FALSE(o.ok);
  ASSERT_TRUE(o.failure.has_value());
  EXPECT_EQ(o.report["ok"], false);
  EXPECT_FALSE(o.report["failure"]["phase"].get<std::string>().empty());
}

}  // namespace
}  // namespace dance
