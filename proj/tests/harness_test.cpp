// Copyright 2026 The hetsl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hetsl/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hetsl/errors.hpp"

namespace hetsl {
namespace {

namespace fs = std::filesystem;

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.network.sbm = SbmParams::symmetric(6, 0.8, 0.1);
  cfg.strategy = Strategy::adaptive(0.2);
  cfg.horizon = 60;
  cfg.replicates = 40;
  cfg.base_seed = 17;
  return cfg;
}

ExperimentConfig two_community_config(double delta, int replicates, long horizon) {
  ExperimentConfig cfg;
  cfg.network.sbm = SbmParams::symmetric(15, 0.8, 0.1);
  cfg.strategy = Strategy::adaptive(delta);
  cfg.horizon = horizon;
  cfg.replicates = replicates;
  cfg.burn_in = horizon / 3;
  cfg.base_seed = 1;
  return cfg;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hetsl_harness_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(RunExperiment, ByteIdenticalOutputsAcrossInvocations) {
  ExperimentConfig cfg = small_config();
  cfg.replicates = 2;
  const fs::path a = fresh_dir("a"), b = fresh_dir("b");
  const auto files_a = write_outputs(run_experiment(cfg), a);
  const auto files_b = write_outputs(run_experiment(cfg), b);
  ASSERT_EQ(files_a, files_b);
  ASSERT_FALSE(files_a.empty());
  for (const auto& f : files_a) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(RunExperiment, SerialAndParallelAgree) {
  const ExperimentConfig cfg = small_config();
  const auto par = run_experiment(cfg, {true, -1});
  const auto ser = run_experiment(cfg, {false, -1});
  EXPECT_EQ(par.iteration_mean, ser.iteration_mean);
  EXPECT_EQ(par.iteration_std, ser.iteration_std);
  EXPECT_EQ(par.errors.p_err, ser.errors.p_err);
  EXPECT_EQ(summary_json(par).dump(), summary_json(ser).dump());
}

TEST(RunExperiment, SeedsAreBasePlusReplicate) {
  ExperimentConfig cfg = small_config();
  cfg.replicates = 3;
  const auto all = run_experiment(cfg, {true, 3});
  ExperimentConfig shifted = cfg;
  shifted.base_seed = cfg.base_seed + 2;
  shifted.replicates = 1;
  const auto one = run_experiment(shifted, {true, 1});
  ASSERT_EQ(all.traces.size(), 3u);
  EXPECT_EQ(all.traces[2].mu_log_ratio, one.traces[0].mu_log_ratio);
  EXPECT_EQ(all.traces[2].metadata.seed, cfg.base_seed + 2);
}

TEST(RunExperiment, StreamingAndPostHocErrorsAgree) {
  for (bool fixed : {false, true}) {
    ExperimentConfig cfg = small_config();
    cfg.fixed_graph = fixed;
    const auto result = run_experiment(cfg, {true, cfg.replicates});
    ASSERT_EQ(result.traces.size(), static_cast<std::size_t>(cfg.replicates));
    const ErrorReport post = error_report_from_traces(
        result.traces, result.truths, *result.config.burn_in, result.clusters_count);
    EXPECT_EQ(post.p_err, result.errors.p_err);
    EXPECT_EQ(post.stderrs, result.errors.stderrs);
    EXPECT_EQ(post.cluster_p_err, result.errors.cluster_p_err);
    EXPECT_EQ(post.samples_per_agent, result.errors.samples_per_agent);
  }
}

TEST(RunExperiment, ErrorReportInvariants) {
  const auto result = run_experiment(small_config());
  const long samples = result.errors.samples_per_agent;
  EXPECT_EQ(samples, (60 - *result.config.burn_in) * 40);
  for (std::size_t k = 0; k < result.errors.p_err.size(); ++k) {
    const double p = result.errors.p_err[k];
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
    EXPECT_DOUBLE_EQ(result.errors.stderrs[k], std::sqrt(p * (1 - p) / samples));
  }
}

TEST(RunExperiment, PartialFailuresAreReported) {
  ExperimentConfig cfg;
  cfg.network.sbm = SbmParams::symmetric(3, 0.25, 0.125);
  cfg.horizon = 20;
  cfg.burn_in = 5;
  cfg.replicates = 40;
  const auto result = run_experiment(cfg);
  EXPECT_GT(result.completed, 0);
  EXPECT_FALSE(result.failures.empty());
  EXPECT_EQ(result.completed + static_cast<int>(result.failures.size()), 40);
  EXPECT_EQ(result.errors.samples_per_agent, 15L * result.completed);
  const auto summary = summary_json(result);
  EXPECT_EQ(summary.at("failures").size(), result.failures.size());
  EXPECT_EQ(summary.at("failures")[0].at("code").get<std::string>(),
            result.failures[0].code);

  cfg.network.sbm = SbmParams::symmetric(3, 0.02, 0.01);
  EXPECT_EQ(code_of([&] { run_experiment(cfg); }), ErrorCode::kNoConvergence);
}

TEST(RunExperiment, HorizonZeroKeepsInitialState) {
  ExperimentConfig cfg = small_config();
  cfg.horizon = 0;
  cfg.replicates = 2;
  const auto result = run_experiment(cfg);
  EXPECT_EQ(*result.config.burn_in, 0);
  EXPECT_EQ(result.iteration_mean.rows(), 1);
  ASSERT_EQ(result.traces.size(), 1u);
  EXPECT_EQ(result.traces[0].iterations(), 1);
  EXPECT_EQ(result.errors.samples_per_agent, 0);
}

TEST(ExperimentConfig, BurnInDefault) {
  ExperimentConfig cfg = small_config();
  EXPECT_EQ(cfg.effective_burn_in(), 25);  // ceil(5 / 0.2)
  cfg.strategy = Strategy::adaptive(0.01);
  EXPECT_EQ(cfg.effective_burn_in(), 30);  // clamped to horizon / 2
  cfg.burn_in = 7;
  EXPECT_EQ(cfg.effective_burn_in(), 7);
}

TEST(ExperimentConfig, JsonRoundTrip) {
  ExperimentConfig cfg = small_config();
  cfg.delta_grid = {0.05, 0.1};
  cfg.burn_in = 12;
  cfg.pair = {1, 0};
  cfg.estimator = Estimator::kPublic;
  cfg.fixed_graph = true;
  cfg.trace_replicates = 3;
  cfg.profile.kind = ProfileSpec::Kind::kMultinomial;
  cfg.profile.alphabet = 7;
  cfg.profile.seed = 42;
  cfg.profile.ordered_informativeness = true;
  const auto j = to_json(cfg);
  EXPECT_EQ(j.at("schema").get<std::string>(), kConfigSchema);
  const auto back = config_from_json(j);
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_EQ(back.network.sbm->n0, 6);
  EXPECT_EQ(back.pair.first, 1);
  EXPECT_EQ(back.estimator, Estimator::kPublic);

  const fs::path dir = fresh_dir("config");
  std::ofstream(dir / "c.json") << j.dump(2);
  EXPECT_EQ(to_json(load_config(dir / "c.json")).dump(), j.dump());
}

TEST(ExperimentConfig, ParsesMinimalAndRejectsUnknownKeys) {
  const auto cfg = config_from_json(nlohmann::json::parse(
      R"({"network": {"sbm": {"n": 15, "p": 0.8, "q": 0.1}},
          "strategy": {"kind": "asl", "delta": 0.3}, "replicates": 5})"));
  EXPECT_EQ(cfg.network.sbm->size(), 30);
  EXPECT_EQ(cfg.strategy.delta, 0.3);
  EXPECT_EQ(cfg.horizon, 1500);
  EXPECT_NO_THROW(cfg.validate());

  EXPECT_EQ(code_of([] {
              config_from_json(nlohmann::json::parse(
                  R"({"network": {"sbm": {"n": 3, "p": 0.8, "q": 0.1}}, "replicas": 5})"));
            }),
            ErrorCode::kParse);
  EXPECT_EQ(code_of([] {
              config_from_json(nlohmann::json::parse(
                  R"({"schema": "other/2", "network": {"sbm": {"n": 3, "p": 0.8, "q": 0.1}}})"));
            }),
            ErrorCode::kParse);
  EXPECT_EQ(code_of([] {
              config_from_json(nlohmann::json::parse(
                  R"({"network": {"sbm": {"n": 3, "p": 0.8, "q": 0.1}},
                      "strategy": {"kind": "bayes"}})"));
            }),
            ErrorCode::kParse);
  EXPECT_EQ(code_of([] { load_config("/nonexistent/config.json"); }), ErrorCode::kIo);
}

TEST(ExperimentConfig, ValidationErrors) {
  auto expect_code = [](ExperimentConfig cfg, ErrorCode code) {
    EXPECT_EQ(code_of([&] { cfg.validate(); }), code);
  };
  ExperimentConfig cfg = small_config();
  cfg.replicates = 0;
  expect_code(cfg, ErrorCode::kInvalidArgument);
  cfg = small_config();
  cfg.burn_in = 60;
  expect_code(cfg, ErrorCode::kInvalidArgument);
  cfg = small_config();
  cfg.network.file = "/nonexistent/net.txt";
  expect_code(cfg, ErrorCode::kInvalidArgument);  // two sources
  cfg.network.sbm.reset();
  expect_code(cfg, ErrorCode::kIo);
  cfg = small_config();
  cfg.strategy.delta = 1.0;
  expect_code(cfg, ErrorCode::kDeltaOutOfRange);
  cfg = small_config();
  cfg.delta_grid = {0.1, 0.0};
  expect_code(cfg, ErrorCode::kDeltaOutOfRange);
  cfg = small_config();
  cfg.pair = {1, 1};
  expect_code(cfg, ErrorCode::kInvalidArgument);
}

TEST(CompareTheory, ExactMatchGivesZeroScore) {
  const auto result = run_experiment(small_config());
  RhoPrediction prediction = *predict_for(result);
  for (int k = 0; k < result.agents; ++k)
    prediction.per_agent(k) = result.steady[result.clusters[k]].mean;
  const auto rows = compare_theory(result, prediction);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& row : rows) {
    EXPECT_EQ(row.z, 0.0);
    EXPECT_FALSE(row.flagged);
    EXPECT_TRUE(row.within_band);
  }
}

TEST(CompareTheory, MismatchedConfig) {
  const auto result = run_experiment(small_config());
  const RhoPrediction base = *predict_for(result);
  RhoPrediction p = base;
  p.delta = 0.3;
  EXPECT_EQ(code_of([&] { compare_theory(result, p); }), ErrorCode::kMismatchedConfig);
  p = base;
  p.pair = {1, 0};
  EXPECT_EQ(code_of([&] { compare_theory(result, p); }), ErrorCode::kMismatchedConfig);
  p = base;
  p.kind = BeliefKind::kPublic;
  EXPECT_EQ(code_of([&] { compare_theory(result, p); }), ErrorCode::kMismatchedConfig);
}

TEST(CompareTheory, PredictionMatchesTheLaw) {
  const auto result = run_experiment(small_config());
  const RhoPrediction p = *predict_for(result);
  const double d0 = 0.1 * std::log(0.2) + 0.9 * std::log(1.8);
  const double d1 = 0.5 * std::log(5.0) + 0.5 * std::log(5.0 / 9.0);
  const double spread = 0.2 * (d0 + d1) * 0.7 / (2 * (0.9 - 0.8 * 0.7));
  EXPECT_NEAR(p.per_agent(0), (d0 - d1) / 2 + spread, 1e-9);
  EXPECT_NEAR(p.per_agent(11), (d0 - d1) / 2 - spread, 1e-9);
}

TEST(TwoCommunityExperiment, SmallStepSizeLeavesBothClustersNegative) {
  const auto result = run_experiment(two_community_config(0.01, 500, 1500));
  EXPECT_LT(result.steady[0].mean, 0.0);
  EXPECT_LT(result.steady[1].mean, 0.0);
}

TEST(TwoCommunityExperiment, ModerateStepSizeSplitsSigns) {
  const auto result = run_experiment(two_community_config(0.1, 500, 1500));
  EXPECT_GT(result.steady[0].mean, 0.0);
  EXPECT_LT(result.steady[1].mean, 0.0);
  const auto rows = compare_theory(result, *predict_for(result),
                                   0.368 * std::pow(15.0, -1.0 / 3.0));
  EXPECT_NEAR(rows[0].theoretical, 0.042, 2e-3);
  for (const auto& row : rows) EXPECT_TRUE(row.within_band) << row.cluster;
}

TEST(TwoCommunityExperiment, VarianceGrowsWithStepSize) {
  double previous = 0.0;
  for (double delta : {0.05, 0.1, 0.2, 0.3}) {
    ExperimentConfig cfg = two_community_config(delta, 200, 600);
    cfg.burn_in = 200;
    const auto result = run_experiment(cfg);
    const double variance = 0.5 * (result.steady[0].variance + result.steady[1].variance);
    EXPECT_GT(variance, previous) << delta;
    previous = variance;
  }
}

TEST(WriteOutputs, FilesAndManifest) {
  ExperimentConfig cfg = small_config();
  cfg.replicates = 3;
  const auto result = run_experiment(cfg);
  const fs::path dir = fresh_dir("outputs");
  const auto files = write_outputs(result, dir);
  for (const char* name : {"summary.json", "error_report.csv", "theory_comparison.csv"})
    EXPECT_NE(std::find(files.begin(), files.end(), name), files.end()) << name;
  for (const auto& f : files) EXPECT_TRUE(fs::exists(dir / f)) << f;
  std::ifstream report(dir / "error_report.csv");
  std::string header;
  std::getline(report, header);
  EXPECT_EQ(header, "agent,cluster,p_err,stderr");

  write_manifest(dir, "simulate", files);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest.at("command").get<std::string>(), "simulate");
  EXPECT_EQ(manifest.at("files").size(), files.size());
}

}  // namespace
}  // namespace hetsl
