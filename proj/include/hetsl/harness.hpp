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

#pragma once

// Monte Carlo experiments: configuration, replicate execution with
// streaming aggregation, error reports, theory comparison and file output.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetsl/learning.hpp"
#include "hetsl/models.hpp"
#include "hetsl/sbm_graph.hpp"
#include "hetsl/theory.hpp"

namespace hetsl {

inline constexpr const char* kConfigSchema = "hetsl.experiment/1";
inline constexpr const char* kVersion = "0.1.0";

// Exactly one source must be set.
struct NetworkSpec {
  std::optional<SbmParams> sbm;
  std::optional<BlockModel> blocks;
  std::string file;

  BlockModel model() const;  // sbm or blocks
  bool from_file() const { return !file.empty(); }
};

struct ProfileSpec {
  enum class Kind { kBernoulliPair, kMultinomial, kFile };
  Kind kind = Kind::kBernoulliPair;

  // Bernoulli pair: probability of symbol 1 under theta0 / theta1, and the
  // true hypothesis of each cluster (default: cluster c -> c).
  double p_theta0 = 0.1;
  double p_theta1 = 0.5;
  std::vector<int> cluster_truth;

  // Multinomial: hypotheses (0 = one per cluster), alphabet size, seed.
  int hypotheses = 0;
  int alphabet = 25;
  std::uint64_t seed = 0;
  // Advance the seed until the summed cluster informativeness is strictly
  // decreasing in the cluster index.
  bool ordered_informativeness = false;

  std::string path;  // kFile
};

struct ResolvedProfile {
  LikelihoodProfile profile;
  std::uint64_t seed = 0;  // multinomial seed actually used
};

ResolvedProfile resolve_profile(const ProfileSpec& spec,
                                const std::vector<int>& clusters);

struct ExperimentConfig {
  NetworkSpec network;
  ProfileSpec profile;
  Strategy strategy = Strategy::adaptive(0.1);
  std::vector<double> delta_grid;  // non-empty: one experiment per delta
  long horizon = 1500;
  int replicates = 500;
  std::optional<long> burn_in;     // default ceil(5 / delta)
  std::uint64_t base_seed = 0;
  std::string out_dir = "out";
  HypothesisPair pair;
  Estimator estimator = Estimator::kPrivate;
  bool fixed_graph = false;
  int trace_replicates = 1;        // replicates whose traces are written

  void validate() const;
  long effective_burn_in() const;
  // The config with strategy adaptive(delta) and no grid.
  ExperimentConfig at_delta(double delta) const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

struct ErrorReport {
  std::vector<double> p_err;     // per agent
  std::vector<double> stderrs;   // sqrt(p (1 - p) / samples)
  long samples_per_agent = 0;    // replicates x post-burn-in iterations
  std::vector<double> cluster_p_err;
  std::vector<double> cluster_stderr;
};

struct ClusterSteadyState {
  double mean = 0.0;      // over replicates of the per-replicate cluster
                          // time average after burn-in
  double std_error = 0.0;   // sd of those averages / sqrt(R)
  double variance = 0.0;  // across-replicate variance of agent log-ratios,
                          // averaged over the window and the cluster
};

struct ReplicateFailure {
  int replicate = 0;
  std::string code;
  std::string message;
};

struct ExperimentResult {
  ExperimentConfig config;  // burn_in resolved
  int agents = 0;
  int clusters_count = 0;
  std::vector<int> clusters;
  std::vector<int> truths;
  std::uint64_t profile_seed = 0;
  int completed = 0;  // replicates that finished

  // (horizon + 1) x agents, log-ratio of the configured pair in the
  // estimator's beliefs, across replicates.
  Matrix iteration_mean;
  Matrix iteration_std;
  Matrix cluster_iteration_mean;  // (horizon + 1) x clusters

  ErrorReport errors;
  std::vector<double> agent_steady_mean;
  std::vector<ClusterSteadyState> steady;

  std::vector<Trace> traces;  // the first trace_replicates replicates
  std::vector<ReplicateFailure> failures;
};

struct ExecutionOptions {
  bool parallel = true;
  // Keep traces of this many leading replicates (-1: config.trace_replicates).
  int keep_traces = -1;
};

ExperimentResult run_experiment(const ExperimentConfig& config,
                                 const ExecutionOptions& options = {});

// Error probabilities recomputed from stored traces.
ErrorReport error_report_from_traces(const std::vector<Trace>& traces,
                                     const std::vector<int>& truths,
                                     long burn_in, int clusters_count);

struct TheoryRow {
  int cluster = 0;
  double empirical = 0.0;
  double std_error = 0.0;
  double theoretical = 0.0;
  double z = 0.0;
  bool flagged = false;      // |z| > 3
  double slack = 0.0;
  bool within_band = false;  // |empirical - theoretical| <= 3 stderr + slack
};

// Throws MismatchedConfig when pair, delta or belief kind differ.
std::vector<TheoryRow> compare_theory(const ExperimentResult& result,
                                      const RhoPrediction& prediction,
                                      double slack = 0.0);

// Steady-state prediction matching the result's configuration: SBM law when
// the network is a two-block SBM, otherwise none.
std::optional<RhoPrediction> predict_for(const ExperimentResult& result);

nlohmann::json summary_json(const ExperimentResult& result);
void write_error_report_csv(std::ostream& out, const ErrorReport& report,
                            const std::vector<int>& clusters);
void write_theory_csv(std::ostream& out, const std::vector<TheoryRow>& rows);
void write_iteration_csv(std::ostream& out, const ExperimentResult& result);

// Writes summary.json, error_report.csv, iteration_stats.csv, trace CSVs,
// cluster_stats.csv and theory_comparison.csv (when a prediction exists) into
// `dir`. Returns the written file names; the manifest is left to the caller.
std::vector<std::string> write_outputs(const ExperimentResult& result,
                                       const std::filesystem::path& dir);

// manifest.json: command, status, files and (on failure) the error.
void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const std::vector<std::string>& files,
                    const nlohmann::json& extra = {});

}  // namespace hetsl
