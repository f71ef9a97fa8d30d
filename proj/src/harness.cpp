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

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "hetsl/errors.hpp"

namespace hetsl {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kChunk = 32;

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::kParse, where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }))
      throw Error(ErrorCode::kParse, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

SbmParams sbm_from_json(const json& j) {
  if (j.contains("n")) {
    check_keys(j, {"n", "p", "q"}, "network.sbm");
    return SbmParams::symmetric(j.at("n").get<int>(), j.at("p").get<double>(),
                                j.at("q").get<double>());
  }
  check_keys(j, {"n0", "n1", "p0", "p1", "q0", "q1"}, "network.sbm");
  SbmParams p;
  p.n0 = j.at("n0").get<int>();
  p.n1 = j.at("n1").get<int>();
  p.p0 = j.at("p0").get<double>();
  p.p1 = j.at("p1").get<double>();
  p.q0 = j.at("q0").get<double>();
  p.q1 = j.at("q1").get<double>();
  return p;
}

BlockModel blocks_from_json(const json& j) {
  check_keys(j, {"sizes", "probabilities", "intra", "q"}, "network.blocks");
  auto sizes = j.at("sizes").get<std::vector<int>>();
  if (j.contains("intra"))
    return BlockModel::uniform_cross(sizes, j.at("intra").get<std::vector<double>>(),
                                     j.at("q").get<double>());
  const auto rows = j.at("probabilities").get<std::vector<std::vector<double>>>();
  BlockModel model;
  model.sizes = std::move(sizes);
  model.probabilities = Matrix::Zero(static_cast<long>(rows.size()),
                                     rows.empty() ? 0 : static_cast<long>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size())
      throw Error(ErrorCode::kParse, "ragged block probability matrix");
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      model.probabilities(static_cast<long>(r), static_cast<long>(c)) = rows[r][c];
  }
  return model;
}

json blocks_to_json(const BlockModel& model) {
  json rows = json::array();
  for (long r = 0; r < model.probabilities.rows(); ++r) {
    json row = json::array();
    for (long c = 0; c < model.probabilities.cols(); ++c)
      row.push_back(model.probabilities(r, c));
    rows.push_back(row);
  }
  return {{"sizes", model.sizes}, {"probabilities", rows}};
}

json network_to_json(const NetworkSpec& spec) {
  if (spec.sbm) return {{"sbm", to_json(*spec.sbm)}};
  if (spec.blocks) return {{"blocks", blocks_to_json(*spec.blocks)}};
  return {{"file", spec.file}};
}

json profile_to_json(const ProfileSpec& spec) {
  switch (spec.kind) {
    case ProfileSpec::Kind::kBernoulliPair: {
      json j = {{"kind", "bernoulli"},
                {"p_theta0", spec.p_theta0},
                {"p_theta1", spec.p_theta1}};
      if (!spec.cluster_truth.empty()) j["cluster_truth"] = spec.cluster_truth;
      return j;
    }
    case ProfileSpec::Kind::kMultinomial:
      return {{"kind", "multinomial"},
              {"hypotheses", spec.hypotheses},
              {"alphabet", spec.alphabet},
              {"seed", spec.seed},
              {"ordered_informativeness", spec.ordered_informativeness}};
    case ProfileSpec::Kind::kFile:
      return {{"kind", "file"}, {"path", spec.path}};
  }
  return {};
}

ProfileSpec profile_from_json(const json& j) {
  ProfileSpec spec;
  const auto kind = j.value("kind", std::string("bernoulli"));
  if (kind == "bernoulli") {
    check_keys(j, {"kind", "p_theta0", "p_theta1", "cluster_truth"}, "profile");
    spec.kind = ProfileSpec::Kind::kBernoulliPair;
    read_if(j, "p_theta0", spec.p_theta0);
    read_if(j, "p_theta1", spec.p_theta1);
    read_if(j, "cluster_truth", spec.cluster_truth);
  } else if (kind == "multinomial") {
    check_keys(j, {"kind", "hypotheses", "alphabet", "seed", "ordered_informativeness"},
               "profile");
    spec.kind = ProfileSpec::Kind::kMultinomial;
    read_if(j, "hypotheses", spec.hypotheses);
    read_if(j, "alphabet", spec.alphabet);
    read_if(j, "seed", spec.seed);
    read_if(j, "ordered_informativeness", spec.ordered_informativeness);
  } else if (kind == "file") {
    check_keys(j, {"kind", "path"}, "profile");
    spec.kind = ProfileSpec::Kind::kFile;
    spec.path = j.at("path").get<std::string>();
  } else {
    throw Error(ErrorCode::kParse, "unknown profile kind '" + kind + "'");
  }
  return spec;
}

int count_clusters(const std::vector<int>& clusters) {
  return clusters.empty() ? 0 : *std::max_element(clusters.begin(), clusters.end()) + 1;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i - 1] > v[i])) return false;
  return true;
}

struct ReplicateOutput {
  bool ok = false;
  ReplicateFailure failure;
  ErrorCode code = ErrorCode::kInvalidArgument;
  Matrix ratio;                 // (horizon + 1) x agents
  std::vector<long> errors;     // post-burn-in misses per agent
  Vector time_average;          // post-burn-in mean per agent
  std::optional<Trace> trace;
};

double ratio_of(const Matrix& beliefs, const HypothesisPair& pair, int k) {
  return beliefs(pair.first, k) - beliefs(pair.second, k);
}

ReplicateOutput run_replicate(const ExperimentConfig& cfg, int r,
                              const std::optional<Network>& fixed,
                              const BlockModel& model,
                              const LikelihoodProfile& profile, bool keep_trace) {
  ReplicateOutput out;
  const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(r);
  std::optional<Network> sampled;
  if (!fixed) sampled = sample_sbm(model, seed);
  const Network& network = fixed ? *fixed : *sampled;
  const int n = network.size();
  const long burn_in = *cfg.burn_in;
  const auto& truth = profile.true_state();

  RunOptions options;
  options.horizon = cfg.horizon;
  options.seed = seed;
  options.pair = cfg.pair;
  options.estimator = cfg.estimator;

  out.ratio.resize(cfg.horizon + 1, n);
  out.errors.assign(n, 0);
  out.time_average = Vector::Zero(n);
  if (keep_trace) {
    Trace t;
    t.agents = n;
    t.horizon = cfg.horizon;
    t.clusters = network.clusters;
    out.trace = std::move(t);
  }

  simulate(network, profile, cfg.strategy, options, [&](const StepView& step) {
    const Matrix& source =
        cfg.estimator == Estimator::kPrivate ? step.log_mu : step.log_psi;
    const std::vector<int> estimates = estimate_state(source);
    for (int k = 0; k < n; ++k) out.ratio(step.iteration, k) = ratio_of(source, cfg.pair, k);
    if (step.iteration > burn_in) {
      for (int k = 0; k < n; ++k) {
        if (estimates[k] != truth[k]) ++out.errors[k];
        out.time_average[k] += out.ratio(step.iteration, k);
      }
    }
    if (out.trace) {
      for (int k = 0; k < n; ++k) {
        out.trace->psi_log_ratio.push_back(ratio_of(step.log_psi, cfg.pair, k));
        out.trace->mu_log_ratio.push_back(ratio_of(step.log_mu, cfg.pair, k));
        out.trace->estimates.push_back(estimates[k]);
      }
    }
  });
  const long window = cfg.horizon - burn_in;
  if (window > 0) out.time_average /= static_cast<double>(window);

  if (out.trace) {
    auto& meta = out.trace->metadata;
    meta.seed = seed;
    meta.strategy = cfg.strategy.name();
    meta.delta = cfg.strategy.kind == Strategy::Kind::kAdaptive ? cfg.strategy.delta : 0.0;
    meta.pair = cfg.pair;
    meta.estimator = cfg.estimator;
    meta.horizon = cfg.horizon;
    meta.burn_in = burn_in;
    meta.network = network_to_json(cfg.network);
    meta.profile_ref = profile_to_json(cfg.profile).dump();
    meta.version = kVersion;
  }
  out.ok = true;
  return out;
}

// Welford accumulator over replicates; merged in replicate order so the
// result does not depend on scheduling.
struct Welford {
  long count = 0;
  Eigen::ArrayXXd mean;
  Eigen::ArrayXXd m2;

  void add(const Eigen::ArrayXXd& x) {
    if (count == 0) {
      mean = Eigen::ArrayXXd::Zero(x.rows(), x.cols());
      m2 = Eigen::ArrayXXd::Zero(x.rows(), x.cols());
    }
    ++count;
    const Eigen::ArrayXXd d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }
  Eigen::ArrayXXd variance() const {
    if (count < 2) return Eigen::ArrayXXd::Zero(mean.rows(), mean.cols());
    return m2 / static_cast<double>(count - 1);
  }
};

void fill_cluster_errors(ErrorReport& report, const std::vector<long>& misses,
                         const std::vector<int>& clusters, int clusters_count,
                         long samples) {
  const int n = static_cast<int>(clusters.size());
  report.samples_per_agent = samples;
  report.p_err.assign(n, 0.0);
  report.stderrs.assign(n, 0.0);
  report.cluster_p_err.assign(clusters_count, 0.0);
  report.cluster_stderr.assign(clusters_count, 0.0);
  if (samples == 0) return;
  std::vector<long> cluster_misses(clusters_count, 0);
  std::vector<long> cluster_agents(clusters_count, 0);
  for (int k = 0; k < n; ++k) {
    const double p = static_cast<double>(misses[k]) / static_cast<double>(samples);
    report.p_err[k] = p;
    report.stderrs[k] = std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
    cluster_misses[clusters[k]] += misses[k];
    ++cluster_agents[clusters[k]];
  }
  for (int c = 0; c < clusters_count; ++c) {
    const double total = static_cast<double>(samples) * cluster_agents[c];
    if (total == 0.0) continue;
    const double p = static_cast<double>(cluster_misses[c]) / total;
    report.cluster_p_err[c] = p;
    report.cluster_stderr[c] = std::sqrt(p * (1.0 - p) / total);
  }
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

BlockModel NetworkSpec::model() const {
  if (sbm) return BlockModel::from(*sbm);
  if (blocks) return *blocks;
  throw Error(ErrorCode::kInvalidArgument, "network comes from a file, not a law");
}

ResolvedProfile resolve_profile(const ProfileSpec& spec,
                                const std::vector<int>& clusters) {
  const int count = count_clusters(clusters);
  switch (spec.kind) {
    case ProfileSpec::Kind::kBernoulliPair: {
      std::vector<int> truth = spec.cluster_truth;
      if (truth.empty())
        for (int c = 0; c < count; ++c) truth.push_back(c);
      if (static_cast<int>(truth.size()) != count)
        throw Error(ErrorCode::kMismatchedConfig,
                    "cluster_truth needs one entry per cluster");
      return {bernoulli_pair_profile(clusters, truth, spec.p_theta0, spec.p_theta1), 0};
    }
    case ProfileSpec::Kind::kMultinomial: {
      const int h = spec.hypotheses > 0 ? spec.hypotheses : count;
      std::uint64_t seed = spec.seed;
      for (int attempt = 0; attempt < 100000; ++attempt, ++seed) {
        LikelihoodProfile profile = random_multinomial_profile(clusters, h, spec.alphabet, seed);
        if (!spec.ordered_informativeness ||
            strictly_decreasing(summed_informativeness(profile, clusters)))
          return {std::move(profile), seed};
      }
      throw Error(ErrorCode::kNoConvergence,
                  "no multinomial seed gives ordered informativeness");
    }
    case ProfileSpec::Kind::kFile: {
      std::ifstream in(spec.path);
      if (!in) throw Error(ErrorCode::kIo, "cannot open profile file " + spec.path);
      LikelihoodProfile profile = read_profile(in);
      if (profile.agents() != static_cast<int>(clusters.size()))
        throw Error(ErrorCode::kMismatchedConfig,
                    "profile agent count does not match the network");
      return {std::move(profile), 0};
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown profile kind");
}

long ExperimentConfig::effective_burn_in() const {
  if (burn_in) return *burn_in;
  if (horizon == 0) return 0;
  const double delta = strategy.kind == Strategy::Kind::kAdaptive ? strategy.delta : 1.0;
  return std::min(static_cast<long>(std::ceil(5.0 / delta)), horizon / 2);
}

void ExperimentConfig::validate() const {
  const int sources = (network.sbm ? 1 : 0) + (network.blocks ? 1 : 0) +
                      (network.from_file() ? 1 : 0);
  if (sources != 1)
    throw Error(ErrorCode::kInvalidArgument,
                "exactly one of network.sbm, network.blocks, network.file is required");
  if (network.sbm) network.sbm->validate();
  if (network.blocks) network.blocks->validate();
  if (network.from_file() && !fs::exists(network.file))
    throw Error(ErrorCode::kIo, "network file not found: " + network.file);
  if (profile.kind == ProfileSpec::Kind::kFile && !fs::exists(profile.path))
    throw Error(ErrorCode::kIo, "profile file not found: " + profile.path);
  if (replicates < 1) throw Error(ErrorCode::kInvalidArgument, "replicates must be >= 1");
  if (horizon < 0) throw Error(ErrorCode::kInvalidArgument, "horizon must be >= 0");
  if (trace_replicates < 0)
    throw Error(ErrorCode::kInvalidArgument, "trace_replicates must be >= 0");
  if (pair.first == pair.second || pair.first < 0 || pair.second < 0)
    throw Error(ErrorCode::kInvalidArgument, "pair must name two distinct hypotheses");
  if (strategy.kind == Strategy::Kind::kAdaptive &&
      !(strategy.delta > 0.0 && strategy.delta < 1.0))
    throw Error(ErrorCode::kDeltaOutOfRange, "delta must lie in (0, 1)");
  for (double d : delta_grid)
    if (!(d > 0.0 && d < 1.0))
      throw Error(ErrorCode::kDeltaOutOfRange, "grid delta must lie in (0, 1)");
  const long b = effective_burn_in();
  if (b < 0) throw Error(ErrorCode::kInvalidArgument, "burn_in must be >= 0");
  if (horizon > 0 ? b >= horizon : b != 0)
    throw Error(ErrorCode::kInvalidArgument, "horizon must exceed burn_in");
}

ExperimentConfig ExperimentConfig::at_delta(double delta) const {
  ExperimentConfig out = *this;
  out.strategy = Strategy::adaptive(delta);
  out.delta_grid.clear();
  return out;
}

ExperimentConfig config_from_json(const json& j) {
  try {
    check_keys(j, {"schema", "network", "profile", "strategy", "delta_grid", "horizon",
                   "replicates", "burn_in", "seed", "out", "pair", "estimator",
                   "fixed_graph", "trace_replicates"},
               "config");
    if (j.contains("schema") && j.at("schema").get<std::string>() != kConfigSchema)
      throw Error(ErrorCode::kParse, "unsupported config schema '" +
                                         j.at("schema").get<std::string>() + "'");
    ExperimentConfig cfg;
    const json& net = j.at("network");
    check_keys(net, {"sbm", "blocks", "file"}, "network");
    if (net.contains("sbm")) cfg.network.sbm = sbm_from_json(net.at("sbm"));
    if (net.contains("blocks")) cfg.network.blocks = blocks_from_json(net.at("blocks"));
    read_if(net, "file", cfg.network.file);
    if (j.contains("profile")) cfg.profile = profile_from_json(j.at("profile"));
    if (j.contains("strategy")) {
      const json& s = j.at("strategy");
      check_keys(s, {"kind", "delta"}, "strategy");
      const auto kind = s.value("kind", std::string("asl"));
      if (kind == "traditional") {
        cfg.strategy = Strategy::traditional();
      } else if (kind == "asl") {
        cfg.strategy = Strategy::adaptive(s.value("delta", 0.1));
      } else {
        throw Error(ErrorCode::kParse, "unknown strategy '" + kind + "'");
      }
    }
    read_if(j, "delta_grid", cfg.delta_grid);
    read_if(j, "horizon", cfg.horizon);
    read_if(j, "replicates", cfg.replicates);
    if (j.contains("burn_in") && !j.at("burn_in").is_null())
      cfg.burn_in = j.at("burn_in").get<long>();
    read_if(j, "seed", cfg.base_seed);
    read_if(j, "out", cfg.out_dir);
    if (j.contains("pair")) {
      const auto pair = j.at("pair").get<std::vector<int>>();
      if (pair.size() != 2) throw Error(ErrorCode::kParse, "pair must have two entries");
      cfg.pair = {pair[0], pair[1]};
    }
    if (j.contains("estimator"))
      cfg.estimator = parse_estimator(j.at("estimator").get<std::string>());
    read_if(j, "fixed_graph", cfg.fixed_graph);
    read_if(j, "trace_replicates", cfg.trace_replicates);
    return cfg;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["schema"] = kConfigSchema;
  j["network"] = network_to_json(cfg.network);
  j["profile"] = profile_to_json(cfg.profile);
  if (cfg.strategy.kind == Strategy::Kind::kAdaptive)
    j["strategy"] = {{"kind", "asl"}, {"delta", cfg.strategy.delta}};
  else
    j["strategy"] = {{"kind", "traditional"}};
  if (!cfg.delta_grid.empty()) j["delta_grid"] = cfg.delta_grid;
  j["horizon"] = cfg.horizon;
  j["replicates"] = cfg.replicates;
  j["burn_in"] = cfg.burn_in ? json(*cfg.burn_in) : json(nullptr);
  j["seed"] = cfg.base_seed;
  j["out"] = cfg.out_dir;
  j["pair"] = {cfg.pair.first, cfg.pair.second};
  j["estimator"] = to_string(cfg.estimator);
  j["fixed_graph"] = cfg.fixed_graph;
  j["trace_replicates"] = cfg.trace_replicates;
  return j;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const ExecutionOptions& options) {
  config.validate();
  ExperimentResult result;
  result.config = config;
  result.config.burn_in = config.effective_burn_in();
  const ExperimentConfig& cfg = result.config;

  std::optional<Network> fixed;
  BlockModel model;
  if (cfg.network.from_file()) {
    std::ifstream in(cfg.network.file);
    if (!in) throw Error(ErrorCode::kIo, "cannot open network file " + cfg.network.file);
    fixed = read_network(in);
  } else {
    model = cfg.network.model();
    if (cfg.fixed_graph) fixed = sample_sbm(model, cfg.base_seed);
  }
  result.clusters = fixed ? fixed->clusters : model.labels();
  result.agents = static_cast<int>(result.clusters.size());
  result.clusters_count = count_clusters(result.clusters);

  ResolvedProfile resolved = resolve_profile(cfg.profile, result.clusters);
  const LikelihoodProfile& profile = resolved.profile;
  result.profile_seed = resolved.seed;
  result.truths = profile.true_state();
  if (cfg.pair.first >= profile.hypotheses() || cfg.pair.second >= profile.hypotheses())
    throw Error(ErrorCode::kInvalidArgument, "recorded pair exceeds the hypothesis count");

  const int n = result.agents;
  const int clusters_count = result.clusters_count;
  const int keep = options.keep_traces < 0 ? cfg.trace_replicates : options.keep_traces;
  const long window = cfg.horizon - *cfg.burn_in;

  Welford ratio_stats;
  Welford cluster_stats;   // per-replicate cluster time averages
  Welford cluster_series;  // per-replicate cluster means per iteration
  Welford agent_steady;
  std::vector<long> misses(n, 0);
  std::vector<int> cluster_sizes(clusters_count, 0);
  for (int c : result.clusters) ++cluster_sizes[c];

  std::exception_ptr fatal;
  for (int start = 0; start < cfg.replicates; start += kChunk) {
    const int len = std::min(kChunk, cfg.replicates - start);
    std::vector<ReplicateOutput> outs(len);
#pragma omp parallel for schedule(dynamic) if (options.parallel)
    for (int j = 0; j < len; ++j) {
      const int r = start + j;
      try {
        outs[j] = run_replicate(cfg, r, fixed, model, profile, r < keep);
      } catch (const Error& e) {
        outs[j].failure = {r, std::string(error_code_name(e.code())), e.what()};
        outs[j].code = e.code();
      } catch (...) {
#pragma omp critical
        if (!fatal) fatal = std::current_exception();
      }
    }
    if (fatal) std::rethrow_exception(fatal);

    for (auto& out : outs) {
      if (!out.ok) {
        result.failures.push_back(out.failure);
        continue;
      }
      ++result.completed;
      ratio_stats.add(out.ratio.array());
      agent_steady.add(out.time_average.array());
      Eigen::ArrayXXd cluster_avg = Eigen::ArrayXXd::Zero(1, clusters_count);
      Eigen::ArrayXXd series = Eigen::ArrayXXd::Zero(cfg.horizon + 1, clusters_count);
      for (int k = 0; k < n; ++k) {
        const int c = result.clusters[k];
        cluster_avg(0, c) += out.time_average[k] / cluster_sizes[c];
        series.col(c) += out.ratio.col(k).array() / cluster_sizes[c];
        misses[k] += out.errors[k];
      }
      cluster_stats.add(cluster_avg);
      cluster_series.add(series);
      if (out.trace) result.traces.push_back(std::move(*out.trace));
    }
  }
  if (result.completed == 0) {
    const auto& f = result.failures.front();
    throw Error(ErrorCode::kNoConvergence,
                "all replicates failed; first failure: " + f.message);
  }

  result.iteration_mean = ratio_stats.mean.matrix();
  result.iteration_std = ratio_stats.variance().sqrt().matrix();
  result.cluster_iteration_mean = cluster_series.mean.matrix();

  const long samples = window > 0 ? window * result.completed : 0;
  fill_cluster_errors(result.errors, misses, result.clusters, clusters_count, samples);

  result.agent_steady_mean.assign(n, kNaN);
  result.steady.assign(clusters_count, {kNaN, kNaN, kNaN});
  if (window > 0) {
    for (int k = 0; k < n; ++k) result.agent_steady_mean[k] = agent_steady.mean(k, 0);
    const Eigen::ArrayXXd var = ratio_stats.variance();
    const Eigen::ArrayXXd cluster_var = cluster_stats.variance();
    for (int c = 0; c < clusters_count; ++c) {
      ClusterSteadyState& s = result.steady[c];
      s.mean = cluster_stats.mean(0, c);
      s.std_error = std::sqrt(cluster_var(0, c) / result.completed);
      double acc = 0.0;
      for (int k = 0; k < n; ++k)
        if (result.clusters[k] == c)
          acc += var.col(k).tail(window).sum();
      s.variance = acc / (static_cast<double>(window) * cluster_sizes[c]);
    }
  }
  return result;
}

ErrorReport error_report_from_traces(const std::vector<Trace>& traces,
                                     const std::vector<int>& truths, long burn_in,
                                     int clusters_count) {
  if (traces.empty()) throw Error(ErrorCode::kInvalidArgument, "no traces");
  const int n = traces.front().agents;
  std::vector<long> misses(n, 0);
  long samples = 0;
  for (const Trace& t : traces) {
    if (t.agents != n || t.horizon != traces.front().horizon)
      throw Error(ErrorCode::kMismatchedConfig, "traces differ in shape");
    for (long i = burn_in + 1; i <= t.horizon; ++i)
      for (int k = 0; k < n; ++k)
        if (t.estimate(i, k) != truths.at(k)) ++misses[k];
    samples += std::max(0L, t.horizon - burn_in);
  }
  ErrorReport report;
  fill_cluster_errors(report, misses, traces.front().clusters, clusters_count, samples);
  return report;
}

std::vector<TheoryRow> compare_theory(const ExperimentResult& result,
                                      const RhoPrediction& prediction, double slack) {
  const ExperimentConfig& cfg = result.config;
  if (prediction.pair.first != cfg.pair.first || prediction.pair.second != cfg.pair.second)
    throw Error(ErrorCode::kMismatchedConfig, "prediction and experiment pairs differ");
  if (cfg.strategy.kind != Strategy::Kind::kAdaptive ||
      std::abs(prediction.delta - cfg.strategy.delta) > 1e-12)
    throw Error(ErrorCode::kMismatchedConfig, "prediction and experiment deltas differ");
  const BeliefKind kind =
      cfg.estimator == Estimator::kPrivate ? BeliefKind::kPrivate : BeliefKind::kPublic;
  if (prediction.kind != kind)
    throw Error(ErrorCode::kMismatchedConfig, "prediction and estimator belief kinds differ");
  if (prediction.per_agent.size() != result.agents)
    throw Error(ErrorCode::kMismatchedConfig, "prediction agent count differs");

  std::vector<TheoryRow> rows;
  for (int c = 0; c < result.clusters_count; ++c) {
    double theo = 0.0;
    int count = 0;
    for (int k = 0; k < result.agents; ++k)
      if (result.clusters[k] == c) {
        theo += prediction.per_agent[k];
        ++count;
      }
    TheoryRow row;
    row.cluster = c;
    row.empirical = result.steady[c].mean;
    row.std_error = result.steady[c].std_error;
    row.theoretical = theo / count;
    const double diff = row.empirical - row.theoretical;
    if (row.std_error > 0.0)
      row.z = diff / row.std_error;
    else
      row.z = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    row.flagged = std::abs(row.z) > 3.0;
    row.slack = slack;
    row.within_band = std::abs(diff) <= 3.0 * row.std_error + slack;
    rows.push_back(row);
  }
  return rows;
}

std::optional<RhoPrediction> predict_for(const ExperimentResult& result) {
  const ExperimentConfig& cfg = result.config;
  if (!cfg.network.sbm || cfg.strategy.kind != Strategy::Kind::kAdaptive)
    return std::nullopt;
  const LikelihoodProfile profile = resolve_profile(cfg.profile, result.clusters).profile;
  const BeliefKind kind =
      cfg.estimator == Estimator::kPrivate ? BeliefKind::kPrivate : BeliefKind::kPublic;
  return expected_rho(*cfg.network.sbm, profile, cfg.strategy.delta, cfg.pair, 1e-10, kind);
}

json summary_json(const ExperimentResult& result) {
  json j;
  j["version"] = kVersion;
  j["config"] = to_json(result.config);
  j["agents"] = result.agents;
  j["clusters"] = result.clusters_count;
  j["completed_replicates"] = result.completed;
  j["burn_in"] = *result.config.burn_in;
  j["profile_seed"] = result.profile_seed;
  j["samples_per_agent"] = result.errors.samples_per_agent;
  json clusters = json::array();
  for (int c = 0; c < result.clusters_count; ++c) {
    const auto& s = result.steady[c];
    clusters.push_back({{"cluster", c},
                        {"steady_mean", s.mean},
                        {"steady_stderr", s.std_error},
                        {"steady_variance", s.variance},
                        {"p_err", result.errors.cluster_p_err[c]},
                        {"p_err_stderr", result.errors.cluster_stderr[c]}});
  }
  j["cluster_stats"] = clusters;
  json failures = json::array();
  for (const auto& f : result.failures)
    failures.push_back({{"replicate", f.replicate}, {"code", f.code}, {"message", f.message}});
  j["failures"] = failures;
  return j;
}

void write_error_report_csv(std::ostream& out, const ErrorReport& report,
                            const std::vector<int>& clusters) {
  out << "agent,cluster,p_err,stderr\n";
  for (std::size_t k = 0; k < report.p_err.size(); ++k)
    out << k << ',' << clusters[k] << ',' << format_double(report.p_err[k]) << ','
        << format_double(report.stderrs[k]) << '\n';
}

void write_theory_csv(std::ostream& out, const std::vector<TheoryRow>& rows) {
  out << "cluster,empirical,stderr,theoretical,z,flagged\n";
  for (const auto& r : rows)
    out << r.cluster << ',' << format_double(r.empirical) << ','
        << format_double(r.std_error) << ',' << format_double(r.theoretical) << ','
        << format_double(r.z) << ',' << (r.flagged ? 1 : 0) << '\n';
}

void write_iteration_csv(std::ostream& out, const ExperimentResult& result) {
  out << "iter,agent,cluster,mean,std\n";
  for (long i = 0; i < result.iteration_mean.rows(); ++i)
    for (int k = 0; k < result.agents; ++k)
      out << i << ',' << k << ',' << result.clusters[k] << ','
          << format_double(result.iteration_mean(i, k)) << ','
          << format_double(result.iteration_std(i, k)) << '\n';
}

std::vector<std::string> write_outputs(const ExperimentResult& result,
                                       const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::string> files;
  auto open = [&](const std::string& name) {
    std::ofstream out(dir / name);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + (dir / name).string());
    files.push_back(name);
    return out;
  };

  {
    auto out = open("summary.json");
    out << summary_json(result).dump(2) << '\n';
  }
  {
    auto out = open("error_report.csv");
    write_error_report_csv(out, result.errors, result.clusters);
  }
  {
    auto out = open("iteration_stats.csv");
    write_iteration_csv(out, result);
  }
  {
    auto out = open("cluster_stats.csv");
    out << "iter,cluster,mean\n";
    for (long i = 0; i < result.cluster_iteration_mean.rows(); ++i)
      for (int c = 0; c < result.clusters_count; ++c)
        out << i << ',' << c << ','
            << format_double(result.cluster_iteration_mean(i, c)) << '\n';
  }
  for (std::size_t r = 0; r < result.traces.size(); ++r) {
    const std::string stem = "trace_" + std::to_string(r);
    {
      auto out = open(stem + ".csv");
      write_trace_csv(out, result.traces[r]);
    }
    auto out = open(stem + ".json");
    out << trace_metadata_json(result.traces[r].metadata).dump(2) << '\n';
  }
  if (result.completed > 0 && *result.config.burn_in < result.config.horizon) {
    if (const auto prediction = predict_for(result)) {
      auto out = open("theory_comparison.csv");
      write_theory_csv(out, compare_theory(result, *prediction));
    }
  }
  return files;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const std::vector<std::string>& files, const json& extra) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  json j = {{"tool", "hetsl"}, {"version", kVersion}, {"command", command}, {"files", files}};
  if (extra.is_object())
    for (const auto& [key, value] : extra.items()) j[key] = value;
  if (!j.contains("status")) j["status"] = "ok";
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error(ErrorCode::kIo, "cannot write manifest in " + dir.string());
  out << j.dump(2) << '\n';
}

}  // namespace hetsl
