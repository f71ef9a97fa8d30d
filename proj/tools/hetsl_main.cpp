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

// hetsl: command-line front end.
//
//   hetsl generate   --n 15 --p 0.8 --q 0.1 --seed 1 --out net/
//   hetsl simulate   --config exp.json --replicates 100 --delta 0.1
//   hetsl thresholds --n 15 --p 0.8 --q 0.1
//   hetsl predict    --config exp.json
//   hetsl fit-delta  --trace out/trace_0.csv --network net/network.txt
//   hetsl verify

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hetsl/errors.hpp"
#include "hetsl/harness.hpp"
#include "hetsl/inverse.hpp"
#include "hetsl/models.hpp"
#include "hetsl/sbm_graph.hpp"
#include "hetsl/theory.hpp"
#include "hetsl/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Two-block law from flags: --n/--p/--q (symmetric) or --params.
struct LawFlags {
  std::optional<int> n;
  std::optional<double> p;
  std::optional<double> q;
  std::vector<double> params;  // n0 n1 p0 p1 q0 q1

  void add(CLI::App* app) {
    app->add_option("--n", n, "Agents per cluster (symmetric law)");
    app->add_option("--p", p, "Intra-cluster edge probability (symmetric law)");
    app->add_option("--q", q, "Cross-cluster edge probability (symmetric law)");
    app->add_option("--params", params, "n0 n1 p0 p1 q0 q1")->expected(6)->delimiter(',');
  }

  std::optional<hetsl::SbmParams> get() const {
    if (!params.empty())
      return hetsl::SbmParams{static_cast<int>(params[0]), static_cast<int>(params[1]),
                              params[2], params[3], params[4], params[5]};
    if (n || p || q) {
      if (!(n && p && q))
        throw hetsl::Error(hetsl::ErrorCode::kInvalidArgument,
                           "--n, --p and --q must be given together");
      return hetsl::SbmParams::symmetric(*n, *p, *q);
    }
    return std::nullopt;
  }
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;

  std::string dir() const { return out.empty() ? "out" : out; }
};

hetsl::ExperimentConfig load_or_default(const std::string& path) {
  if (path.empty()) {
    hetsl::ExperimentConfig cfg;
    cfg.network.sbm = hetsl::SbmParams::symmetric(15, 0.8, 0.1);
    return cfg;
  }
  return hetsl::load_config(path);
}

hetsl::SbmParams require_law(const LawFlags& flags, const std::string& config) {
  if (auto law = flags.get()) return *law;
  if (!config.empty()) {
    const auto cfg = hetsl::load_config(config);
    if (cfg.network.sbm) return *cfg.network.sbm;
  }
  throw hetsl::Error(hetsl::ErrorCode::kInvalidArgument,
                     "a two-block law is required (--n/--p/--q, --params or a config "
                     "with network.sbm)");
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw hetsl::Error(hetsl::ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw hetsl::Error(hetsl::ErrorCode::kIo, "cannot create " + dir.string());
}

hetsl::Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw hetsl::Error(hetsl::ErrorCode::kIo, "cannot open " + path);
  std::vector<std::vector<double>> rows;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw hetsl::Error(hetsl::ErrorCode::kParse, "bad matrix entry '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows[0].size())
      throw hetsl::Error(hetsl::ErrorCode::kParse, "ragged matrix in " + path);
    rows.push_back(std::move(row));
  }
  hetsl::Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

int cmd_generate(const Common& common, const LawFlags& law) {
  hetsl::BlockModel model;
  std::uint64_t seed = common.seed.value_or(0);
  if (auto params = law.get()) {
    model = hetsl::BlockModel::from(*params);
  } else {
    const auto cfg = load_or_default(common.config);
    model = cfg.network.model();
    if (!common.seed) seed = cfg.base_seed;
  }
  const hetsl::Network network = hetsl::sample_sbm(model, seed);
  const fs::path dir = common.dir();
  ensure_dir(dir);
  {
    std::ofstream out(dir / "network.txt");
    hetsl::write_network(out, network);
  }
  {
    std::ofstream out(dir / "combination.csv");
    hetsl::write_matrix_csv(out, network.combination);
  }
  hetsl::write_manifest(dir, "generate", {"network.txt", "combination.csv"},
                        {{"seed", seed}, {"agents", network.size()},
                         {"retries", network.retries}});
  std::cout << "wrote " << network.size() << "-agent network to "
            << (dir / "network.txt").string() << '\n';
  return 0;
}

struct SimulateFlags {
  std::optional<int> replicates;
  std::optional<double> delta;
  std::optional<long> horizon;
  std::optional<long> burn_in;
  bool fixed_graph = false;
  bool serial = false;
  std::string estimator;
};

int cmd_simulate(const Common& common, const SimulateFlags& flags) {
  hetsl::ExperimentConfig cfg = load_or_default(common.config);
  if (common.seed) cfg.base_seed = *common.seed;
  if (!common.out.empty()) cfg.out_dir = common.out;
  if (flags.replicates) cfg.replicates = *flags.replicates;
  if (flags.horizon) cfg.horizon = *flags.horizon;
  if (flags.burn_in) cfg.burn_in = *flags.burn_in;
  if (flags.delta) {
    cfg.strategy = hetsl::Strategy::adaptive(*flags.delta);
    cfg.delta_grid.clear();
  }
  if (flags.fixed_graph) cfg.fixed_graph = true;
  if (!flags.estimator.empty()) cfg.estimator = hetsl::parse_estimator(flags.estimator);

  hetsl::ExecutionOptions exec;
  exec.parallel = !flags.serial;
  const fs::path root = cfg.out_dir;
  std::vector<std::string> files;
  json runs = json::array();

  std::vector<std::pair<std::string, hetsl::ExperimentConfig>> plan;
  if (cfg.delta_grid.empty()) {
    plan.emplace_back("", cfg);
  } else {
    for (double d : cfg.delta_grid) {
      std::ostringstream name;
      name << "delta_" << d;
      plan.emplace_back(name.str(), cfg.at_delta(d));
    }
  }
  for (const auto& [sub, run_cfg] : plan) {
    const hetsl::ExperimentResult result = hetsl::run_experiment(run_cfg, exec);
    const fs::path dir = sub.empty() ? root : root / sub;
    for (const auto& f : hetsl::write_outputs(result, dir))
      files.push_back(sub.empty() ? f : sub + "/" + f);
    json entry = {{"dir", sub.empty() ? "." : sub},
                  {"completed", result.completed},
                  {"failures", result.failures.size()}};
    runs.push_back(entry);
    std::cout << (sub.empty() ? "run" : sub) << ": " << result.completed << "/"
              << run_cfg.replicates << " replicates";
    for (int c = 0; c < result.clusters_count; ++c)
      std::cout << "  cluster " << c << " mean " << result.steady[c].mean << " p_err "
                << result.errors.cluster_p_err[c];
    std::cout << '\n';
  }
  hetsl::write_manifest(root, "simulate", files, {{"runs", runs}, {"config", hetsl::to_json(cfg)}});
  return 0;
}

struct ProfileFlags {
  std::optional<double> d0;
  std::optional<double> d1;
  double p_theta0 = 0.1;
  double p_theta1 = 0.5;

  void add(CLI::App* app) {
    app->add_option("--d0", d0, "Cluster-0 informativeness (nats)");
    app->add_option("--d1", d1, "Cluster-1 informativeness (nats)");
    app->add_option("--p-theta0", p_theta0, "Bernoulli parameter under theta0");
    app->add_option("--p-theta1", p_theta1, "Bernoulli parameter under theta1");
  }

  std::pair<double, double> get(const hetsl::SbmParams& law) const {
    if (d0 && d1) return {*d0, *d1};
    const hetsl::BlockModel model = hetsl::BlockModel::from(law);
    const auto profile =
        hetsl::bernoulli_pair_profile(model.labels(), {0, 1}, p_theta0, p_theta1);
    const auto info = hetsl::cluster_informativeness(profile, model.labels());
    return {info.d0, info.d1};
  }
};

int cmd_thresholds(const Common& common, const LawFlags& law_flags,
                   const ProfileFlags& profile) {
  const hetsl::SbmParams law = require_law(law_flags, common.config);
  const auto [d0, d1] = profile.get(law);
  const hetsl::ThresholdReport report = hetsl::threshold_report(law, d0, d1);
  json j = hetsl::to_json(report);
  std::cout << std::setprecision(4);
  std::cout << "d0 = " << d0 << "  d1 = " << d1 << '\n';
  if (report.symmetric) std::cout << "delta_min (symmetric) = " << *report.symmetric << '\n';
  if (report.asymmetric) {
    const auto& a = *report.asymmetric;
    std::cout << "delta_c0 = " << a.delta_c0 << "  delta_c1 = " << a.delta_c1
              << "  delta_0 = " << a.delta0 << (a.feasible ? "" : "  (infeasible)") << '\n';
  } else if (!report.precondition_holds) {
    std::cout << "asymmetric thresholds unavailable: " << report.failed_inequality << '\n';
  }
  if (law.n0 == law.n1 && law.p0 == law.p1 && law.q0 == law.q1) {
    const auto bound = hetsl::exact_recovery_infeasible(law.n0, law.p0, law.q0);
    std::cout << "exact recovery infeasible: " << (bound.infeasible ? "yes" : "no")
              << " (margin " << bound.margin << ")\n";
    j["exact_recovery"] = {{"infeasible", bound.infeasible}, {"margin", bound.margin}};
  }
  const fs::path dir = common.dir();
  ensure_dir(dir);
  write_json(dir / "thresholds.json", j);
  hetsl::write_manifest(dir, "thresholds", {"thresholds.json"});
  return 0;
}

int cmd_predict(const Common& common, const LawFlags& law_flags,
                const std::optional<double>& delta_flag, const std::string& estimator) {
  hetsl::ExperimentConfig cfg = load_or_default(common.config);
  if (auto law = law_flags.get()) {
    cfg.network = {};
    cfg.network.sbm = law;
  }
  if (delta_flag) cfg.strategy = hetsl::Strategy::adaptive(*delta_flag);
  if (!estimator.empty()) cfg.estimator = hetsl::parse_estimator(estimator);
  if (cfg.strategy.kind != hetsl::Strategy::Kind::kAdaptive)
    throw hetsl::Error(hetsl::ErrorCode::kInvalidArgument, "predict needs an adaptive strategy");

  std::optional<hetsl::Network> network;
  hetsl::CombinationLaw law;
  std::vector<int> clusters;
  if (cfg.network.from_file()) {
    std::ifstream in(cfg.network.file);
    if (!in) throw hetsl::Error(hetsl::ErrorCode::kIo, "cannot open " + cfg.network.file);
    network = hetsl::read_network(in);
    law = network->combination;
    clusters = network->clusters;
  } else if (cfg.network.sbm) {
    law = *cfg.network.sbm;
    clusters = hetsl::BlockModel::from(*cfg.network.sbm).labels();
  } else {
    throw hetsl::Error(hetsl::ErrorCode::kInvalidArgument,
                       "predict needs a two-block law or a network file");
  }
  const auto profile = hetsl::resolve_profile(cfg.profile, clusters).profile;
  const auto kind = cfg.estimator == hetsl::Estimator::kPrivate ? hetsl::BeliefKind::kPrivate
                                                               : hetsl::BeliefKind::kPublic;
  const hetsl::RhoPrediction prediction =
      hetsl::expected_rho(law, profile, cfg.strategy.delta, cfg.pair, 1e-10, kind);

  const fs::path dir = common.dir();
  ensure_dir(dir);
  {
    std::ofstream out(dir / "prediction.csv");
    out << std::setprecision(17) << "agent,cluster,rho\n";
    for (int k = 0; k < prediction.per_agent.size(); ++k)
      out << k << ',' << clusters[k] << ',' << prediction.per_agent[k] << '\n';
  }
  write_json(dir / "prediction.json", hetsl::to_json(prediction));
  hetsl::write_manifest(dir, "predict", {"prediction.csv", "prediction.json"});

  const int count = clusters.empty() ? 0 : *std::max_element(clusters.begin(), clusters.end()) + 1;
  for (int c = 0; c < count; ++c) {
    double sum = 0.0;
    int size = 0;
    for (std::size_t k = 0; k < clusters.size(); ++k)
      if (clusters[k] == c) {
        sum += prediction.per_agent[k];
        ++size;
      }
    std::cout << "cluster " << c << " mean rho = " << std::setprecision(6) << sum / size << '\n';
  }
  return 0;
}

struct FitFlags {
  std::string trace;
  std::string network;
  std::string combination;
  double step = 0.025;
  int split = -1;
  bool traditional = false;
};

int cmd_fit_delta(const Common& common, const FitFlags& flags) {
  std::ifstream in(flags.trace);
  if (!in) throw hetsl::Error(hetsl::ErrorCode::kIo, "cannot open " + flags.trace);
  const hetsl::BeliefSeries series = hetsl::read_series_csv(in, flags.split);
  hetsl::Matrix combination;
  if (!flags.combination.empty()) {
    combination = read_matrix_csv(flags.combination);
  } else if (!flags.network.empty()) {
    std::ifstream net(flags.network);
    if (!net) throw hetsl::Error(hetsl::ErrorCode::kIo, "cannot open " + flags.network);
    combination = hetsl::read_network(net).combination;
  } else {
    throw hetsl::Error(hetsl::ErrorCode::kInvalidArgument,
                       "fit-delta needs --network or --combination");
  }
  const hetsl::DeltaScan scan = hetsl::scan_delta(series, combination,
                                                  hetsl::delta_grid(flags.step),
                                                  flags.traditional);
  const hetsl::Vector estimates =
      hetsl::estimate_log_likelihoods(series, combination, scan.best_delta);

  const fs::path dir = common.dir();
  ensure_dir(dir);
  {
    std::ofstream out(dir / "delta_scan.csv");
    out << std::setprecision(17) << "delta,error\n";
    if (scan.traditional_error) out << "traditional," << *scan.traditional_error << '\n';
    for (const auto& row : scan.rows) out << row.delta << ',' << row.error << '\n';
  }
  json j = {{"best_delta", scan.best_delta},
            {"best_error", scan.best_error},
            {"steps", series.steps()},
            {"split", series.split()},
            {"agents", series.agents()},
            {"estimates", std::vector<double>(estimates.data(), estimates.data() + estimates.size())}};
  if (scan.traditional_error) j["traditional_error"] = *scan.traditional_error;
  write_json(dir / "fit.json", j);
  hetsl::write_manifest(dir, "fit-delta", {"delta_scan.csv", "fit.json"});
  std::cout << "best delta = " << scan.best_delta << " (error " << scan.best_error << ")\n";
  if (scan.traditional_error)
    std::cout << "traditional error = " << *scan.traditional_error << '\n';
  return 0;
}

int cmd_verify(const Common& common) {
  const auto results = hetsl::run_verify_suite(common.seed.value_or(0));
  bool all = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    all = all && r.passed;
  }
  const fs::path dir = common.dir();
  ensure_dir(dir);
  write_json(dir / "verify.json", hetsl::to_json(results));
  hetsl::write_manifest(dir, "verify", {"verify.json"},
                        {{"status", all ? "ok" : "failed"}});
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive social learning over community networks"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Experiment config (JSON)");
    sub->add_option("--seed", common.seed, "Base seed");
    sub->add_option("--out", common.out, "Output directory");
  };

  LawFlags law;
  auto* generate = app.add_subcommand("generate", "Sample an SBM network");
  add_common(generate);
  law.add(generate);

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo experiment");
  add_common(simulate);
  simulate->add_option("--replicates", sim.replicates, "Replicate count");
  simulate->add_option("--delta", sim.delta, "Adaptive step size");
  simulate->add_option("--horizon", sim.horizon, "Iterations per replicate");
  simulate->add_option("--burn-in", sim.burn_in, "Iterations dropped before averaging");
  simulate->add_flag("--fixed-graph", sim.fixed_graph, "Reuse one graph draw");
  simulate->add_flag("--serial", sim.serial, "Run replicates on one thread");
  simulate->add_option("--estimator", sim.estimator, "mu or psi")
      ->check(CLI::IsMember({"mu", "psi"}));

  ProfileFlags profile;
  auto* thresholds = app.add_subcommand("thresholds", "Step-size thresholds");
  add_common(thresholds);
  law.add(thresholds);
  profile.add(thresholds);

  std::optional<double> predict_delta;
  std::string predict_estimator;
  auto* predict = app.add_subcommand("predict", "Steady-state expected log-ratios");
  add_common(predict);
  law.add(predict);
  predict->add_option("--delta", predict_delta, "Adaptive step size");
  predict->add_option("--estimator", predict_estimator, "mu or psi")
      ->check(CLI::IsMember({"mu", "psi"}));

  FitFlags fit;
  auto* fit_delta = app.add_subcommand("fit-delta", "Fit the step size to a belief trace");
  add_common(fit_delta);
  fit_delta->add_option("--trace", fit.trace, "Trace or step,agent,log_ratio CSV")->required();
  fit_delta->add_option("--network", fit.network, "Network file (averaging weights)");
  fit_delta->add_option("--combination", fit.combination, "Combination matrix CSV");
  fit_delta->add_option("--step", fit.step, "Grid step");
  fit_delta->add_option("--split", fit.split, "Training steps (default: half)");
  fit_delta->add_flag("--traditional", fit.traditional, "Also fit the Bayesian recursion");

  auto* verify = app.add_subcommand("verify", "Run the property and oracle suites");
  add_common(verify);

  CLI11_PARSE(app, argc, argv);

  std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "generate") return cmd_generate(common, law);
    if (command == "simulate") return cmd_simulate(common, sim);
    if (command == "thresholds") return cmd_thresholds(common, law, profile);
    if (command == "predict") return cmd_predict(common, law, predict_delta, predict_estimator);
    if (command == "fit-delta") return cmd_fit_delta(common, fit);
    if (command == "verify") return cmd_verify(common);
  } catch (const hetsl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    try {
      hetsl::write_manifest(common.dir(), command, {},
                            {{"status", "error"},
                             {"error", {{"code", std::string(hetsl::error_code_name(e.code()))},
                                        {"message", e.what()}}}});
    } catch (const std::exception&) {
    }
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
