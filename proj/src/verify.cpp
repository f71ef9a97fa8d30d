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

#include "hetsl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hetsl/errors.hpp"
#include "hetsl/inverse.hpp"
#include "hetsl/learning.hpp"
#include "hetsl/models.hpp"
#include "hetsl/rng.hpp"
#include "hetsl/sbm_graph.hpp"
#include "hetsl/theory.hpp"

namespace hetsl {
namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

CheckResult guarded(const std::string& name, auto&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return {name, false, e.what()};
  }
}

double simplex_error(const Matrix& log_beliefs) {
  double worst = 0.0;
  for (long k = 0; k < log_beliefs.cols(); ++k) {
    if (!log_beliefs.col(k).allFinite()) return INFINITY;
    worst = std::max(worst, std::abs(log_beliefs.col(k).array().exp().sum() - 1.0));
  }
  return worst;
}

}  // namespace

CheckResult check_simplex_conservation(std::uint64_t seed, long steps) {
  const std::string name = "simplex_conservation";
  return guarded(name, [&] {
    const Network network = sample_sbm(SbmParams::symmetric(12, 0.7, 0.15), seed);
    const LikelihoodProfile profile =
        random_multinomial_profile(network.clusters, 4, 6, derive_seed(seed, seed_domain::kProfile, 0));
    double worst = 0.0;
    for (const Strategy& strategy : {Strategy::adaptive(0.2), Strategy::traditional()}) {
      RunOptions options;
      options.horizon = steps;
      options.seed = seed;
      simulate(network, profile, strategy, options, [&](const StepView& step) {
        worst = std::max({worst, simplex_error(step.log_mu), simplex_error(step.log_psi)});
      });
    }
    return CheckResult{name, worst <= 1e-10,
                       "max |sum - 1| = " + fmt(worst) + " over " +
                           std::to_string(2 * steps) + " steps"};
  });
}

CheckResult check_power_identity() {
  const std::string name = "power_identity";
  return guarded(name, [&] {
    double worst = 0.0;
    const double laws[][2] = {{0.8, 0.1}, {0.25, 0.1}, {0.5, 0.45}, {0.9, 0.05}};
    for (int n : {3, 10, 25}) {
      for (const auto& law : laws) {
        const Matrix abar =
            expected_combination(SbmParams::symmetric(n, law[0], law[1])).dense();
        Matrix power = abar;
        for (int t = 1; t <= 50; ++t) {
          if (t > 1) power = power * abar;
          const Matrix closed = closed_form_power(law[0], law[1], n, t).matrix;
          worst = std::max(worst, (closed - power).cwiseAbs().maxCoeff());
        }
      }
    }
    return CheckResult{name, worst <= 1e-10, "max deviation " + fmt(worst)};
  });
}

CheckResult check_inverse_binomial() {
  const std::string name = "inverse_binomial";
  return guarded(name, [&] {
    bool ordered = true;
    for (int n : {1, 5, 10, 40, 160})
      for (double p : {0.05, 0.3, 0.5, 0.9})
        for (int t : {1, 2, 3})
          for (double c : {0.5, 1.0, 2.0})
            if (inverse_binomial_moment(c, n, p, t, MomentMode::kExact) <
                inverse_binomial_moment(c, n, p, t, MomentMode::kApprox))
              ordered = false;
    // Least-squares slope of log gap against log n.
    const int ns[] = {10, 40, 160};
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int n : ns) {
      const double gap = inverse_binomial_moment(1.0, n, 0.5, 1, MomentMode::kExact) -
                         inverse_binomial_moment(1.0, n, 0.5, 1, MomentMode::kApprox);
      const double x = std::log(n), y = std::log(gap);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
    return CheckResult{name, ordered && slope <= -1.18,
                       std::string(ordered ? "exact >= approx" : "exact < approx found") +
                           ", gap slope " + fmt(slope)};
  });
}

CheckResult check_perron_closed_form() {
  const std::string name = "perron_closed_form";
  return guarded(name, [&] {
    const SbmParams laws[] = {
        SbmParams::symmetric(15, 0.8, 0.1), {10, 20, 0.7, 0.5, 0.1, 0.2},
        {5, 30, 0.9, 0.3, 0.05, 0.15}, {25, 8, 0.4, 0.95, 0.3, 0.02}};
    double worst = 0.0;
    for (const SbmParams& law : laws) {
      const Vector iterated = perron_vector(expected_combination(law).dense(), 1e-14);
      worst = std::max(worst, (iterated - expected_perron_vector(law)).cwiseAbs().maxCoeff());
    }
    return CheckResult{name, worst <= 1e-9, "max deviation " + fmt(worst)};
  });
}

CheckResult check_delta_interpolation(std::uint64_t seed, long steps) {
  const std::string name = "delta_interpolation";
  return guarded(name, [&] {
    const Network network = sample_sbm(SbmParams::symmetric(10, 0.6, 0.2), seed);
    const LikelihoodProfile profile =
        random_multinomial_profile(network.clusters, 3, 5, derive_seed(seed, seed_domain::kProfile, 1));
    double worst = 0.0;
    for (double delta : {0.05, 0.3, 0.8}) {
      RunOptions options;
      options.horizon = steps;
      options.seed = seed + 1;
      Matrix prior;
      simulate(network, profile, Strategy::adaptive(delta), options,
               [&](const StepView& step) {
                 if (step.iteration > 0) {
                   for (int k = 0; k < network.size(); ++k) {
                     const auto ll = profile.log_likelihoods(k, step.observations[k]);
                     for (int h = 1; h < profile.hypotheses(); ++h) {
                       const double expected =
                           delta * (ll[h] - ll[0]) + (1 - delta) * (prior(h, k) - prior(0, k));
                       const double actual = step.log_psi(h, k) - step.log_psi(0, k);
                       worst = std::max(worst, std::abs(actual - expected));
                     }
                   }
                 }
                 prior = step.log_mu;
               });
    }
    return CheckResult{name, worst <= 1e-12, "max deviation " + fmt(worst)};
  });
}

CheckResult check_inverse_round_trip(std::uint64_t seed) {
  const std::string name = "inverse_round_trip";
  return guarded(name, [&] {
    double worst = 0.0;
    bool minimal = true;
    const std::vector<double> grid = delta_grid(0.025);
    for (int s = 0; s < 20; ++s) {
      const std::uint64_t sub = derive_seed(seed, seed_domain::kSynthetic, 100 + s);
      const Network network = sample_sbm(SbmParams::symmetric(8, 0.7, 0.2), sub);
      Rng rng(sub);
      Vector c(network.size()), initial(network.size());
      for (int k = 0; k < network.size(); ++k) {
        c[k] = 2.0 * rng.uniform() - 1.0;
        initial[k] = 20.0 * (2.0 * rng.uniform() - 1.0);
      }
      const double delta = 0.5;
      const BeliefSeries series(noiseless_series(network.combination, c, delta, 13, initial));
      const Vector est = estimate_log_likelihoods(series, network.combination, delta);
      worst = std::max(worst, (est - c).cwiseAbs().maxCoeff());
      const double at_truth = fit_error(series, network.combination, delta, est);
      for (double d : grid) {
        const Vector e = estimate_log_likelihoods(series, network.combination, d);
        if (fit_error(series, network.combination, d, e) < at_truth) minimal = false;
      }
    }
    return CheckResult{name, worst <= 1e-10 && minimal,
                       "max estimate error " + fmt(worst) +
                           (minimal ? ", fit error minimal at true delta"
                                    : ", fit error not minimal at true delta")};
  });
}

CheckResult check_scan_delta(std::uint64_t seed, int seeds) {
  const std::string name = "scan_delta";
  return guarded(name, [&] {
    const SyntheticSeriesSpec spec;
    const std::vector<double> grid = delta_grid(0.025);
    int hits = 0;
    for (int s = 0; s < seeds; ++s) {
      const SyntheticSeries synthetic = synthetic_asl_series(spec, seed + s);
      const DeltaScan scan =
          scan_delta(synthetic.series, synthetic.network.combination, grid, false);
      if (std::abs(scan.best_delta - spec.delta) <= 0.05 + 1e-12) ++hits;
    }
    return CheckResult{name, hits >= 0.9 * seeds,
                       std::to_string(hits) + "/" + std::to_string(seeds) +
                           " argmins within 0.05 of " + fmt(spec.delta)};
  });
}

CheckResult check_expected_matrix_trend() {
  const std::string name = "expected_matrix_trend";
  return guarded(name, [&] {
    std::vector<double> gaps;
    for (int n : {10, 20, 40}) {
      const SbmParams law = SbmParams::symmetric(n, 0.8, 0.1);
      const Matrix exact = exact_expected_combination(BlockModel::from(law));
      const Matrix abar = expected_combination(law).dense();
      gaps.push_back(((exact - abar).array() / abar.array()).abs().maxCoeff());
    }
    const bool shrinking = gaps[1] < gaps[0] && gaps[2] < gaps[1];
    return CheckResult{name, shrinking,
                       "max relative gap " + fmt(gaps[0]) + ", " + fmt(gaps[1]) + ", " +
                           fmt(gaps[2]) + " at n = 10, 20, 40"};
  });
}

CheckResult check_steady_state_closed_form() {
  const std::string name = "steady_state_closed_form";
  return guarded(name, [&] {
    double worst = 0.0;
    const double laws[][2] = {{0.8, 0.1}, {0.25, 0.1}, {0.6, 0.3}};
    for (const auto& law : laws) {
      const SbmParams params = SbmParams::symmetric(15, law[0], law[1]);
      const BlockModel model = BlockModel::from(params);
      const LikelihoodProfile profile = bernoulli_pair_profile(model.labels(), {0, 1}, 0.1, 0.5);
      const InformativenessReport info = cluster_informativeness(profile, model.labels());
      for (double delta : {0.01, 0.05, 0.1, 0.3, 0.7}) {
        const RhoPrediction series = expected_rho(params, profile, delta, {0, 1}, 1e-12);
        const ClusterPair closed =
            symmetric_rho_closed_form(info.d0, info.d1, law[0], law[1], delta);
        for (int k = 0; k < params.size(); ++k) {
          const double target = k < params.n0 ? closed.cluster0 : closed.cluster1;
          worst = std::max(worst, std::abs(series.per_agent[k] - target));
        }
      }
    }
    return CheckResult{name, worst <= 1e-9, "max deviation " + fmt(worst)};
  });
}

std::vector<CheckResult> run_verify_suite(std::uint64_t seed) {
  return {check_simplex_conservation(seed),
          check_power_identity(),
          check_inverse_binomial(),
          check_perron_closed_form(),
          check_delta_interpolation(seed),
          check_inverse_round_trip(seed),
          check_scan_delta(seed),
          check_expected_matrix_trend(),
          check_steady_state_closed_form()};
}

nlohmann::json to_json(const std::vector<CheckResult>& results) {
  nlohmann::json checks = nlohmann::json::array();
  bool all = true;
  for (const auto& r : results) {
    checks.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    all = all && r.passed;
  }
  return {{"passed", all}, {"checks", checks}};
}

}  // namespace hetsl
