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

#include "hetsl/learning.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "hetsl/errors.hpp"
#include "hetsl/kernels.hpp"
#include "hetsl/rng.hpp"

namespace hetsl {
namespace {

void check_observations(std::span<const int> observations,
                        const LikelihoodProfile& profile, int agents) {
  if (static_cast<int>(observations.size()) != agents ||
      profile.agents() != agents)
    throw Error(ErrorCode::kInvalidArgument,
                "observations, beliefs and profile disagree on agent count");
}

Matrix gather_log_likelihoods(std::span<const int> observations,
                              const LikelihoodProfile& profile) {
  const int h = profile.hypotheses();
  Matrix out(h, static_cast<Eigen::Index>(observations.size()));
  for (std::size_t k = 0; k < observations.size(); ++k) {
    const int symbol = observations[k];
    if (symbol < 0 || symbol >= profile.alphabet())
      throw Error(ErrorCode::kInvalidArgument,
                  "observation outside the alphabet for agent " +
                      std::to_string(k));
    const auto ll = profile.log_likelihoods(static_cast<int>(k), symbol);
    for (int i = 0; i < h; ++i) out(i, static_cast<Eigen::Index>(k)) = ll[i];
  }
  return out;
}

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw Error(ErrorCode::kDeltaOutOfRange,
                "step size must lie in (0, 1), got " + std::to_string(delta));
}

}  // namespace

BeliefState BeliefState::uniform(int agents, int hypotheses) {
  BeliefState state;
  state.log_mu = Matrix::Constant(hypotheses, agents, -std::log(hypotheses));
  state.log_psi = state.log_mu;
  return state;
}

Matrix bayesian_update(const BeliefState& state, std::span<const int> observations,
                       const LikelihoodProfile& profile) {
  check_observations(observations, profile, state.agents());
  Matrix out;
  kernels::adapt_serial(state.log_mu, gather_log_likelihoods(observations, profile),
                        1.0, out);
  return out;
}

Matrix asl_update(const BeliefState& state, std::span<const int> observations,
                  const LikelihoodProfile& profile, double delta) {
  check_delta(delta);
  check_observations(observations, profile, state.agents());
  Matrix out;
  kernels::adapt_serial(state.log_mu, gather_log_likelihoods(observations, profile),
                        delta, out);
  return out;
}

Matrix geometric_combine(const Matrix& log_public, const Matrix& combination) {
  if (combination.rows() != combination.cols() ||
      combination.cols() != log_public.cols())
    throw Error(ErrorCode::kInvalidArgument,
                "combination matrix does not match the number of agents");
  Matrix out;
  kernels::combine_serial(combination, log_public, out);
  return out;
}

std::vector<int> estimate_state(const Matrix& log_beliefs) {
  std::vector<int> out(log_beliefs.cols(), 0);
  for (Eigen::Index k = 0; k < log_beliefs.cols(); ++k) {
    int best = 0;
    for (Eigen::Index h = 1; h < log_beliefs.rows(); ++h)
      if (log_beliefs(h, k) > log_beliefs(best, k)) best = static_cast<int>(h);
    out[k] = best;
  }
  return out;
}

Strategy Strategy::adaptive(double delta) {
  check_delta(delta);
  return {Kind::kAdaptive, delta};
}

std::string Strategy::name() const {
  return kind == Kind::kTraditional ? "traditional" : "asl";
}

std::string to_string(Estimator estimator) {
  return estimator == Estimator::kPrivate ? "mu" : "psi";
}

Estimator parse_estimator(const std::string& text) {
  if (text == "mu") return Estimator::kPrivate;
  if (text == "psi") return Estimator::kPublic;
  throw Error(ErrorCode::kInvalidArgument,
              "estimator must be 'mu' or 'psi', got '" + text + "'");
}

void simulate(const Network& network, const LikelihoodProfile& profile,
              const Strategy& strategy, const RunOptions& options,
              const StepObserver& observer) {
  const int n = network.size();
  const int h = profile.hypotheses();
  if (profile.agents() != n)
    throw Error(ErrorCode::kInvalidArgument,
                "network has " + std::to_string(n) + " agents but profile has " +
                    std::to_string(profile.agents()));
  if (options.horizon < 0)
    throw Error(ErrorCode::kInvalidArgument, "horizon must be >= 0");
  if (options.pair.first < 0 || options.pair.first >= h ||
      options.pair.second < 0 || options.pair.second >= h)
    throw Error(ErrorCode::kInvalidArgument, "recorded hypothesis pair out of range");
  const double weight =
      strategy.kind == Strategy::Kind::kTraditional ? 1.0 : strategy.delta;
  if (strategy.kind == Strategy::Kind::kAdaptive) check_delta(weight);

  Matrix log_mu;
  if (options.initial_log_mu) {
    log_mu = *options.initial_log_mu;
    if (log_mu.rows() != h || log_mu.cols() != n || !log_mu.allFinite())
      throw Error(ErrorCode::kInvalidArgument,
                  "initial beliefs must be a finite H x N matrix");
    kernels::normalize_columns(log_mu);
  } else {
    log_mu = BeliefState::uniform(n, h).log_mu;
  }
  Matrix log_psi = log_mu;
  Matrix log_lik(h, n);
  std::vector<int> observations(n, -1);

  std::vector<Rng> streams;
  streams.reserve(n);
  for (int k = 0; k < n; ++k)
    streams.emplace_back(derive_seed(options.seed, seed_domain::kObservation,
                                     static_cast<std::uint64_t>(k)));

  observer(StepView{0, log_mu, log_psi, {}});
  for (long iter = 1; iter <= options.horizon; ++iter) {
    for (int k = 0; k < n; ++k) {
      const int symbol = sample_observation(profile, k, streams[k]);
      observations[k] = symbol;
      const auto ll = profile.log_likelihoods(k, symbol);
      for (int i = 0; i < h; ++i) log_lik(i, k) = ll[i];
    }
    if (options.parallel_kernels) {
      kernels::adapt_parallel(log_mu, log_lik, weight, log_psi);
      kernels::combine_parallel(network.combination, log_psi, log_mu);
    } else {
      kernels::adapt_serial(log_mu, log_lik, weight, log_psi);
      kernels::combine_serial(network.combination, log_psi, log_mu);
    }
    observer(StepView{iter, log_mu, log_psi, observations});
  }
}

Trace run(const Network& network, const LikelihoodProfile& profile,
          const Strategy& strategy, const RunOptions& options) {
  Trace trace;
  trace.agents = network.size();
  trace.horizon = options.horizon;
  trace.clusters = network.clusters;
  const auto cells = static_cast<std::size_t>(options.horizon + 1) * trace.agents;
  trace.psi_log_ratio.reserve(cells);
  trace.mu_log_ratio.reserve(cells);
  trace.estimates.reserve(cells);
  if (options.record_observations) trace.observations.reserve(cells);

  const int a = options.pair.first;
  const int b = options.pair.second;
  simulate(network, profile, strategy, options, [&](const StepView& step) {
    const Matrix& source =
        options.estimator == Estimator::kPrivate ? step.log_mu : step.log_psi;
    const std::vector<int> estimates = estimate_state(source);
    for (int k = 0; k < trace.agents; ++k) {
      trace.psi_log_ratio.push_back(step.log_psi(a, k) - step.log_psi(b, k));
      trace.mu_log_ratio.push_back(step.log_mu(a, k) - step.log_mu(b, k));
      trace.estimates.push_back(estimates[k]);
      if (options.record_observations)
        trace.observations.push_back(step.observations.empty()
                                         ? -1
                                         : step.observations[k]);
    }
  });

  auto& meta = trace.metadata;
  meta.seed = options.seed;
  meta.strategy = strategy.name();
  meta.delta = strategy.kind == Strategy::Kind::kAdaptive ? strategy.delta : 0.0;
  meta.pair = options.pair;
  meta.estimator = options.estimator;
  meta.horizon = options.horizon;
  return trace;
}

std::vector<double> windowed_mean(std::span<const double> series, int window) {
  if (window < 1)
    throw Error(ErrorCode::kInvalidArgument, "window must be >= 1");
  if (static_cast<std::size_t>(window) > series.size())
    throw Error(ErrorCode::kWindowTooLarge,
                "window " + std::to_string(window) + " exceeds series length " +
                    std::to_string(series.size()));
  std::vector<double> out(series.size(), std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    sum += series[i];
    if (i >= static_cast<std::size_t>(window)) sum -= series[i - window];
    if (i + 1 >= static_cast<std::size_t>(window)) out[i] = sum / window;
  }
  return out;
}

std::vector<std::vector<double>> windowed_mean_log_ratio(const Trace& trace,
                                                         int window) {
  if (window > trace.horizon && window > 1)
    throw Error(ErrorCode::kWindowTooLarge,
                "window " + std::to_string(window) + " exceeds horizon " +
                    std::to_string(trace.horizon));
  std::vector<std::vector<double>> out(trace.agents);
  std::vector<double> series(trace.iterations());
  for (int k = 0; k < trace.agents; ++k) {
    for (long i = 0; i < trace.iterations(); ++i) series[i] = trace.psi_ratio(i, k);
    out[k] = windowed_mean(series, window);
  }
  return out;
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  const bool with_obs = !trace.observations.empty();
  const auto old_precision = out.precision();
  out << std::setprecision(17);
  out << "iter,agent,cluster,log_ratio,estimate";
  if (with_obs) out << ",obs";
  out << '\n';
  for (long i = 0; i < trace.iterations(); ++i)
    for (int k = 0; k < trace.agents; ++k) {
      out << i << ',' << k << ',' << trace.clusters[k] << ','
          << trace.psi_ratio(i, k) << ',' << trace.estimate(i, k);
      if (with_obs) {
        const int obs = trace.observations[static_cast<std::size_t>(i) * trace.agents + k];
        out << ',';
        if (obs >= 0) out << obs;
      }
      out << '\n';
    }
  out.precision(old_precision);
}

nlohmann::json trace_metadata_json(const TraceMetadata& metadata) {
  return nlohmann::json{
      {"seed", metadata.seed},
      {"strategy", metadata.strategy},
      {"delta", metadata.delta},
      {"pair", {metadata.pair.first, metadata.pair.second}},
      {"estimator", to_string(metadata.estimator)},
      {"horizon", metadata.horizon},
      {"burn_in", metadata.burn_in},
      {"network", metadata.network},
      {"profile", metadata.profile_ref},
      {"version", metadata.version},
  };
}

}  // namespace hetsl
