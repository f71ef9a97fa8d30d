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

// Social-learning recursions in the log domain: local (Bayesian or
// adaptive) update, geometric combination and state estimation, plus the
// seeded run loop that produces traces.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetsl/models.hpp"
#include "hetsl/sbm_graph.hpp"

namespace hetsl {

// Log-beliefs, H x N: column k holds agent k's log-belief vector.
struct BeliefState {
  Matrix log_mu;
  Matrix log_psi;
  long iteration = 0;

  static BeliefState uniform(int agents, int hypotheses);
  int agents() const { return static_cast<int>(log_mu.cols()); }
  int hypotheses() const { return static_cast<int>(log_mu.rows()); }
};

// psi_k(theta) proportional to L_k(zeta_k | theta) mu_k(theta).
Matrix bayesian_update(const BeliefState& state, std::span<const int> observations,
                       const LikelihoodProfile& profile);

// psi_k(theta) proportional to L_k^delta(zeta_k | theta) mu_k^{1-delta}(theta).
// Throws DeltaOutOfRange unless 0 < delta < 1.
Matrix asl_update(const BeliefState& state, std::span<const int> observations,
                  const LikelihoodProfile& profile, double delta);

// mu_k(theta) proportional to prod_l psi_l(theta)^{a_lk}.
Matrix geometric_combine(const Matrix& log_public, const Matrix& combination);

// argmax per column; ties go to the lowest hypothesis index.
std::vector<int> estimate_state(const Matrix& log_beliefs);

struct Strategy {
  enum class Kind { kTraditional, kAdaptive };
  Kind kind = Kind::kTraditional;
  double delta = 1.0;

  static Strategy traditional() { return {Kind::kTraditional, 1.0}; }
  static Strategy adaptive(double delta);
  std::string name() const;
};

enum class Estimator { kPrivate, kPublic };  // estimate from mu or psi
std::string to_string(Estimator estimator);
Estimator parse_estimator(const std::string& text);

struct HypothesisPair {
  int first = 0;
  int second = 1;
};

struct RunOptions {
  long horizon = 0;
  std::uint64_t seed = 0;
  HypothesisPair pair;
  Estimator estimator = Estimator::kPrivate;
  bool record_observations = false;
  bool parallel_kernels = false;
  // H x N initial private log-beliefs (normalized on entry); uniform if unset.
  std::optional<Matrix> initial_log_mu;
};

// Per-iteration callback. Iteration 0 is the initial state (no observations,
// psi equal to mu).
struct StepView {
  long iteration = 0;
  const Matrix& log_mu;
  const Matrix& log_psi;
  std::span<const int> observations;
};
using StepObserver = std::function<void(const StepView&)>;

// Runs the recursion and streams every state to `observer`. Agent k draws its
// observations from its own substream derived from (seed, k).
void simulate(const Network& network, const LikelihoodProfile& profile,
              const Strategy& strategy, const RunOptions& options,
              const StepObserver& observer);

struct TraceMetadata {
  std::uint64_t seed = 0;
  std::string strategy;
  double delta = 0.0;
  HypothesisPair pair;
  Estimator estimator = Estimator::kPrivate;
  long horizon = 0;
  long burn_in = 0;
  nlohmann::json network;       // law or file the network came from
  std::string profile_ref;      // file path or generator description
  std::string version;
};

// Row-major [iteration][agent] records for iterations 0..horizon.
struct Trace {
  int agents = 0;
  long horizon = 0;
  std::vector<int> clusters;
  std::vector<double> psi_log_ratio;  // log psi(first) - log psi(second)
  std::vector<double> mu_log_ratio;   // log mu(first) - log mu(second)
  std::vector<int> estimates;
  std::vector<int> observations;      // empty unless recorded; -1 at iter 0
  TraceMetadata metadata;

  long iterations() const { return horizon + 1; }
  double psi_ratio(long iter, int agent) const {
    return psi_log_ratio[static_cast<std::size_t>(iter) * agents + agent];
  }
  double mu_ratio(long iter, int agent) const {
    return mu_log_ratio[static_cast<std::size_t>(iter) * agents + agent];
  }
  int estimate(long iter, int agent) const {
    return estimates[static_cast<std::size_t>(iter) * agents + agent];
  }
};

Trace run(const Network& network, const LikelihoodProfile& profile,
          const Strategy& strategy, const RunOptions& options);

// Trailing mean over M samples; the first M-1 outputs are NaN.
std::vector<double> windowed_mean(std::span<const double> series, int window);

// Per agent, the windowed mean of the public log-belief ratio series.
std::vector<std::vector<double>> windowed_mean_log_ratio(const Trace& trace,
                                                         int window);

// CSV: iter,agent,cluster,log_ratio,estimate[,obs]
void write_trace_csv(std::ostream& out, const Trace& trace);
nlohmann::json trace_metadata_json(const TraceMetadata& metadata);

}  // namespace hetsl
