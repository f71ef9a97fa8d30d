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

// Closed-form and series quantities: network divergence, consensus set,
// steady-state expected log-belief ratios, step-size thresholds and the
// exact-recovery bound.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetsl/learning.hpp"
#include "hetsl/models.hpp"
#include "hetsl/sbm_graph.hpp"

namespace hetsl {

// E nu_l(theta, theta') = D(L_l(theta*_l) || L_l(theta')) -
// D(L_l(theta*_l) || L_l(theta)) for every agent.
Vector expected_log_likelihood_ratio(const LikelihoodProfile& profile,
                                     int theta, int theta_prime);

// K(theta, theta') = sum_k u_k E nu_k(theta, theta').
double network_divergence(const LikelihoodProfile& profile, const Vector& perron,
                          int theta, int theta_prime);

struct ConsensusSet {
  std::vector<int> hypotheses;   // minimizers, ascending
  std::vector<double> objective; // sum_k u_k D(L_k(theta*_k) || L_k(theta))
};

ConsensusSet optimal_hypothesis_set(const LikelihoodProfile& profile,
                                    const Vector& perron, double tie_tol = 1e-12);

// Law of the combination matrix used by expected_rho: a two-block SBM
// (powers of the expected matrix Abar) or a fixed matrix.
using CombinationLaw = std::variant<SbmParams, Matrix>;

enum class BeliefKind { kPrivate, kPublic };

struct RhoPrediction {
  Vector per_agent;        // nats
  long truncation = 0;     // number of series terms summed
  double truncation_tol = 0.0;
  double delta = 0.0;
  HypothesisPair pair;
  BeliefKind kind = BeliefKind::kPrivate;
  std::string residual_note;
};

// Steady-state E log(mu_k(theta)/mu_k(theta')) under adaptive learning:
//   delta sum_l sum_{t>=0} (1-delta)^t [M^{t+1}]_{lk} E nu_l
// (M^t for public beliefs), truncated once (1-delta)^T max|E nu| / delta
// drops below truncation_tol. M is Abar for an SBM law.
RhoPrediction expected_rho(const CombinationLaw& law,
                           const LikelihoodProfile& profile, double delta,
                           HypothesisPair pair, double truncation_tol = 1e-10,
                           BeliefKind kind = BeliefKind::kPrivate);

// Same quantity in closed form, delta E nu^T M (I - (1-delta) M)^{-1}.
Vector expected_rho_resolvent(const Matrix& combination,
                              const LikelihoodProfile& profile, double delta,
                              HypothesisPair pair,
                              BeliefKind kind = BeliefKind::kPrivate);

// Symmetric-community steady-state means:
//   (d0 - d1)/2 +/- delta (d0 + d1)(p - q) / (2 (p + q - (1-delta)(p - q)))
struct ClusterPair {
  double cluster0 = 0.0;
  double cluster1 = 0.0;
};
ClusterPair symmetric_rho_closed_form(double d0, double d1, double p, double q,
                                      double delta);

// Smallest delta making both symmetric-community means take their own
// cluster's sign.
double symmetric_delta_threshold(double d0, double d1, double p, double q);

struct AsymmetricThresholds {
  double delta_c0 = 0.0;
  double delta_c1 = 0.0;
  double delta0 = 0.0;
  // q1 n1 r1 d1 - q0 n0 r0 d0: positive when theta1 dominates the network.
  double prevalence = 0.0;
  bool feasible = true;  // delta0 < 1
};

// Throws PreconditionFailed naming the violated inequality when
// p0 n0 d0 - q1 n1 d1 > 0 or p1 n1 d1 - q0 n0 d0 > 0 fails.
AsymmetricThresholds asymmetric_delta_thresholds(const SbmParams& params,
                                                 double d0, double d1);

struct ThresholdReport {
  SbmParams params;
  double d0 = 0.0;
  double d1 = 0.0;
  std::optional<double> symmetric;  // set when the law is symmetric
  bool symmetric_feasible = false;
  bool precondition_holds = false;
  std::string failed_inequality;
  std::optional<AsymmetricThresholds> asymmetric;
};

ThresholdReport threshold_report(const SbmParams& params, double d0, double d1);

struct RecoveryBound {
  bool infeasible = false;
  double margin = 0.0;  // |sqrt(n p / log n) - sqrt(n q / log n)|
};

// n is the per-cluster size.
RecoveryBound exact_recovery_infeasible(int n_per_cluster, double p, double q);

nlohmann::json to_json(const RhoPrediction& prediction);
nlohmann::json to_json(const ThresholdReport& report);
nlohmann::json to_json(const SbmParams& params);

}  // namespace hetsl
