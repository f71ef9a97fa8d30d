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

#include "hetsl/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hetsl/errors.hpp"

namespace hetsl {
namespace {

void check_perron(const LikelihoodProfile& profile, const Vector& perron) {
  if (perron.size() != profile.agents())
    throw Error(ErrorCode::kInvalidArgument,
                "Perron vector length differs from the agent count");
  if ((perron.array() <= 0.0).any() || std::abs(perron.sum() - 1.0) > 1e-9)
    throw Error(ErrorCode::kInvalidArgument,
                "Perron vector must be positive and sum to one");
}

void check_hypothesis(const LikelihoodProfile& profile, int h) {
  if (h < 0 || h >= profile.hypotheses())
    throw Error(ErrorCode::kInvalidArgument,
                "hypothesis index " + std::to_string(h) + " out of range");
}

long series_terms(double delta, double max_abs, double tol) {
  if (max_abs == 0.0) return 1;
  const double target = tol * delta / max_abs;
  if (target >= 1.0) return 1;
  const double terms = std::ceil(std::log(target) / std::log1p(-delta));
  if (terms > 5e8)
    throw Error(ErrorCode::kInvalidArgument,
                "series would need more than 5e8 terms; raise truncation_tol");
  return std::max(1L, static_cast<long>(terms));
}

}  // namespace

Vector expected_log_likelihood_ratio(const LikelihoodProfile& profile,
                                     int theta, int theta_prime) {
  check_hypothesis(profile, theta);
  check_hypothesis(profile, theta_prime);
  Vector out(profile.agents());
  for (int k = 0; k < profile.agents(); ++k) {
    const auto truth = profile.distribution(k, profile.true_state(k));
    out(k) = kl_divergence(truth, profile.distribution(k, theta_prime)) -
             kl_divergence(truth, profile.distribution(k, theta));
  }
  return out;
}

double network_divergence(const LikelihoodProfile& profile, const Vector& perron,
                          int theta, int theta_prime) {
  check_perron(profile, perron);
  return perron.dot(expected_log_likelihood_ratio(profile, theta, theta_prime));
}

ConsensusSet optimal_hypothesis_set(const LikelihoodProfile& profile,
                                    const Vector& perron, double tie_tol) {
  check_perron(profile, perron);
  const Eigen::MatrixXd table = divergence_table(profile);
  ConsensusSet out;
  out.objective.resize(profile.hypotheses());
  double best = std::numeric_limits<double>::infinity();
  for (int h = 0; h < profile.hypotheses(); ++h) {
    out.objective[h] = perron.dot(table.col(h));
    best = std::min(best, out.objective[h]);
  }
  for (int h = 0; h < profile.hypotheses(); ++h)
    if (out.objective[h] - best <= tie_tol) out.hypotheses.push_back(h);
  return out;
}

RhoPrediction expected_rho(const CombinationLaw& law,
                           const LikelihoodProfile& profile, double delta,
                           HypothesisPair pair, double truncation_tol,
                           BeliefKind kind) {
  if (!(delta > 0.0 && delta < 1.0))
    throw Error(ErrorCode::kDeltaOutOfRange,
                "step size must lie in (0, 1), got " + std::to_string(delta));
  if (!(truncation_tol > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "truncation_tol must be positive");
  const Vector nu = expected_log_likelihood_ratio(profile, pair.first, pair.second);
  const long terms = series_terms(delta, nu.cwiseAbs().maxCoeff(), truncation_tol);
  const double keep = 1.0 - delta;

  RhoPrediction out;
  out.truncation = terms;
  out.truncation_tol = truncation_tol;
  out.delta = delta;
  out.pair = pair;
  out.kind = kind;
  out.per_agent = Vector::Zero(profile.agents());

  if (const auto* params = std::get_if<SbmParams>(&law)) {
    if (params->size() != profile.agents())
      throw Error(ErrorCode::kMismatchedConfig,
                  "SBM size differs from the profile's agent count");
    const ExpectedMatrix abar = expected_combination(*params);
    // Abar^t is block constant for t >= 1, and n_r * Abar_{rc} is a 2x2
    // column-stochastic matrix whose powers track the block values.
    Eigen::Matrix2d reduced;
    reduced << params->n0 * abar.intra0, params->n0 * abar.cross01,
        params->n1 * abar.cross10, params->n1 * abar.intra1;
    // sum_{l in r} [Abar^s]_{lk} nu_l = [reduced^s]_{r,c(k)} * mean_r(nu)
    Eigen::RowVector2d cluster_nu(nu.head(params->n0).mean(),
                                  nu.tail(params->n1).mean());
    Eigen::RowVector2d z = cluster_nu * reduced;  // t + 1 = 1
    Eigen::RowVector2d acc = Eigen::RowVector2d::Zero();
    double coef = delta;
    if (kind == BeliefKind::kPrivate) {
      for (long t = 0; t < terms; ++t) {
        acc += coef * z;
        z = z * reduced;
        coef *= keep;
      }
      out.per_agent.head(params->n0).setConstant(acc(0));
      out.per_agent.tail(params->n1).setConstant(acc(1));
    } else {
      // t = 0 contributes the identity: delta * nu_k.
      coef *= keep;
      for (long t = 1; t < terms; ++t) {
        acc += coef * z;
        z = z * reduced;
        coef *= keep;
      }
      out.per_agent = delta * nu;
      out.per_agent.head(params->n0).array() += acc(0);
      out.per_agent.tail(params->n1).array() += acc(1);
    }
    out.residual_note =
        "powers of the expected matrix; E[A^t] differs from Abar^t by "
        "O(min(n0,n1)^(-4/3)), giving O(n^(-1/3)) slack in the mean";
  } else {
    const Matrix& m = std::get<Matrix>(law);
    if (m.rows() != profile.agents() || m.cols() != profile.agents())
      throw Error(ErrorCode::kMismatchedConfig,
                  "combination matrix does not match the agent count");
    Eigen::RowVectorXd w = nu.transpose();
    if (kind == BeliefKind::kPrivate) w = w * m;
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(m.cols());
    Eigen::RowVectorXd next(m.cols());
    double coef = delta;
    for (long t = 0; t < terms; ++t) {
      acc += coef * w;
      next.noalias() = w * m;
      w.swap(next);
      coef *= keep;
    }
    out.per_agent = acc.transpose();
    out.residual_note = "fixed combination matrix; truncation error only";
  }
  return out;
}

Vector expected_rho_resolvent(const Matrix& combination,
                              const LikelihoodProfile& profile, double delta,
                              HypothesisPair pair, BeliefKind kind) {
  if (!(delta > 0.0 && delta < 1.0))
    throw Error(ErrorCode::kDeltaOutOfRange,
                "step size must lie in (0, 1), got " + std::to_string(delta));
  const auto n = combination.rows();
  if (n != profile.agents() || combination.cols() != n)
    throw Error(ErrorCode::kMismatchedConfig,
                "combination matrix does not match the agent count");
  const Vector nu = expected_log_likelihood_ratio(profile, pair.first, pair.second);
  const Matrix system =
      (Matrix::Identity(n, n) - (1.0 - delta) * combination).transpose();
  const Vector rhs = kind == BeliefKind::kPrivate
                         ? Vector(delta * combination.transpose() * nu)
                         : Vector(delta * nu);
  return system.partialPivLu().solve(rhs);
}

ClusterPair symmetric_rho_closed_form(double d0, double d1, double p, double q,
                                      double delta) {
  const double gap = p - q;
  const double spread =
      0.5 * delta * (d0 + d1) * gap / (p + q - (1.0 - delta) * gap);
  const double base = 0.5 * (d0 - d1);
  return {base + spread, base - spread};
}

double symmetric_delta_threshold(double d0, double d1, double p, double q) {
  if (!(p > q))
    throw Error(ErrorCode::kInvalidRegime, "threshold requires p > q");
  if (d0 <= 0.0 || d1 <= 0.0)
    throw Error(ErrorCode::kZeroInformativeness,
                "both clusters need positive informativeness");
  const double ratio = std::max((d1 - d0) / d0, (d0 - d1) / d1);
  return std::max(0.0, ratio * q / (p - q));
}

AsymmetricThresholds asymmetric_delta_thresholds(const SbmParams& params,
                                                 double d0, double d1) {
  params.validate();
  const double n0 = params.n0, n1 = params.n1;
  const double internal0 = params.p0 * n0 * d0 - params.q1 * n1 * d1;
  const double internal1 = params.p1 * n1 * d1 - params.q0 * n0 * d0;
  if (!(internal0 > 0.0))
    throw Error(ErrorCode::kPreconditionFailed, "p0*n0*d0 - q1*n1*d1 > 0 fails");
  if (!(internal1 > 0.0))
    throw Error(ErrorCode::kPreconditionFailed, "p1*n1*d1 - q0*n0*d0 > 0 fails");

  const double r0 = params.p0 * n0 + params.q1 * n1;
  const double r1 = params.q0 * n0 + params.p1 * n1;
  const double weight0 = params.q0 * n0 * r0;
  const double weight1 = params.q1 * n1 * r1;
  const double total = weight0 + weight1;

  AsymmetricThresholds out;
  out.prevalence = weight1 * d1 - weight0 * d0;
  if (out.prevalence > 0.0) {
    const double pull = r0 * out.prevalence;
    out.delta_c0 = pull / (internal0 * total + pull);
  } else if (out.prevalence < 0.0) {
    const double pull = -r1 * out.prevalence;
    out.delta_c1 = pull / (internal1 * total + pull);
  }
  out.delta0 = std::max(out.delta_c0, out.delta_c1);
  out.feasible = out.delta0 < 1.0;
  return out;
}

ThresholdReport threshold_report(const SbmParams& params, double d0, double d1) {
  ThresholdReport report;
  report.params = params;
  report.d0 = d0;
  report.d1 = d1;
  const bool symmetric = params.n0 == params.n1 && params.p0 == params.p1 &&
                         params.q0 == params.q1;
  if (symmetric && params.p0 > params.q0 && d0 > 0.0 && d1 > 0.0) {
    report.symmetric = symmetric_delta_threshold(d0, d1, params.p0, params.q0);
    report.symmetric_feasible = *report.symmetric < 1.0;
  }
  try {
    report.asymmetric = asymmetric_delta_thresholds(params, d0, d1);
    report.precondition_holds = true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kPreconditionFailed) throw;
    report.precondition_holds = false;
    const std::string what = e.what();
    report.failed_inequality = what.substr(what.find(": ") + 2);
  }
  return report;
}

RecoveryBound exact_recovery_infeasible(int n_per_cluster, double p, double q) {
  if (n_per_cluster < 2)
    throw Error(ErrorCode::kInvalidArgument, "cluster size must be >= 2");
  const double n = n_per_cluster;
  const double log_n = std::log(n);
  RecoveryBound out;
  out.margin = std::abs(std::sqrt(n * p / log_n) - std::sqrt(n * q / log_n));
  out.infeasible = out.margin < std::sqrt(2.0);
  return out;
}

nlohmann::json to_json(const SbmParams& params) {
  return {{"n0", params.n0}, {"n1", params.n1}, {"p0", params.p0},
          {"p1", params.p1}, {"q0", params.q0}, {"q1", params.q1}};
}

nlohmann::json to_json(const RhoPrediction& prediction) {
  std::vector<double> values(prediction.per_agent.data(),
                             prediction.per_agent.data() + prediction.per_agent.size());
  return {{"delta", prediction.delta},
          {"pair", {prediction.pair.first, prediction.pair.second}},
          {"belief", prediction.kind == BeliefKind::kPrivate ? "mu" : "psi"},
          {"truncation_terms", prediction.truncation},
          {"truncation_tol", prediction.truncation_tol},
          {"residual", prediction.residual_note},
          {"per_agent", values}};
}

nlohmann::json to_json(const ThresholdReport& report) {
  nlohmann::json out{{"params", to_json(report.params)},
                     {"d0", report.d0},
                     {"d1", report.d1},
                     {"precondition_holds", report.precondition_holds}};
  if (report.symmetric) {
    out["symmetric_delta"] = *report.symmetric;
    out["symmetric_feasible"] = report.symmetric_feasible;
  }
  if (!report.precondition_holds) out["failed_inequality"] = report.failed_inequality;
  if (report.asymmetric) {
    const auto& a = *report.asymmetric;
    out["asymmetric"] = {{"delta_c0", a.delta_c0},
                         {"delta_c1", a.delta_c1},
                         {"delta0", a.delta0},
                         {"prevalence", a.prevalence},
                         {"feasible", a.feasible}};
  }
  return out;
}

}  // namespace hetsl
