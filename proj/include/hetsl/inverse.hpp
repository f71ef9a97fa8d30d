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

// Inverse analysis of public-belief sequences: recover expected
// log-likelihood ratios under an assumed step size, score how well the
// adaptive recursion explains held-out steps, and scan the step size.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "hetsl/learning.hpp"
#include "hetsl/sbm_graph.hpp"

namespace hetsl {

// Public log-belief ratios, steps x agents, with a train/validation split:
// rows [0, split) train, rows [split, steps) validate.
class BeliefSeries {
 public:
  // split < 0 selects the first half (steps / 2).
  BeliefSeries(Matrix values, int split = -1);

  // Public ratios of iterations 1..horizon (iteration 0 is the prior, not
  // an update output).
  static BeliefSeries from_trace(const Trace& trace, int split = -1);

  const Matrix& values() const { return values_; }
  int steps() const { return static_cast<int>(values_.rows()); }
  int agents() const { return static_cast<int>(values_.cols()); }
  int split() const { return split_; }

 private:
  Matrix values_;
  int split_ = 0;
};

// Reads either a trace CSV (header starting "iter,") or a generic
// "step,agent,log_ratio" CSV. Steps missing for an agent repeat that agent's
// previous value.
BeliefSeries read_series_csv(std::istream& in, int split = -1);

// Per agent: mean over train steps i = 1..split-1 of
//   (x_{i,k} - (1-delta) sum_l a_lk x_{i-1,l}) / delta.
Vector estimate_log_likelihoods(const BeliefSeries& series,
                                const Matrix& combination, double delta);

// Root mean square over agents of the validation residual
//   mean x_{i,k} - (1-delta) sum_l a_lk mean x_{i-1,l} - delta c_k,
// with both means over validation steps i in [split, steps).
double fit_error(const BeliefSeries& series, const Matrix& combination,
                 double delta, const Vector& estimates);

// The Bayesian-update counterpart (likelihood and prior both weighted 1).
Vector estimate_log_likelihoods_traditional(const BeliefSeries& series,
                                            const Matrix& combination);
double fit_error_traditional(const BeliefSeries& series,
                             const Matrix& combination, const Vector& estimates);

struct ScanRow {
  double delta = 0.0;
  double error = 0.0;
};

struct DeltaScan {
  std::vector<ScanRow> rows;
  double best_delta = 0.0;
  double best_error = 0.0;
  std::optional<double> traditional_error;
};

DeltaScan scan_delta(const BeliefSeries& series, const Matrix& combination,
                     const std::vector<double>& grid, bool include_traditional);

// delta_step, 2*delta_step, ... strictly below 1.
std::vector<double> delta_grid(double step);

// x_{i,k} = delta c_k + (1-delta) sum_l a_lk x_{i-1,l} with
// x_{-1} = initial: the adaptive recursion driven by expected log-likelihood
// ratios instead of sampled observations.
Matrix noiseless_series(const Matrix& combination, const Vector& expected_llr,
                        double delta, int steps, const Vector& initial);

struct SyntheticSeries {
  BeliefSeries series;
  Network network;
};

// Adaptive learning on a sampled two-block SBM with Bernoulli likelihoods,
// started from cluster-coherent private log-ratios of +/- prior_magnitude
// (sign per cluster drawn from the seed). The strong prior gives the
// transient that makes the step size identifiable from short sequences.
struct SyntheticSeriesSpec {
  SbmParams params = SbmParams::symmetric(15, 0.8, 0.1);
  double p_theta0 = 0.1;
  double p_theta1 = 0.5;
  double delta = 0.5;
  int steps = 13;
  int split = 6;
  double prior_magnitude = 20.0;
};

SyntheticSeries synthetic_asl_series(const SyntheticSeriesSpec& spec,
                                     std::uint64_t seed);

}  // namespace hetsl
