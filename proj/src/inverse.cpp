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

#include "hetsl/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>
#include <string>

#include "hetsl/errors.hpp"
#include "hetsl/rng.hpp"

namespace hetsl {
namespace {

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw Error(ErrorCode::kDeltaOutOfRange,
                "step size must lie in (0, 1), got " + std::to_string(delta));
}

void check_combination(const BeliefSeries& series, const Matrix& combination) {
  if (combination.rows() != series.agents() || combination.cols() != series.agents())
    throw Error(ErrorCode::kMismatchedConfig,
                "combination matrix does not match the series' agent count");
}

// neighbors(i, k) = sum_l a_lk x_{i,l}
Matrix neighbor_average(const Matrix& values, const Matrix& combination) {
  return values * combination;
}

Vector estimate(const BeliefSeries& series, const Matrix& combination,
                double likelihood_weight, double prior_weight) {
  check_combination(series, combination);
  const int split = series.split();
  if (split < 2)
    throw Error(ErrorCode::kInsufficientSteps,
                "training segment needs at least two steps");
  const Matrix& x = series.values();
  const Matrix s = neighbor_average(x.topRows(split - 1), combination);
  const Matrix innovations = x.middleRows(1, split - 1) - prior_weight * s;
  return innovations.colwise().mean().transpose() / likelihood_weight;
}

double score(const BeliefSeries& series, const Matrix& combination,
             double likelihood_weight, double prior_weight,
             const Vector& estimates) {
  check_combination(series, combination);
  if (estimates.size() != series.agents())
    throw Error(ErrorCode::kInvalidArgument, "one estimate per agent required");
  const int split = series.split();
  const int count = series.steps() - split;
  if (count < 1 || split < 1)
    throw Error(ErrorCode::kInsufficientSteps, "validation segment is empty");
  const Matrix& x = series.values();
  const Vector current = x.middleRows(split, count).colwise().mean().transpose();
  const Vector lagged = x.middleRows(split - 1, count).colwise().mean().transpose();
  const Vector residual = current - prior_weight * combination.transpose() * lagged -
                          likelihood_weight * estimates;
  return std::sqrt(residual.squaredNorm() / static_cast<double>(residual.size()));
}

}  // namespace

BeliefSeries::BeliefSeries(Matrix values, int split) : values_(std::move(values)) {
  if (values_.rows() < 2 || values_.cols() < 1)
    throw Error(ErrorCode::kInsufficientSteps,
                "a series needs at least two steps and one agent");
  if (!values_.allFinite())
    throw Error(ErrorCode::kInvalidArgument, "series contains non-finite values");
  split_ = split < 0 ? static_cast<int>(values_.rows() / 2) : split;
  if (split_ < 1 || split_ >= values_.rows())
    throw Error(ErrorCode::kInsufficientSteps,
                "split must satisfy 1 <= split < steps");
}

BeliefSeries BeliefSeries::from_trace(const Trace& trace, int split) {
  if (trace.horizon < 2)
    throw Error(ErrorCode::kInsufficientSteps, "trace is shorter than two updates");
  Matrix values(trace.horizon, trace.agents);
  for (long i = 1; i <= trace.horizon; ++i)
    for (int k = 0; k < trace.agents; ++k) values(i - 1, k) = trace.psi_ratio(i, k);
  return BeliefSeries(std::move(values), split);
}

BeliefSeries read_series_csv(std::istream& in, int split) {
  std::string header;
  if (!std::getline(in, header))
    throw Error(ErrorCode::kParse, "series CSV is empty");
  std::vector<std::string> columns;
  {
    std::istringstream hs(header);
    for (std::string col; std::getline(hs, col, ',');) {
      col.erase(std::remove_if(col.begin(), col.end(), ::isspace), col.end());
      columns.push_back(col);
    }
  }
  const bool trace_format = !columns.empty() && columns[0] == "iter";
  auto column = [&](const std::string& name) {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end())
      throw Error(ErrorCode::kParse, "series CSV lacks column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
  };
  const std::size_t step_col = column(trace_format ? "iter" : "step");
  const std::size_t agent_col = column("agent");
  const std::size_t value_col = column("log_ratio");

  std::map<long, std::map<int, double>> cells;
  int max_agent = -1;
  std::string line;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    for (std::string f; std::getline(ls, f, ',');) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    const std::size_t needed = std::max({step_col, agent_col, value_col}) + 1;
    if (fields.size() < needed)
      throw Error(ErrorCode::kParse, "too few fields on line " + std::to_string(line_no));
    try {
      const long step = std::stol(fields[step_col]);
      const int agent = std::stoi(fields[agent_col]);
      const double value = std::stod(fields[value_col]);
      if (agent < 0) throw std::invalid_argument("negative agent");
      if (trace_format && step == 0) continue;
      cells[step][agent] = value;
      max_agent = std::max(max_agent, agent);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, "bad value on line " + std::to_string(line_no));
    }
  }
  if (cells.empty()) throw Error(ErrorCode::kInsufficientSteps, "series has no data");

  const long first = cells.begin()->first;
  const long last = cells.rbegin()->first;
  const int agents = max_agent + 1;
  Matrix values(last - first + 1, agents);
  std::vector<bool> seen(agents, false);
  for (long step = first; step <= last; ++step) {
    const auto row = step - first;
    auto it = cells.find(step);
    for (int k = 0; k < agents; ++k) {
      if (it != cells.end()) {
        auto cell = it->second.find(k);
        if (cell != it->second.end()) {
          values(row, k) = cell->second;
          seen[k] = true;
          continue;
        }
      }
      if (!seen[k])
        throw Error(ErrorCode::kParse,
                    "agent " + std::to_string(k) + " has no value at the first step");
      values(row, k) = values(row - 1, k);
    }
  }
  return BeliefSeries(std::move(values), split);
}

Vector estimate_log_likelihoods(const BeliefSeries& series,
                                const Matrix& combination, double delta) {
  check_delta(delta);
  return estimate(series, combination, delta, 1.0 - delta);
}

double fit_error(const BeliefSeries& series, const Matrix& combination,
                 double delta, const Vector& estimates) {
  check_delta(delta);
  return score(series, combination, delta, 1.0 - delta, estimates);
}

Vector estimate_log_likelihoods_traditional(const BeliefSeries& series,
                                            const Matrix& combination) {
  return estimate(series, combination, 1.0, 1.0);
}

double fit_error_traditional(const BeliefSeries& series,
                             const Matrix& combination, const Vector& estimates) {
  return score(series, combination, 1.0, 1.0, estimates);
}

DeltaScan scan_delta(const BeliefSeries& series, const Matrix& combination,
                     const std::vector<double>& grid, bool include_traditional) {
  if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, "empty delta grid");
  for (double d : grid) check_delta(d);
  DeltaScan out;
  out.rows.reserve(grid.size());
  for (double d : grid) {
    const Vector c = estimate_log_likelihoods(series, combination, d);
    out.rows.push_back({d, fit_error(series, combination, d, c)});
  }
  const auto best = std::min_element(
      out.rows.begin(), out.rows.end(),
      [](const ScanRow& a, const ScanRow& b) { return a.error < b.error; });
  out.best_delta = best->delta;
  out.best_error = best->error;
  if (include_traditional) {
    const Vector c = estimate_log_likelihoods_traditional(series, combination);
    out.traditional_error = fit_error_traditional(series, combination, c);
  }
  return out;
}

std::vector<double> delta_grid(double step) {
  if (!(step > 0.0 && step < 1.0))
    throw Error(ErrorCode::kInvalidArgument, "grid step must lie in (0, 1)");
  std::vector<double> grid;
  for (int i = 1;; ++i) {
    const double d = i * step;
    if (d >= 1.0 - 1e-12) break;
    grid.push_back(d);
  }
  return grid;
}

Matrix noiseless_series(const Matrix& combination, const Vector& expected_llr,
                        double delta, int steps, const Vector& initial) {
  check_delta(delta);
  const auto n = combination.cols();
  if (expected_llr.size() != n || initial.size() != n || combination.rows() != n)
    throw Error(ErrorCode::kInvalidArgument, "dimension mismatch");
  Matrix out(steps, n);
  Vector prior = initial;
  for (int i = 0; i < steps; ++i) {
    const Vector x = delta * expected_llr + (1.0 - delta) * prior;
    out.row(i) = x.transpose();
    prior = combination.transpose() * x;
  }
  return out;
}

SyntheticSeries synthetic_asl_series(const SyntheticSeriesSpec& spec,
                                     std::uint64_t seed) {
  Network network = sample_sbm(spec.params, derive_seed(seed, seed_domain::kSynthetic, 0));
  const LikelihoodProfile profile =
      bernoulli_pair_profile(network.clusters, {0, 1}, spec.p_theta0, spec.p_theta1);
  Rng signs(derive_seed(seed, seed_domain::kSynthetic, 1));
  const double sign[2] = {signs.bernoulli(0.5) ? 1.0 : -1.0,
                          signs.bernoulli(0.5) ? 1.0 : -1.0};
  Matrix initial(2, network.size());
  for (int k = 0; k < network.size(); ++k) {
    const double half = 0.5 * sign[network.clusters[k]] * spec.prior_magnitude;
    initial(0, k) = half;
    initial(1, k) = -half;
  }
  RunOptions options;
  options.horizon = spec.steps;
  options.seed = derive_seed(seed, seed_domain::kSynthetic, 2);
  options.initial_log_mu = initial;
  const Trace trace = run(network, profile, Strategy::adaptive(spec.delta), options);
  return {BeliefSeries::from_trace(trace, spec.split), std::move(network)};
}

}  // namespace hetsl
