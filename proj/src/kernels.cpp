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

#include "hetsl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hetsl::kernels {
namespace {

inline void normalize_column(double* column, Eigen::Index h) {
  double max_value = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < h; ++i) max_value = std::max(max_value, column[i]);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < h; ++i) sum += std::exp(column[i] - max_value);
  const double shift = max_value + std::log(sum);
  for (Eigen::Index i = 0; i < h; ++i) column[i] -= shift;
}

inline void adapt_column(const Matrix& log_prior, const Matrix& log_lik,
                         double weight, Matrix& out, Eigen::Index k) {
  const Eigen::Index h = out.rows();
  const double keep = 1.0 - weight;
  const double* prior = log_prior.col(k).data();
  const double* lik = log_lik.col(k).data();
  double* dst = out.col(k).data();
  if (weight == 1.0) {
    for (Eigen::Index i = 0; i < h; ++i) dst[i] = lik[i] + prior[i];
  } else {
    for (Eigen::Index i = 0; i < h; ++i) dst[i] = weight * lik[i] + keep * prior[i];
  }
  normalize_column(dst, h);
}

inline void combine_column(const Matrix& combination, const Matrix& log_public,
                           Matrix& out, Eigen::Index k) {
  const Eigen::Index h = out.rows();
  const Eigen::Index n = combination.rows();
  double* dst = out.col(k).data();
  std::fill(dst, dst + h, 0.0);
  const double* weights = combination.col(k).data();
  for (Eigen::Index l = 0; l < n; ++l) {
    const double a = weights[l];
    if (a == 0.0) continue;
    const double* src = log_public.col(l).data();
    for (Eigen::Index i = 0; i < h; ++i) dst[i] += a * src[i];
  }
  normalize_column(dst, h);
}

}  // namespace

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double max_value = *std::max_element(values.begin(), values.end());
  if (std::isinf(max_value)) return max_value;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max_value);
  return max_value + std::log(sum);
}

void normalize_columns(Matrix& log_beliefs) {
  for (Eigen::Index k = 0; k < log_beliefs.cols(); ++k)
    normalize_column(log_beliefs.col(k).data(), log_beliefs.rows());
}

void adapt_serial(const Matrix& log_prior, const Matrix& log_lik, double weight,
                  Matrix& out) {
  out.resize(log_prior.rows(), log_prior.cols());
  for (Eigen::Index k = 0; k < log_prior.cols(); ++k)
    adapt_column(log_prior, log_lik, weight, out, k);
}

void adapt_parallel(const Matrix& log_prior, const Matrix& log_lik,
                    double weight, Matrix& out) {
  out.resize(log_prior.rows(), log_prior.cols());
  const Eigen::Index n = log_prior.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index k = 0; k < n; ++k)
    adapt_column(log_prior, log_lik, weight, out, k);
}

void combine_serial(const Matrix& combination, const Matrix& log_public,
                    Matrix& out) {
  out.resize(log_public.rows(), log_public.cols());
  for (Eigen::Index k = 0; k < combination.cols(); ++k)
    combine_column(combination, log_public, out, k);
}

void combine_parallel(const Matrix& combination, const Matrix& log_public,
                      Matrix& out) {
  out.resize(log_public.rows(), log_public.cols());
  const Eigen::Index n = combination.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index k = 0; k < n; ++k)
    combine_column(combination, log_public, out, k);
}

}  // namespace hetsl::kernels
