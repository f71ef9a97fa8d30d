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

// Inner loops of the belief recursions. Beliefs are H x N log-domain
// matrices with one column per agent. Each parallel kernel has a serial
// reference twin; both evaluate every column with the same operation order,
// so their outputs are bitwise identical.

#include <span>

#include <Eigen/Dense>

namespace hetsl::kernels {

using Matrix = Eigen::MatrixXd;

// log(sum(exp(values))), stable for any finite input.
double log_sum_exp(std::span<const double> values);

// Subtract each column's log-sum-exp so the column exponentiates to a
// probability vector.
void normalize_columns(Matrix& log_beliefs);

// out(:, k) = weight * log_lik(:, k) + (1 - weight) * log_prior(:, k),
// normalized. weight = 1 is the Bayesian update.
void adapt_serial(const Matrix& log_prior, const Matrix& log_lik, double weight,
                  Matrix& out);
void adapt_parallel(const Matrix& log_prior, const Matrix& log_lik,
                    double weight, Matrix& out);

// out(:, k) = sum_l a_{lk} log_public(:, l), normalized.
void combine_serial(const Matrix& combination, const Matrix& log_public,
                    Matrix& out);
void combine_parallel(const Matrix& combination, const Matrix& log_public,
                      Matrix& out);

}  // namespace hetsl::kernels
