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

// Stochastic Block Model networks, averaging-rule combination matrices and
// the closed-form combination-matrix theory for two-block models.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "hetsl/rng.hpp"

namespace hetsl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Adjacency = Eigen::MatrixXi;

// Two-community SBM law. Row block = sender cluster, column block =
// receiver cluster:
//
//          cols C0   cols C1
//   C0  [   p0        q0   ]
//   C1  [   q1        p1   ]
//
// so q0 is the probability that an agent of cluster 0 feeds an agent of
// cluster 1, and q1 the reverse.
struct SbmParams {
  int n0 = 1;
  int n1 = 1;
  double p0 = 0.0;
  double p1 = 0.0;
  double q0 = 0.0;
  double q1 = 0.0;

  int size() const { return n0 + n1; }
  void validate() const;
  // True iff q0, q1 < min(p0, p1).
  bool in_sparse_cross_regime() const;

  static SbmParams symmetric(int n, double p, double q) {
    return SbmParams{n, n, p, p, q, q};
  }
};

// k-community generalization used by the multi-community experiments.
// probabilities(a, b) is the edge probability from an agent of block a
// to an agent of block b.
struct BlockModel {
  std::vector<int> sizes;
  Matrix probabilities;

  int blocks() const { return static_cast<int>(sizes.size()); }
  int size() const;
  std::vector<int> labels() const;
  void validate() const;

  static BlockModel from(const SbmParams& params);
  // Equal cross probability q between every pair of distinct blocks.
  static BlockModel uniform_cross(std::vector<int> sizes,
                                  std::vector<double> intra, double q);
};

struct Network {
  Adjacency adjacency;
  Matrix combination;
  std::vector<int> clusters;
  std::vector<int> block_sizes;
  int retries = 0;  // graphs rejected before this one was accepted

  int size() const { return static_cast<int>(clusters.size()); }
};

struct SampleOptions {
  bool require_strong_connectivity = true;
  int max_retries = 100;
};

// One unconditioned draw: every entry, diagonal included, is Bernoulli with
// its block probability.
Adjacency sample_adjacency(const BlockModel& model, Rng& rng);

// Every adjacency entry, diagonal included, is an independent Bernoulli draw
// with its block probability. Whole graphs are rejected and redrawn when a
// column is empty or (optionally) the graph is not strongly connected with a
// self-loop.
Network sample_sbm(const BlockModel& model, std::uint64_t seed,
                   const SampleOptions& options = {});
Network sample_sbm(const SbmParams& params, std::uint64_t seed,
                   const SampleOptions& options = {});

// Network from a fixed adjacency; throws ZeroColumn like
// averaging_combination.
Network make_network(Adjacency adjacency, std::vector<int> block_sizes);

// A = E D^{-1}: each column of E divided by its sum.
Matrix averaging_combination(const Adjacency& adjacency);

// Block values of the expected combination matrix Abar. block(r, c) is the
// common entry for rows in cluster r and columns in cluster c.
struct ExpectedMatrix {
  int n0 = 0;
  int n1 = 0;
  double intra0 = 0.0;  // rows C0, cols C0: p0 / r0
  double cross01 = 0.0; // rows C0, cols C1: q0 / r1
  double cross10 = 0.0; // rows C1, cols C0: q1 / r0
  double intra1 = 0.0;  // rows C1, cols C1: p1 / r1

  double block(int row_cluster, int col_cluster) const;
  Matrix dense() const;
};

ExpectedMatrix expected_combination(const SbmParams& params);

// Exact E[A] for a block model, unconditional on connectivity, computed by
// convolving the binomial in-degree laws of each column. 0/0 entries count
// as 0.
Matrix exact_expected_combination(const BlockModel& model);

struct ClosedFormPower {
  Matrix matrix;
  bool in_regime = true;  // false when q >= p
};

// Abar^t for the symmetric model (n, p, q) in closed form:
// (1 +/- ((p-q)/(p+q))^t) / (2n) on diagonal / off-diagonal blocks.
ClosedFormPower closed_form_power(double p, double q, int n, int t);

// Same blocks without materializing the 2n x 2n matrix.
struct PowerBlocks {
  double same = 0.0;
  double cross = 0.0;
};
PowerBlocks closed_form_power_blocks(double p, double q, int n, int t);

// Power iteration from the uniform vector. Returns u with A u = u (within
// tol in the max norm), u > 0 and sum(u) = 1.
Vector perron_vector(const Matrix& matrix, double tol = 1e-12,
                     long max_iter = 1'000'000);

// Closed form of the Perron vector of Abar.
Vector expected_perron_vector(const SbmParams& params);

struct Connectivity {
  bool strongly_connected = false;
  bool has_self_loop = false;
  bool primitive() const { return strongly_connected && has_self_loop; }
};

// Edge l -> k exists iff adjacency(l, k) != 0.
Connectivity is_strongly_connected(const Adjacency& adjacency);

enum class MomentMode { kApprox, kExact };

// E[1 / (c + b)^t] for b ~ Binomial(n, p); the approximation is
// 1 / (c + n p)^t.
double inverse_binomial_moment(double c, int n, double p, int t,
                               MomentMode mode);

// Binomial(n, p) probability mass function.
std::vector<double> binomial_pmf(int n, double p);

// Text format: header "N n0 n1" (two blocks) or "N k s_1 ... s_k", then N
// rows of N space-separated 0/1 entries.
void write_network(std::ostream& out, const Network& network);
Network read_network(std::istream& in);

// CSV, 17 significant digits, no header.
void write_matrix_csv(std::ostream& out, const Matrix& matrix);

}  // namespace hetsl
