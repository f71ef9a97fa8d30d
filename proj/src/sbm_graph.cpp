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

#include "hetsl/sbm_graph.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "hetsl/errors.hpp"
#include "hetsl/rng.hpp"

namespace hetsl {
namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

void require(bool ok, ErrorCode code, const std::string& message) {
  if (!ok) throw Error(code, message);
}

}  // namespace

void SbmParams::validate() const {
  require(n0 >= 1 && n1 >= 1, ErrorCode::kInvalidArgument,
          "cluster sizes must be >= 1");
  require(is_probability(p0) && is_probability(p1) && is_probability(q0) &&
              is_probability(q1),
          ErrorCode::kInvalidArgument, "probabilities must lie in [0, 1]");
}

bool SbmParams::in_sparse_cross_regime() const {
  const double floor = std::min(p0, p1);
  return q0 < floor && q1 < floor;
}

int BlockModel::size() const {
  return std::accumulate(sizes.begin(), sizes.end(), 0);
}

std::vector<int> BlockModel::labels() const {
  std::vector<int> out;
  out.reserve(size());
  for (int b = 0; b < blocks(); ++b) out.insert(out.end(), sizes[b], b);
  return out;
}

void BlockModel::validate() const {
  require(!sizes.empty(), ErrorCode::kInvalidArgument, "no blocks");
  for (int s : sizes)
    require(s >= 1, ErrorCode::kInvalidArgument, "block sizes must be >= 1");
  require(probabilities.rows() == blocks() && probabilities.cols() == blocks(),
          ErrorCode::kInvalidArgument,
          "probability matrix must be k x k for k blocks");
  for (Eigen::Index i = 0; i < probabilities.size(); ++i)
    require(is_probability(probabilities.data()[i]),
            ErrorCode::kInvalidArgument, "probabilities must lie in [0, 1]");
}

BlockModel BlockModel::from(const SbmParams& params) {
  params.validate();
  BlockModel model;
  model.sizes = {params.n0, params.n1};
  model.probabilities.resize(2, 2);
  model.probabilities << params.p0, params.q0, params.q1, params.p1;
  return model;
}

BlockModel BlockModel::uniform_cross(std::vector<int> sizes,
                                     std::vector<double> intra, double q) {
  require(sizes.size() == intra.size(), ErrorCode::kInvalidArgument,
          "one intra-block probability per block required");
  BlockModel model;
  const auto k = static_cast<Eigen::Index>(sizes.size());
  model.sizes = std::move(sizes);
  model.probabilities = Matrix::Constant(k, k, q);
  for (Eigen::Index b = 0; b < k; ++b) model.probabilities(b, b) = intra[b];
  model.validate();
  return model;
}

Matrix averaging_combination(const Adjacency& adjacency) {
  require(adjacency.rows() == adjacency.cols(), ErrorCode::kInvalidArgument,
          "adjacency must be square");
  Matrix out = adjacency.cast<double>();
  for (Eigen::Index k = 0; k < out.cols(); ++k) {
    const double degree = out.col(k).sum();
    if (degree <= 0.0)
      throw Error(ErrorCode::kZeroColumn,
                  "agent " + std::to_string(k) + " has no in-neighbors");
    out.col(k) /= degree;
  }
  return out;
}

Connectivity is_strongly_connected(const Adjacency& adjacency) {
  const auto n = adjacency.rows();
  Connectivity out;
  for (Eigen::Index i = 0; i < n; ++i)
    if (adjacency(i, i) != 0) out.has_self_loop = true;
  if (n == 0) return out;

  // Forward reachability from node 0, then reachability in the reversed
  // graph; strongly connected iff both reach everything.
  auto reaches_all = [&](bool reversed) {
    std::vector<char> seen(n, 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    Eigen::Index count = 1;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (Eigen::Index w = 0; w < n; ++w) {
        const int edge = reversed ? adjacency(w, v) : adjacency(v, w);
        if (edge != 0 && !seen[w]) {
          seen[w] = 1;
          ++count;
          stack.push_back(w);
        }
      }
    }
    return count == n;
  };
  out.strongly_connected = reaches_all(false) && reaches_all(true);
  return out;
}

Network make_network(Adjacency adjacency, std::vector<int> block_sizes) {
  const int total = std::accumulate(block_sizes.begin(), block_sizes.end(), 0);
  require(total == adjacency.rows() && adjacency.rows() == adjacency.cols(),
          ErrorCode::kInvalidArgument,
          "block sizes do not add up to the adjacency dimension");
  Network net;
  net.combination = averaging_combination(adjacency);
  net.adjacency = std::move(adjacency);
  for (int b = 0; b < static_cast<int>(block_sizes.size()); ++b)
    net.clusters.insert(net.clusters.end(), block_sizes[b], b);
  net.block_sizes = std::move(block_sizes);
  return net;
}

Adjacency sample_adjacency(const BlockModel& model, Rng& rng) {
  const std::vector<int> labels = model.labels();
  const auto n = static_cast<Eigen::Index>(labels.size());
  Adjacency adjacency(n, n);
  for (Eigen::Index l = 0; l < n; ++l)
    for (Eigen::Index k = 0; k < n; ++k)
      adjacency(l, k) = rng.bernoulli(model.probabilities(labels[l], labels[k])) ? 1 : 0;
  return adjacency;
}

Network sample_sbm(const BlockModel& model, std::uint64_t seed,
                   const SampleOptions& options) {
  model.validate();
  require(options.max_retries >= 1, ErrorCode::kInvalidArgument,
          "max_retries must be >= 1");
  Adjacency adjacency;
  bool saw_zero_column = false;
  for (int attempt = 0; attempt < options.max_retries; ++attempt) {
    Rng rng(derive_seed(seed, seed_domain::kGraph,
                        static_cast<std::uint64_t>(attempt)));
    adjacency = sample_adjacency(model, rng);

    if ((adjacency.colwise().sum().array() == 0).any()) {
      saw_zero_column = true;
      continue;
    }
    if (options.require_strong_connectivity &&
        !is_strongly_connected(adjacency).primitive())
      continue;

    Network net = make_network(adjacency, model.sizes);
    net.retries = attempt;
    return net;
  }
  if (saw_zero_column && !options.require_strong_connectivity)
    throw Error(ErrorCode::kZeroColumn,
                "every sampled graph had an agent without in-neighbors");
  if (options.require_strong_connectivity)
    throw Error(ErrorCode::kNotStronglyConnected,
                "no primitive graph within " +
                    std::to_string(options.max_retries) + " draws");
  throw Error(ErrorCode::kZeroColumn, "sampling failed");
}

Network sample_sbm(const SbmParams& params, std::uint64_t seed,
                   const SampleOptions& options) {
  return sample_sbm(BlockModel::from(params), seed, options);
}

double ExpectedMatrix::block(int row_cluster, int col_cluster) const {
  if (row_cluster == 0) return col_cluster == 0 ? intra0 : cross01;
  return col_cluster == 0 ? cross10 : intra1;
}

Matrix ExpectedMatrix::dense() const {
  Matrix out(n0 + n1, n0 + n1);
  out.topLeftCorner(n0, n0).setConstant(intra0);
  out.topRightCorner(n0, n1).setConstant(cross01);
  out.bottomLeftCorner(n1, n0).setConstant(cross10);
  out.bottomRightCorner(n1, n1).setConstant(intra1);
  return out;
}

ExpectedMatrix expected_combination(const SbmParams& params) {
  params.validate();
  const double r0 = params.p0 * params.n0 + params.q1 * params.n1;
  const double r1 = params.q0 * params.n0 + params.p1 * params.n1;
  if (r0 <= 0.0 || r1 <= 0.0)
    throw Error(ErrorCode::kDegenerateBlock,
                "expected in-degree of a cluster is zero");
  ExpectedMatrix out;
  out.n0 = params.n0;
  out.n1 = params.n1;
  out.intra0 = params.p0 / r0;
  out.cross01 = params.q0 / r1;
  out.cross10 = params.q1 / r0;
  out.intra1 = params.p1 / r1;
  return out;
}

std::vector<double> binomial_pmf(int n, double p) {
  require(n >= 0 && is_probability(p), ErrorCode::kInvalidArgument,
          "binomial needs n >= 0 and p in [0, 1]");
  std::vector<double> pmf(n + 1, 0.0);
  if (p == 0.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (p == 1.0) {
    pmf[n] = 1.0;
    return pmf;
  }
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  const double log_n_fact = std::lgamma(n + 1.0);
  for (int b = 0; b <= n; ++b) {
    const double log_choose =
        log_n_fact - std::lgamma(b + 1.0) - std::lgamma(n - b + 1.0);
    pmf[b] = std::exp(log_choose + b * log_p + (n - b) * log_q);
  }
  return pmf;
}

double inverse_binomial_moment(double c, int n, double p, int t,
                               MomentMode mode) {
  require(c > 0.0 && t >= 1 && n >= 0 && is_probability(p),
          ErrorCode::kInvalidArgument,
          "inverse binomial moment needs c > 0, t >= 1, n >= 0, p in [0,1]");
  if (mode == MomentMode::kApprox) return std::pow(c + n * p, -t);
  const std::vector<double> pmf = binomial_pmf(n, p);
  double sum = 0.0;
  for (int b = 0; b <= n; ++b) sum += pmf[b] * std::pow(c + b, -t);
  return sum;
}

namespace {

std::vector<double> convolve(const std::vector<double>& a,
                             const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

}  // namespace

Matrix exact_expected_combination(const BlockModel& model) {
  model.validate();
  const int k = model.blocks();
  // For a column in block c and a row in block r:
  //   E A = P(r, c) * E[1 / (1 + X)],
  // X = in-degree of the column excluding that row. X is a sum of
  // independent binomials, one per block, with the row's block short by one.
  Matrix block_values(k, k);
  for (int c = 0; c < k; ++c) {
    for (int r = 0; r < k; ++r) {
      std::vector<double> law{1.0};
      for (int b = 0; b < k; ++b) {
        const int count = model.sizes[b] - (b == r ? 1 : 0);
        law = convolve(law, binomial_pmf(count, model.probabilities(b, c)));
      }
      double moment = 0.0;
      for (std::size_t x = 0; x < law.size(); ++x)
        moment += law[x] / (1.0 + static_cast<double>(x));
      block_values(r, c) = model.probabilities(r, c) * moment;
    }
  }
  const std::vector<int> labels = model.labels();
  const auto n = static_cast<Eigen::Index>(labels.size());
  Matrix out(n, n);
  for (Eigen::Index l = 0; l < n; ++l)
    for (Eigen::Index j = 0; j < n; ++j)
      out(l, j) = block_values(labels[l], labels[j]);
  return out;
}

PowerBlocks closed_form_power_blocks(double p, double q, int n, int t) {
  require(n >= 1 && t >= 1, ErrorCode::kInvalidArgument,
          "closed-form power needs n >= 1 and t >= 1");
  require(is_probability(p) && is_probability(q), ErrorCode::kInvalidArgument,
          "probabilities must lie in [0, 1]");
  if (p + q <= 0.0)
    throw Error(ErrorCode::kDegenerateBlock, "p + q must be positive");
  const double ratio = std::pow((p - q) / (p + q), t);
  const double scale = 1.0 / (2.0 * n);
  return PowerBlocks{scale * (1.0 + ratio), scale * (1.0 - ratio)};
}

ClosedFormPower closed_form_power(double p, double q, int n, int t) {
  const PowerBlocks blocks = closed_form_power_blocks(p, q, n, t);
  ClosedFormPower out;
  out.in_regime = q < p;
  out.matrix.resize(2 * n, 2 * n);
  out.matrix.topLeftCorner(n, n).setConstant(blocks.same);
  out.matrix.bottomRightCorner(n, n).setConstant(blocks.same);
  out.matrix.topRightCorner(n, n).setConstant(blocks.cross);
  out.matrix.bottomLeftCorner(n, n).setConstant(blocks.cross);
  return out;
}

Vector perron_vector(const Matrix& matrix, double tol, long max_iter) {
  require(matrix.rows() == matrix.cols() && matrix.rows() > 0,
          ErrorCode::kInvalidArgument, "matrix must be square and non-empty");
  require(tol > 0.0 && max_iter >= 1, ErrorCode::kInvalidArgument,
          "tol must be positive and max_iter >= 1");
  const auto n = matrix.rows();
  Vector u = Vector::Constant(n, 1.0 / static_cast<double>(n));
  Vector next(n);
  for (long iter = 0; iter < max_iter; ++iter) {
    next.noalias() = matrix * u;
    next /= next.sum();
    const double residual = (matrix * next - next).cwiseAbs().maxCoeff();
    u.swap(next);
    if (residual <= tol) {
      if ((u.array() <= 0.0).any())
        throw Error(ErrorCode::kNoConvergence,
                    "power iteration converged to a non-positive vector; "
                    "matrix is not primitive");
      return u;
    }
  }
  throw Error(ErrorCode::kNoConvergence,
              "power iteration did not reach tolerance in " +
                  std::to_string(max_iter) + " iterations");
}

Vector expected_perron_vector(const SbmParams& params) {
  params.validate();
  const double r0 = params.p0 * params.n0 + params.q1 * params.n1;
  const double r1 = params.q0 * params.n0 + params.p1 * params.n1;
  const double w0 = params.q0 * r0;
  const double w1 = params.q1 * r1;
  const double norm = w0 * params.n0 + w1 * params.n1;
  if (norm <= 0.0)
    throw Error(ErrorCode::kDegenerateBlock,
                "clusters are decoupled; the Perron vector is not unique");
  Vector u(params.size());
  u.head(params.n0).setConstant(w0 / norm);
  u.tail(params.n1).setConstant(w1 / norm);
  return u;
}

void write_network(std::ostream& out, const Network& network) {
  const auto n = network.adjacency.rows();
  const auto& sizes = network.block_sizes;
  out << n;
  if (sizes.size() == 2) {
    out << ' ' << sizes[0] << ' ' << sizes[1];
  } else {
    out << ' ' << sizes.size();
    for (int s : sizes) out << ' ' << s;
  }
  out << '\n';
  for (Eigen::Index l = 0; l < n; ++l) {
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k) out << ' ';
      out << (network.adjacency(l, k) != 0 ? 1 : 0);
    }
    out << '\n';
  }
}

Network read_network(std::istream& in) {
  std::string header;
  if (!std::getline(in, header))
    throw Error(ErrorCode::kParse, "network file is empty");
  std::istringstream hs(header);
  std::vector<long> tokens;
  for (long v; hs >> v;) tokens.push_back(v);
  if (tokens.size() < 3 || tokens[0] < 1)
    throw Error(ErrorCode::kParse, "bad network header: '" + header + "'");
  const long n = tokens[0];
  std::vector<int> sizes;
  if (tokens.size() == 3 && tokens[1] + tokens[2] == n) {
    sizes = {static_cast<int>(tokens[1]), static_cast<int>(tokens[2])};
  } else {
    const long k = tokens[1];
    if (k < 1 || static_cast<long>(tokens.size()) != 2 + k)
      throw Error(ErrorCode::kParse, "bad network header: '" + header + "'");
    for (long b = 0; b < k; ++b) sizes.push_back(static_cast<int>(tokens[2 + b]));
  }
  if (std::accumulate(sizes.begin(), sizes.end(), 0L) != n)
    throw Error(ErrorCode::kParse, "block sizes do not add up to N");

  Adjacency adjacency(n, n);
  for (long l = 0; l < n; ++l)
    for (long k = 0; k < n; ++k) {
      int bit = 0;
      if (!(in >> bit) || (bit != 0 && bit != 1))
        throw Error(ErrorCode::kParse,
                    "expected 0/1 at row " + std::to_string(l) + ", column " +
                        std::to_string(k));
      adjacency(l, k) = bit;
    }
  return make_network(std::move(adjacency), std::move(sizes));
}

void write_matrix_csv(std::ostream& out, const Matrix& matrix) {
  const auto old_precision = out.precision();
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      if (c) out << ',';
      out << matrix(r, c);
    }
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace hetsl
