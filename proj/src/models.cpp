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

#include "hetsl/models.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "hetsl/errors.hpp"

namespace hetsl {

HypothesisSet::HypothesisSet(std::vector<std::string> labels)
    : labels_(std::move(labels)) {
  if (labels_.size() < 2)
    throw Error(ErrorCode::kInvalidArgument, "need at least two hypotheses");
  std::set<std::string> unique(labels_.begin(), labels_.end());
  if (unique.size() != labels_.size())
    throw Error(ErrorCode::kInvalidArgument, "hypothesis labels must be unique");
}

HypothesisSet HypothesisSet::numbered(int count) {
  std::vector<std::string> labels;
  for (int h = 0; h < count; ++h) labels.push_back("theta" + std::to_string(h));
  return HypothesisSet(std::move(labels));
}

int HypothesisSet::index_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end())
    throw Error(ErrorCode::kInvalidArgument, "unknown hypothesis '" + label + "'");
  return static_cast<int>(it - labels_.begin());
}

LikelihoodProfile::LikelihoodProfile(
    HypothesisSet hypotheses,
    std::vector<std::vector<std::vector<double>>> distributions,
    std::vector<int> true_state)
    : hypotheses_(std::move(hypotheses)), true_state_(std::move(true_state)) {
  agents_ = static_cast<int>(distributions.size());
  const int h_count = hypotheses_.size();
  if (agents_ < 1)
    throw Error(ErrorCode::kInvalidArgument, "profile has no agents");
  if (static_cast<int>(true_state_.size()) != agents_)
    throw Error(ErrorCode::kInvalidArgument,
                "one true hypothesis per agent required");
  alphabet_ = static_cast<int>(distributions[0].empty() ? 0
                                                        : distributions[0][0].size());
  if (alphabet_ < 1)
    throw Error(ErrorCode::kInvalidArgument, "empty observation alphabet");

  probs_.reserve(static_cast<std::size_t>(agents_) * h_count * alphabet_);
  for (int k = 0; k < agents_; ++k) {
    if (static_cast<int>(distributions[k].size()) != h_count)
      throw Error(ErrorCode::kInvalidArgument,
                  "agent " + std::to_string(k) + " lacks a model per hypothesis");
    if (true_state_[k] < 0 || true_state_[k] >= h_count)
      throw Error(ErrorCode::kInvalidArgument,
                  "agent " + std::to_string(k) + " has an unknown true state");
    for (int h = 0; h < h_count; ++h) {
      const auto& dist = distributions[k][h];
      if (static_cast<int>(dist.size()) != alphabet_)
        throw Error(ErrorCode::kInvalidArgument, "ragged alphabet sizes");
      double total = 0.0;
      for (double v : dist) {
        if (!(v >= kMinLikelihood))
          throw Error(ErrorCode::kInvalidArgument,
                      "likelihood entries must be >= 1e-12 (agent " +
                          std::to_string(k) + ", hypothesis " +
                          std::to_string(h) + ")");
        total += v;
      }
      if (std::abs(total - 1.0) > 1e-12)
        throw Error(ErrorCode::kInvalidArgument,
                    "likelihood of agent " + std::to_string(k) +
                        " under hypothesis " + std::to_string(h) +
                        " does not sum to 1");
      probs_.insert(probs_.end(), dist.begin(), dist.end());
    }
  }

  cumulative_.resize(probs_.size());
  for (std::size_t row = 0; row < probs_.size(); row += alphabet_) {
    double acc = 0.0;
    for (int s = 0; s < alphabet_; ++s) {
      acc += probs_[row + s];
      cumulative_[row + s] = acc;
    }
    cumulative_[row + alphabet_ - 1] = 1.0;
  }

  log_by_symbol_.resize(probs_.size());
  for (int k = 0; k < agents_; ++k)
    for (int s = 0; s < alphabet_; ++s)
      for (int h = 0; h < h_count; ++h)
        log_by_symbol_[(static_cast<std::size_t>(k) * alphabet_ + s) * h_count + h] =
            std::log(distribution(k, h)[s]);
}

std::span<const double> LikelihoodProfile::distribution(int agent,
                                                        int hypothesis) const {
  const std::size_t offset =
      (static_cast<std::size_t>(agent) * hypotheses() + hypothesis) * alphabet_;
  return {probs_.data() + offset, static_cast<std::size_t>(alphabet_)};
}

LikelihoodProfile LikelihoodProfile::with_true_state(
    std::vector<int> true_state) const {
  if (static_cast<int>(true_state.size()) != agents_)
    throw Error(ErrorCode::kInvalidArgument,
                "one true hypothesis per agent required");
  for (int t : true_state)
    if (t < 0 || t >= hypotheses())
      throw Error(ErrorCode::kInvalidArgument, "unknown true state");
  LikelihoodProfile out = *this;
  out.true_state_ = std::move(true_state);
  return out;
}

LikelihoodProfile bernoulli_pair_profile(const std::vector<int>& clusters,
                                         const std::vector<int>& cluster_truth,
                                         double p_theta0, double p_theta1) {
  const std::vector<double> l0{1.0 - p_theta0, p_theta0};
  const std::vector<double> l1{1.0 - p_theta1, p_theta1};
  std::vector<std::vector<std::vector<double>>> dists(clusters.size(), {l0, l1});
  std::vector<int> truth;
  truth.reserve(clusters.size());
  for (int c : clusters) truth.push_back(cluster_truth.at(c));
  return LikelihoodProfile(HypothesisSet::numbered(2), std::move(dists),
                           std::move(truth));
}

LikelihoodProfile random_multinomial_profile(const std::vector<int>& clusters,
                                             int hypotheses, int alphabet,
                                             std::uint64_t seed) {
  if (hypotheses < 2 || alphabet < 1)
    throw Error(ErrorCode::kInvalidArgument,
                "random multinomial needs >= 2 hypotheses and alphabet >= 1");
  Rng rng(derive_seed(seed, seed_domain::kProfile, 0));
  std::vector<std::vector<double>> shared(hypotheses);
  for (auto& dist : shared) {
    dist.resize(alphabet);
    double total = 0.0;
    for (auto& v : dist) {
      // uniform on (0, 1]; zero would break strict positivity
      v = 1.0 - rng.uniform();
      total += v;
    }
    for (auto& v : dist) v /= total;
  }
  std::vector<int> truth;
  for (int c : clusters) {
    if (c < 0 || c >= hypotheses)
      throw Error(ErrorCode::kInvalidArgument,
                  "cluster label has no matching hypothesis");
    truth.push_back(c);
  }
  std::vector<std::vector<std::vector<double>>> dists(clusters.size(), shared);
  return LikelihoodProfile(HypothesisSet::numbered(hypotheses), std::move(dists),
                           std::move(truth));
}

int sample_observation(const LikelihoodProfile& profile, int agent, Rng& rng) {
  const int m = profile.alphabet_;
  const double* cdf =
      profile.cumulative_.data() +
      (static_cast<std::size_t>(agent) * profile.hypotheses() +
       profile.true_state_[agent]) * m;
  const double u = rng.uniform();
  return static_cast<int>(std::upper_bound(cdf, cdf + m - 1, u) - cdf);
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw Error(ErrorCode::kInvalidArgument, "distributions differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0)
      throw Error(ErrorCode::kSupportMismatch,
                  "q vanishes where p is positive (index " + std::to_string(i) +
                      ")");
    sum += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(sum, 0.0);
}

Eigen::MatrixXd divergence_table(const LikelihoodProfile& profile) {
  Eigen::MatrixXd table(profile.agents(), profile.hypotheses());
  for (int k = 0; k < profile.agents(); ++k) {
    const auto truth = profile.distribution(k, profile.true_state(k));
    for (int h = 0; h < profile.hypotheses(); ++h)
      table(k, h) = kl_divergence(truth, profile.distribution(k, h));
  }
  return table;
}

InformativenessReport cluster_informativeness(const LikelihoodProfile& profile,
                                              const std::vector<int>& clusters,
                                              double tolerance) {
  if (static_cast<int>(clusters.size()) != profile.agents())
    throw Error(ErrorCode::kInvalidArgument, "one cluster label per agent required");
  InformativenessReport report;
  report.per_agent.resize(clusters.size());
  double sums[2] = {0.0, 0.0};
  int counts[2] = {0, 0};
  double lo[2] = {std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity()};
  double hi[2] = {-std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity()};
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    const int c = clusters[k];
    if (c != 0 && c != 1)
      throw Error(ErrorCode::kInvalidArgument,
                  "two-cluster informativeness needs labels 0 and 1");
    const int agent = static_cast<int>(k);
    const double d = kl_divergence(profile.distribution(agent, c),
                                   profile.distribution(agent, 1 - c));
    report.per_agent[k] = d;
    sums[c] += d;
    ++counts[c];
    lo[c] = std::min(lo[c], d);
    hi[c] = std::max(hi[c], d);
  }
  report.d0 = counts[0] ? sums[0] / counts[0] : 0.0;
  report.d1 = counts[1] ? sums[1] / counts[1] : 0.0;
  for (int c = 0; c < 2; ++c)
    if (counts[c]) report.max_deviation = std::max(report.max_deviation, hi[c] - lo[c]);
  report.homogeneous = report.max_deviation <= tolerance;
  return report;
}

std::vector<double> summed_informativeness(const LikelihoodProfile& profile,
                                           const std::vector<int>& clusters) {
  if (static_cast<int>(clusters.size()) != profile.agents())
    throw Error(ErrorCode::kInvalidArgument, "one cluster label per agent required");
  const int k_count = *std::max_element(clusters.begin(), clusters.end()) + 1;
  if (k_count > profile.hypotheses())
    throw Error(ErrorCode::kInvalidArgument, "more clusters than hypotheses");
  std::vector<double> sums(k_count, 0.0);
  std::vector<int> counts(k_count, 0);
  for (int k = 0; k < profile.agents(); ++k) {
    const int c = clusters[k];
    double total = 0.0;
    for (int h = 0; h < profile.hypotheses(); ++h)
      if (h != c)
        total += kl_divergence(profile.distribution(k, c), profile.distribution(k, h));
    sums[c] += total;
    ++counts[c];
  }
  for (int c = 0; c < k_count; ++c)
    if (counts[c]) sums[c] /= counts[c];
  return sums;
}

IdentifiabilityReport check_global_identifiability(
    const LikelihoodProfile& profile, int theta_star) {
  if (theta_star < 0 || theta_star >= profile.hypotheses())
    throw Error(ErrorCode::kInvalidArgument, "unknown hypothesis index");
  IdentifiabilityReport report;
  report.witnesses.resize(profile.hypotheses());
  report.identifiable = true;
  for (int h = 0; h < profile.hypotheses(); ++h) {
    if (h == theta_star) continue;
    for (int k = 0; k < profile.agents(); ++k)
      if (kl_divergence(profile.distribution(k, theta_star),
                        profile.distribution(k, h)) > 0.0)
        report.witnesses[h].push_back(k);
    if (report.witnesses[h].empty()) report.identifiable = false;
  }
  return report;
}

void write_profile(std::ostream& out, const LikelihoodProfile& profile) {
  const auto old_precision = out.precision();
  out << std::setprecision(17);
  out << "profile " << profile.agents() << ' ' << profile.hypotheses() << ' '
      << profile.alphabet() << '\n';
  out << "labels";
  for (const auto& label : profile.hypothesis_set().labels()) out << ' ' << label;
  out << "\ntruth";
  for (int t : profile.true_state()) out << ' ' << t;
  out << '\n';
  for (int k = 0; k < profile.agents(); ++k)
    for (int h = 0; h < profile.hypotheses(); ++h) {
      out << k << ' ' << h;
      for (double v : profile.distribution(k, h)) out << ' ' << v;
      out << '\n';
    }
  out.precision(old_precision);
}

LikelihoodProfile read_profile(std::istream& in) {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kParse, "profile: " + what);
  };
  std::string keyword;
  int agents = 0, hypotheses = 0, alphabet = 0;
  if (!(in >> keyword >> agents >> hypotheses >> alphabet) || keyword != "profile")
    fail("missing 'profile <agents> <hypotheses> <alphabet>' header");
  if (agents < 1 || hypotheses < 2 || alphabet < 1) fail("bad dimensions");
  if (!(in >> keyword) || keyword != "labels") fail("missing labels line");
  std::vector<std::string> labels(hypotheses);
  for (auto& label : labels)
    if (!(in >> label)) fail("truncated labels line");
  if (!(in >> keyword) || keyword != "truth") fail("missing truth line");
  std::vector<int> truth(agents);
  for (auto& t : truth)
    if (!(in >> t)) fail("truncated truth line");
  std::vector<std::vector<std::vector<double>>> dists(
      agents, std::vector<std::vector<double>>(hypotheses,
                                               std::vector<double>(alphabet)));
  for (int row = 0; row < agents * hypotheses; ++row) {
    int k = 0, h = 0;
    if (!(in >> k >> h)) fail("truncated probability rows");
    if (k < 0 || k >= agents || h < 0 || h >= hypotheses) fail("row index out of range");
    for (auto& v : dists[k][h])
      if (!(in >> v)) fail("truncated probability row");
  }
  return LikelihoodProfile(HypothesisSet(std::move(labels)), std::move(dists),
                           std::move(truth));
}

}  // namespace hetsl
