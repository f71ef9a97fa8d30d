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

// Hypothesis sets, per-agent discrete likelihood models and the
// KL-divergence based informativeness measures.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hetsl/rng.hpp"

namespace hetsl {

class HypothesisSet {
 public:
  explicit HypothesisSet(std::vector<std::string> labels);
  // theta0 ... theta{count-1}
  static HypothesisSet numbered(int count);

  int size() const { return static_cast<int>(labels_.size()); }
  const std::string& label(int index) const { return labels_.at(index); }
  const std::vector<std::string>& labels() const { return labels_; }
  int index_of(const std::string& label) const;

 private:
  std::vector<std::string> labels_;
};

// Smallest likelihood entry accepted; keeps every log-likelihood finite.
inline constexpr double kMinLikelihood = 1e-12;

// L_k(. | theta) for every agent k and hypothesis theta over the alphabet
// {0, ..., m-1}, together with each agent's true hypothesis.
class LikelihoodProfile {
 public:
  // distributions[k][h] is a probability vector of length m.
  LikelihoodProfile(HypothesisSet hypotheses,
                    std::vector<std::vector<std::vector<double>>> distributions,
                    std::vector<int> true_state);

  int agents() const { return agents_; }
  int hypotheses() const { return hypotheses_.size(); }
  int alphabet() const { return alphabet_; }
  const HypothesisSet& hypothesis_set() const { return hypotheses_; }
  const std::vector<int>& true_state() const { return true_state_; }
  int true_state(int agent) const { return true_state_.at(agent); }

  std::span<const double> distribution(int agent, int hypothesis) const;
  // log L_agent(symbol | theta) for all theta, contiguous.
  std::span<const double> log_likelihoods(int agent, int symbol) const {
    return {log_by_symbol_.data() + (static_cast<std::size_t>(agent) * alphabet_ +
                                     symbol) * hypotheses(),
            static_cast<std::size_t>(hypotheses())};
  }

  // Same models with a different truth assignment.
  LikelihoodProfile with_true_state(std::vector<int> true_state) const;

 private:
  HypothesisSet hypotheses_;
  int agents_ = 0;
  int alphabet_ = 0;
  std::vector<double> probs_;          // [agent][hypothesis][symbol]
  std::vector<double> cumulative_;     // same layout
  std::vector<double> log_by_symbol_;  // [agent][symbol][hypothesis]
  std::vector<int> true_state_;

  friend int sample_observation(const LikelihoodProfile&, int, Rng&);
};

// Every agent uses L(.|theta0) = Bernoulli(p_theta0), L(.|theta1) =
// Bernoulli(p_theta1) (probability of symbol 1); agents in cluster c have
// truth cluster_truth[c].
LikelihoodProfile bernoulli_pair_profile(const std::vector<int>& clusters,
                                         const std::vector<int>& cluster_truth,
                                         double p_theta0, double p_theta1);

// One random multinomial of size `alphabet` per hypothesis, shared by every
// agent: entries uniform(0,1) then normalized. Agents in cluster c follow
// hypothesis c.
LikelihoodProfile random_multinomial_profile(const std::vector<int>& clusters,
                                             int hypotheses, int alphabet,
                                             std::uint64_t seed);

// Symbol drawn from L_agent(. | true_state(agent)).
int sample_observation(const LikelihoodProfile& profile, int agent, Rng& rng);

// Sum p_i log(p_i / q_i) in nats with 0 log 0 = 0.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// table(k, h) = D_KL(L_k(theta*_k) || L_k(theta_h)).
Eigen::MatrixXd divergence_table(const LikelihoodProfile& profile);

struct InformativenessReport {
  double d0 = 0.0;
  double d1 = 0.0;
  // D_KL(L_k(theta_c) || L_k(theta_{1-c})) for agent k in cluster c.
  std::vector<double> per_agent;
  bool homogeneous = true;
  // Largest within-cluster spread (max - min) of per_agent.
  double max_deviation = 0.0;
};

// Two-cluster informativeness: cluster 0 agents are scored against
// theta0 vs theta1, cluster 1 agents against theta1 vs theta0.
InformativenessReport cluster_informativeness(const LikelihoodProfile& profile,
                                              const std::vector<int>& clusters,
                                              double tolerance = 1e-9);

// Per cluster c: mean over its agents of sum_{h != c} D_KL(L_k(theta_c) ||
// L_k(theta_h)). This is the summed variant used for k > 2 communities.
std::vector<double> summed_informativeness(const LikelihoodProfile& profile,
                                           const std::vector<int>& clusters);

struct IdentifiabilityReport {
  bool identifiable = false;
  // witnesses[h]: agents with D_KL(L_k(theta*) || L_k(theta_h)) > 0; empty
  // for h == theta*.
  std::vector<std::vector<int>> witnesses;
};

IdentifiabilityReport check_global_identifiability(
    const LikelihoodProfile& profile, int theta_star);

// Text format:
//   profile <agents> <hypotheses> <alphabet>
//   labels <label_0> ... <label_{H-1}>
//   truth <t_0> ... <t_{N-1}>
//   <agent> <hypothesis> <p_0> ... <p_{m-1}>     (agents x hypotheses rows)
void write_profile(std::ostream& out, const LikelihoodProfile& profile);
LikelihoodProfile read_profile(std::istream& in);

}  // namespace hetsl
