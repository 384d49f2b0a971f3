// Copyright 2026 The fksteer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fksteer/engine.hpp"
#include "fksteer/error.hpp"
#include "fksteer/metrics.hpp"
#include "fksteer/oracle.hpp"
#include "toys.hpp"

namespace fksteer {
namespace {

using testing::markov_toy;
using testing::mean_and_error;
using testing::rare_attribute;
using testing::rare_toy;
using testing::reference_toy;

/// Brute-force Σ_x p(x) exp(λ r(x)) from the data model over every sequence.
double brute_force_partition(const MaskedDiscreteDiffusion& process, const TerminalReward& reward, double lambda) {
  const auto base = enumerate_x0_marginal(process);
  double z = 0.0;
  for (const auto& [x, p] : base) z += p * std::exp(lambda * reward(x));
  return z;
}

TEST(Oracle, ReferenceTargetExample) {
  const auto target = exact_tilted_target(*reference_toy(), TerminalReward{TokenCount{0}}, std::log(2.0));
  EXPECT_NEAR(target.Z, 2.25, 1e-12);
  EXPECT_NEAR(target.log_Z, std::log(2.25), 1e-12);
  EXPECT_NEAR(target.probability.at(parse_tokens("AA")), 4.0 / 9.0, 1e-12);
  EXPECT_NEAR(target.probability.at(parse_tokens("AB")), 2.0 / 9.0, 1e-12);
  EXPECT_NEAR(target.probability.at(parse_tokens("BA")), 2.0 / 9.0, 1e-12);
  EXPECT_NEAR(target.probability.at(parse_tokens("BB")), 1.0 / 9.0, 1e-12);
}

TEST(Oracle, ZeroLambdaIsBase) {
  const auto process = markov_toy();
  const auto target = exact_tilted_target(*process, TerminalReward{TokenCount{1}}, 0.0);
  EXPECT_NEAR(target.Z, 1.0, 1e-12);
  EXPECT_LE(tv_distance(target.probability, enumerate_x0_marginal(*process)), 1e-12);
}

TEST(Oracle, ConstantRewardLeavesBaseUnchanged) {
  const auto process = markov_toy();
  const double rho = 0.8;
  const double lambda = 1.7;
  const auto target =
      exact_tilted_target(*process, TerminalReward{AttributeIndicator{CountAtLeast{0, 0}, rho}}, lambda);
  EXPECT_NEAR(target.Z, std::exp(lambda * rho), 1e-12);
  EXPECT_LE(tv_distance(target.probability, enumerate_x0_marginal(*process)), 1e-12);
}

TEST(Oracle, TargetMatchesBruteForce) {
  const auto process = markov_toy(4, 5);
  const TerminalReward reward{TableLogLikelihood{{{0.1, -0.3, 0.2}, {0.0, 0.5, -1.0}, {0.3, 0.3, 0.0}, {-0.2, 0.1, 0.4}}}};
  for (double lambda : {0.5, 2.0}) {
    const auto target = exact_tilted_target(*process, reward, lambda);
    const double z = brute_force_partition(*process, reward, lambda);
    EXPECT_NEAR(target.Z, z, 1e-12 * z);
    double total = 0.0;
    for (const auto& [x, p] : target.probability) total += p;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Oracle, MarginalsSumToOne) {
  const auto marginals = enumerate_marginals(*markov_toy());
  ASSERT_EQ(marginals.size(), 7u);
  EXPECT_EQ(marginals.front().t, 6);
  EXPECT_EQ(marginals.back().t, 0);
  for (const auto& m : marginals) {
    double total = 0.0;
    for (const auto& [x, p] : m.probability) total += p;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Oracle, ConditionalExpectationIsConsistent) {
  const auto process = markov_toy();
  const TerminalReward reward{TokenCount{2}};
  const auto table = exact_conditional_exp_reward(*process, reward);
  ASSERT_EQ(table.size(), 7u);
  const double z = exact_tilted_target(*process, reward, 1.0).Z;
  for (int t = 0; t <= 6; ++t) {
    double total = 0.0;
    for (const auto& [x, entry] : table[static_cast<std::size_t>(t)]) total += entry.probability * entry.expected_exp_reward;
    EXPECT_NEAR(total, z, 1e-12 * z) << "t = " << t;
  }
  for (const auto& [x, entry] : table[0]) EXPECT_NEAR(entry.expected_exp_reward, std::exp(reward(x)), 1e-12);
}

TEST(Oracle, EnumerationBounds) {
  auto big_vocab = std::make_shared<const MarkovChainModel>(MarkovChainModel::uniform(9, 2));
  MaskedDiscreteDiffusion too_wide(big_vocab, MaskedDiscreteDiffusion::uniform_schedule(4));
  EXPECT_THROW((void)enumerate_x0_marginal(too_wide), EnumerationTooLarge);
  auto long_seq = std::make_shared<const MarkovChainModel>(MarkovChainModel::uniform(2, 7));
  MaskedDiscreteDiffusion too_long(long_seq, MaskedDiscreteDiffusion::uniform_schedule(4));
  EXPECT_THROW((void)exact_tilted_target(too_long, TerminalReward{TokenCount{0}}, 1.0), EnumerationTooLarge);
}

TEST(Oracle, WriteDistribution) {
  const auto target = exact_tilted_target(*reference_toy(), TerminalReward{TokenCount{0}}, std::log(2.0));
  std::ostringstream out;
  write_distribution(out, target);
  const std::string text = out.str();
  EXPECT_EQ(text.rfind("# Z 2.25", 0), 0u);
  EXPECT_NE(text.find("AA\t"), std::string::npos);
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n' ? 1 : 0;
  EXPECT_EQ(lines, 5u);
}

TEST(TotalVariation, Examples) {
  const Distribution p = {{parse_tokens("A"), 0.5}, {parse_tokens("B"), 0.5}};
  const Distribution q = {{parse_tokens("A"), 1.0}};
  const Distribution r = {{parse_tokens("C"), 1.0}};
  EXPECT_EQ(tv_distance(p, p), 0.0);
  EXPECT_DOUBLE_EQ(tv_distance(q, r), 1.0);
  EXPECT_DOUBLE_EQ(tv_distance(p, q), 0.5);
  const Distribution s = {{parse_tokens("A"), 0.75}, {parse_tokens("B"), 0.25}};
  EXPECT_DOUBLE_EQ(tv_distance(p, s), 0.25);
}

TEST(TotalVariation, CountsAgainstExact) {
  const auto target = exact_tilted_target(*reference_toy(), TerminalReward{TokenCount{0}}, std::log(2.0));
  const std::map<TokenState, std::size_t> counts = {
      {parse_tokens("AA"), 4}, {parse_tokens("AB"), 2}, {parse_tokens("BA"), 2}, {parse_tokens("BB"), 1}};
  EXPECT_NEAR(tv_distance(counts, target), 0.0, 1e-15);
  EXPECT_THROW((void)tv_distance(std::map<TokenState, std::size_t>{}, target), ContractViolation);
}

Distribution random_distribution(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Distribution out;
  double total = 0.0;
  for (Token a = 0; a < 3; ++a) {
    if (u(rng) < 0.3) continue;
    const double w = u(rng);
    out[TokenState{a}] = w;
    total += w;
  }
  if (out.empty()) {
    out[TokenState{0}] = 1.0;
    total = 1.0;
  }
  for (auto& [x, p] : out) p /= total;
  return out;
}

TEST(TotalVariation, MetricProperties) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const auto p = random_distribution(rng);
    const auto q = random_distribution(rng);
    const auto r = random_distribution(rng);
    const double pq = tv_distance(p, q);
    EXPECT_DOUBLE_EQ(pq, tv_distance(q, p));
    EXPECT_GE(pq, 0.0);
    EXPECT_LE(pq, 1.0 + 1e-15);
    EXPECT_LE(tv_distance(p, r), pq + tv_distance(q, r) + 1e-12);
  }
}

TEST(Diversity, Examples) {
  const EmbeddingSpec identity{};
  const std::vector<State> pair = {RealState{0.0, 0.0}, RealState{3.0, 4.0}};
  EXPECT_DOUBLE_EQ(diversity(pair, identity), 25.0);
  const std::vector<State> triangle = {RealState{0.0, 0.0}, RealState{1.0, 0.0},
                                       RealState{0.5, std::sqrt(3.0) / 2.0}};
  EXPECT_NEAR(diversity(triangle, identity), 1.0, 1e-12);
  const std::vector<State> same = {RealState{1.0}, RealState{1.0}, RealState{1.0}};
  EXPECT_EQ(diversity(same, identity), 0.0);
  const std::vector<State> one = {RealState{1.0}};
  EXPECT_THROW((void)diversity(one, identity), ContractViolation);
}

TEST(Diversity, OneHotCountsMismatchedPositions) {
  const EmbeddingSpec one_hot{EmbeddingKind::kOneHotFlatten, 3, {}};
  const std::vector<State> tokens = {parse_tokens("ABC"), parse_tokens("ABB")};
  EXPECT_DOUBLE_EQ(diversity(tokens, one_hot), 2.0);
  EXPECT_EQ(embed(one_hot, TokenState{kMask}), (std::vector<double>{0.0, 0.0, 0.0, 1.0}));
  const EmbeddingSpec table{EmbeddingKind::kUserTable, 0, {{0.0}, {2.0}}};
  const std::vector<State> pair = {parse_tokens("AB"), parse_tokens("BB")};
  EXPECT_DOUBLE_EQ(diversity(pair, table), 4.0);
  EXPECT_THROW((void)embed(table, parse_tokens("C")), ContractViolation);
}

TEST(Diversity, InvariantUnderTranslationAndPermutation) {
  std::mt19937_64 rng(5);
  const EmbeddingSpec identity{};
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + static_cast<std::size_t>(trial % 6);
    std::vector<State> states;
    for (std::size_t i = 0; i < k; ++i) states.push_back(testing::random_point(rng, 3, -2.0, 2.0));
    const double base = diversity(states, identity);
    const auto shift = testing::random_point(rng, 3, -5.0, 5.0);
    std::vector<State> shifted;
    for (const auto& s : states) {
      RealState x = as_real(s);
      for (std::size_t d = 0; d < 3; ++d) x[d] += shift[d];
      shifted.push_back(x);
    }
    EXPECT_NEAR(diversity(shifted, identity), base, 1e-9 * (1.0 + base));
    std::vector<State> permuted(states.rbegin(), states.rend());
    EXPECT_NEAR(diversity(permuted, identity), base, 1e-12 * (1.0 + base));
    EXPECT_GE(base, 0.0);
  }
}

TEST(RewardSummary, Examples) {
  const std::vector<double> rewards = {1.0, 3.0, 2.0};
  const auto s = reward_summary(rewards);
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_EQ(s.max, 3.0);
  EXPECT_EQ(s.min, 1.0);
  EXPECT_FALSE(s.attribute_fraction.has_value());
  const std::vector<State> states = {parse_tokens("AA"), parse_tokens("AB"), parse_tokens("BB")};
  const auto with = reward_summary(rewards, states, CountAtLeast{0, 1});
  EXPECT_DOUBLE_EQ(*with.attribute_fraction, 2.0 / 3.0);
  EXPECT_THROW((void)reward_summary(std::vector<double>{}), ContractViolation);
}

TEST(RewardSummary, BaseAttributeRateMatchesExact) {
  const auto process = rare_toy();
  std::vector<double> fractions;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    FKConfig config;
    config.k = 8;
    config.seed = seed;
    const auto result = base_sample(config, *process);
    const auto states = result.ensemble.states();
    fractions.push_back(
        *reward_summary(result.diagnostics.final_rewards, states, rare_attribute()).attribute_fraction);
  }
  const auto stats = mean_and_error(fractions);
  EXPECT_NEAR(stats.mean, 1.0 / 81.0, 3.0 * stats.standard_error);
}

}  // namespace
}  // namespace fksteer
