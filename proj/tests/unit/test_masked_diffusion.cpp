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
#include <map>
#include <random>

#include "fksteer/error.hpp"
#include "fksteer/masked_diffusion.hpp"
#include "fksteer/oracle.hpp"
#include "toys.hpp"

namespace fksteer {
namespace {

using testing::markov_toy;
using testing::reference_toy;

// Direct product of the sticky chain in toys.hpp; independent of the filtering code.
double chain_probability(const TokenState& x) {
  const double initial[] = {0.5, 0.3, 0.2};
  const double transition[3][3] = {{0.7, 0.2, 0.1}, {0.1, 0.6, 0.3}, {0.25, 0.25, 0.5}};
  double p = initial[x[0]];
  for (std::size_t i = 1; i < x.size(); ++i) p *= transition[x[i - 1]][x[i]];
  return p;
}

std::vector<TokenState> all_sequences(std::size_t vocab, std::size_t length) {
  std::vector<TokenState> out;
  std::size_t total = 1;
  for (std::size_t i = 0; i < length; ++i) total *= vocab;
  for (std::size_t code = 0; code < total; ++code) {
    TokenState x(length);
    std::size_t rest = code;
    for (std::size_t i = 0; i < length; ++i) {
      x[i] = static_cast<Token>(rest % vocab);
      rest /= vocab;
    }
    out.push_back(x);
  }
  return out;
}

/// Posterior marginals of x0 given the revealed tokens, by brute force over every sequence.
TokenPosterior brute_posterior(const TokenState& x_t, std::size_t vocab) {
  TokenPosterior out(x_t.size(), std::vector<double>(vocab, 0.0));
  double total = 0.0;
  for (const auto& x : all_sequences(vocab, x_t.size())) {
    bool consistent = true;
    for (std::size_t i = 0; i < x.size(); ++i) consistent = consistent && (x_t[i] == kMask || x_t[i] == x[i]);
    if (!consistent) continue;
    const double p = chain_probability(x);
    total += p;
    for (std::size_t i = 0; i < x.size(); ++i) out[i][static_cast<std::size_t>(x[i])] += p;
  }
  for (auto& row : out) {
    for (auto& v : row) v /= total;
  }
  return out;
}

TEST(MaskedDiffusion, ScheduleEndpoints) {
  const auto process = reference_toy();
  EXPECT_EQ(process->num_steps(), 8);
  EXPECT_EQ(process->mask_fraction(0), 0.0);
  EXPECT_EQ(process->mask_fraction(8), 1.0);
  EXPECT_DOUBLE_EQ(process->stay_masked_probability(3), 3.0 / 4.0);
  EXPECT_EQ(process->stay_masked_probability(0), 0.0);
}

TEST(MaskedDiffusion, RejectsBadSchedules) {
  auto data = std::make_shared<const MarkovChainModel>(MarkovChainModel::uniform(2, 2));
  EXPECT_THROW(MaskedDiscreteDiffusion(data, {0.0, 0.5}), ContractViolation);
  EXPECT_THROW(MaskedDiscreteDiffusion(data, {0.1, 1.0}), ContractViolation);
  EXPECT_THROW(MaskedDiscreteDiffusion(data, {0.0, 0.6, 0.4, 1.0}), ContractViolation);
}

TEST(MaskedDiffusion, ForwardAtTerminalMasksEverything) {
  const auto process = reference_toy();
  Stream s(1, 0, 0, Purpose::kForward);
  EXPECT_EQ(as_tokens(process->forward_sample(TokenState{0, 1}, 8, s)), (TokenState{kMask, kMask}));
  EXPECT_EQ(as_tokens(process->forward_sample(TokenState{0, 1}, 0, s)), (TokenState{0, 1}));
}

TEST(MaskedDiffusion, ForwardMaskRate) {
  const auto process = markov_toy(3, 6);
  Stream s(2, 0, 0, Purpose::kForward);
  const int n = 20000;
  int masked = 0;
  for (int i = 0; i < n; ++i) {
    const State x = process->forward_sample(TokenState{0, 1, 2}, 2, s);
    for (Token token : as_tokens(x)) masked += token == kMask;
  }
  const double p = 2.0 / 6.0;
  const double trials = 3.0 * n;
  EXPECT_NEAR(masked / trials, p, 4.0 * std::sqrt(p * (1 - p) / trials));
}

TEST(MaskedDiffusion, ForwardRejectsBadTime) {
  const auto process = reference_toy();
  Stream s(1, 0, 0, Purpose::kForward);
  EXPECT_THROW((void)process->forward_sample(TokenState{0, 1}, 9, s), ContractViolation);
  EXPECT_THROW((void)process->forward_sample(TokenState{0, 1}, -1, s), ContractViolation);
}

TEST(MaskedDiffusion, FullyRevealedReverseIsIdentity) {
  const auto process = markov_toy();
  Stream s(1, 0, 0, Purpose::kPropose);
  const auto draw = process->reverse_sample(TokenState{2, 0, 1}, 3, {}, s);
  EXPECT_EQ(as_tokens(draw.state), (TokenState{2, 0, 1}));
  EXPECT_EQ(draw.log_density, 0.0);
}

TEST(MaskedDiffusion, ReverseSupportSumsToOne) {
  const auto process = markov_toy();
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    TokenState x(3);
    for (auto& token : x) token = static_cast<Token>(static_cast<int>(rng() % 4) - 1);
    const int t = static_cast<int>(rng() % 6);
    double total = 0.0;
    for (const auto& [x_t, p] : process->reverse_support(x, t, {})) {
      total += p;
      EXPECT_NEAR(std::log(p), process->reverse_log_density(x_t, x, t, {}), 1e-12);
    }
    EXPECT_NEAR(total, 1.0, 1e-12) << format_tokens(x) << " t=" << t;
  }
}

TEST(MaskedDiffusion, SampledLogDensityMatchesEvaluation) {
  const auto process = markov_toy();
  for (std::uint64_t i = 0; i < 200; ++i) {
    Stream s(9, 0, i, Purpose::kPropose);
    const TokenState x_next = {kMask, 1, kMask};
    const int t = static_cast<int>(i % 6);
    const auto draw = process->reverse_sample(x_next, t, {}, s);
    EXPECT_NEAR(draw.log_density, process->reverse_log_density(draw.state, x_next, t, {}), 1e-12);
  }
}

TEST(MaskedDiffusion, EnumeratedReverseChainReproducesData) {
  const auto process = markov_toy(3, 6);
  const auto marginal = enumerate_x0_marginal(*process);
  double total = 0.0;
  for (const auto& x : all_sequences(3, 3)) {
    const auto it = marginal.find(x);
    ASSERT_NE(it, marginal.end()) << format_tokens(x);
    EXPECT_NEAR(it->second, chain_probability(x), 1e-12) << format_tokens(x);
    total += it->second;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(marginal.size(), 27u);
}

TEST(MaskedDiffusion, IntermediateMarginalsMatchForwardProcess) {
  // P(x_t) from the reverse chain equals Σ_x0 p(x0) q(x_t | x0).
  const auto process = markov_toy(3, 6);
  const auto marginals = enumerate_marginals(*process);
  for (const auto& step : marginals) {
    const double m = process->mask_fraction(step.t);
    for (const auto& [x_t, p] : step.probability) {
      double expected = 0.0;
      for (const auto& x0 : all_sequences(3, 3)) {
        double q = 1.0;
        for (std::size_t i = 0; i < 3; ++i) {
          if (x_t[i] == kMask) {
            q *= m;
          } else {
            q *= (x_t[i] == x0[i]) ? 1.0 - m : 0.0;
          }
        }
        expected += chain_probability(x0) * q;
      }
      EXPECT_NEAR(p, expected, 1e-12) << format_tokens(x_t) << " t=" << step.t;
    }
  }
}

TEST(MaskedDiffusion, UniformRolloutsAreUniform) {
  const auto process = reference_toy();
  std::map<TokenState, int> counts;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    Stream prior(77, 8, static_cast<std::uint64_t>(i), Purpose::kPrior);
    Stream s(77, 0, static_cast<std::uint64_t>(i), Purpose::kPropose);
    counts[as_tokens(process->rollout(process->sample_prior({}, prior), 8, {}, s))]++;
  }
  ASSERT_EQ(counts.size(), 4u);
  for (const auto& [x, c] : counts) EXPECT_NEAR(c / static_cast<double>(n), 0.25, 0.01) << format_tokens(x);
}

TEST(MaskedDiffusion, DenoisedPosteriorMatchesBruteForce) {
  const auto process = markov_toy();
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    TokenState x(3);
    for (auto& token : x) token = static_cast<Token>(static_cast<int>(rng() % 4) - 1);
    const int t = 1 + static_cast<int>(rng() % 6);
    const auto posterior = std::get<TokenPosterior>(process->denoised_mean(x, t, {}));
    const auto expected = brute_posterior(x, 3);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t v = 0; v < 3; ++v) EXPECT_NEAR(posterior[i][v], expected[i][v], 1e-12);
    }
  }
}

TEST(MaskedDiffusion, DenoisedAtZeroIsPointMass) {
  const auto process = markov_toy();
  const auto posterior = std::get<TokenPosterior>(process->denoised_mean(TokenState{2, 0, 1}, 0, {}));
  EXPECT_EQ(posterior[0], (std::vector<double>{0, 0, 1}));
  EXPECT_EQ(posterior[1], (std::vector<double>{1, 0, 0}));
}

TEST(MaskedDiffusion, ContextPrefixPinsTokens) {
  const auto process = markov_toy();
  Context context;
  context.prefix = {1};
  for (std::uint64_t i = 0; i < 50; ++i) {
    Stream s(3, 0, i, Purpose::kPropose);
    const auto x0 = as_tokens(process->rollout(TokenState(3, kMask), 6, context, s));
    EXPECT_EQ(x0[0], 1);
    EXPECT_FALSE(has_mask(x0));
  }
  EXPECT_THROW((void)process->reverse_support(TokenState{0, kMask, kMask}, 2, context), ContractViolation);
}

TEST(MaskedDiffusion, TableModelMatchesTable) {
  std::vector<double> probabilities = {0.1, 0.2, 0.3, 0.4};
  auto data = std::make_shared<const TableModel>(2, 2, probabilities);
  MaskedDiscreteDiffusion process(data, MaskedDiscreteDiffusion::uniform_schedule(4));
  const auto marginal = enumerate_x0_marginal(process);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(marginal.at(data->decode(i)), probabilities[i], 1e-12);
}

TEST(MaskedDiffusion, ReverseSupportRefusesHugeEnumeration) {
  auto data = std::make_shared<const MarkovChainModel>(MarkovChainModel::uniform(8, 12));
  MaskedDiscreteDiffusion process(data, MaskedDiscreteDiffusion::uniform_schedule(4));
  EXPECT_THROW((void)process.reverse_support(TokenState(12, kMask), 2, {}), EnumerationTooLarge);
}

}  // namespace
}  // namespace fksteer
