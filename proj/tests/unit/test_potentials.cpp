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

#include "fksteer/error.hpp"
#include "fksteer/potentials.hpp"

namespace fksteer {
namespace {

constexpr PotentialKind kAllKinds[] = {PotentialKind::kBestOfN, PotentialKind::kDifference, PotentialKind::kMax,
                                       PotentialKind::kSum};

/// Applies every step of a trajectory and returns Σ log G_t; `rewards[i]` is r_phi at t = T-1-i, the last entry r(x0).
double total_log_potential(const PotentialSpec& spec, const std::vector<double>& rewards,
                           const std::vector<bool>& scored) {
  TrajectoryStats stats;
  double total = 0.0;
  const int T = static_cast<int>(rewards.size());
  for (int i = 0; i < T; ++i) {
    const int t = T - 1 - i;
    const bool on = t == 0 || scored[static_cast<std::size_t>(i)];
    const double g = log_potential(spec, stats, rewards[static_cast<std::size_t>(i)], t, on);
    record_step(stats, rewards[static_cast<std::size_t>(i)], g, on);
    total += g;
  }
  return total;
}

TEST(Potentials, MaxTraceExample) {
  const PotentialSpec spec{PotentialKind::kMax, 1.0};
  TrajectoryStats stats;
  const double g2 = log_potential(spec, stats, 0.2, 2);
  EXPECT_DOUBLE_EQ(g2, 0.2);
  record_step(stats, 0.2, g2, true);
  const double g1 = log_potential(spec, stats, 0.5, 1);
  EXPECT_DOUBLE_EQ(g1, 0.5);
  record_step(stats, 0.5, g1, true);
  EXPECT_NEAR(log_potential(spec, stats, 0.3, 0), -0.4, 1e-15);
}

TEST(Potentials, DifferenceAndSumSteps) {
  TrajectoryStats stats;
  const PotentialSpec difference{PotentialKind::kDifference, 2.0};
  EXPECT_DOUBLE_EQ(log_potential(difference, stats, 0.5, 3), 1.0);
  record_step(stats, 0.5, 1.0, true);
  EXPECT_DOUBLE_EQ(log_potential(difference, stats, 0.25, 2), -0.5);
  const PotentialSpec sum{PotentialKind::kSum, 2.0};
  EXPECT_DOUBLE_EQ(log_potential(sum, stats, 0.25, 2), 1.5);
  EXPECT_DOUBLE_EQ(log_potential(PotentialSpec{PotentialKind::kBestOfN, 2.0}, stats, 0.25, 2), 0.0);
}

TEST(Potentials, ProductIsTiltedRewardForEveryKind) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z(0.0, 1.5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int T = 1 + trial % 12;
    std::vector<double> rewards(static_cast<std::size_t>(T));
    std::vector<bool> scored(static_cast<std::size_t>(T));
    for (int i = 0; i < T; ++i) {
      rewards[static_cast<std::size_t>(i)] = z(rng);
      scored[static_cast<std::size_t>(i)] = u(rng) < 0.6;
    }
    const double lambda = 4.0 * u(rng) - 1.0;
    for (PotentialKind kind : kAllKinds) {
      const double total = total_log_potential({kind, lambda}, rewards, scored);
      EXPECT_NEAR(total, lambda * rewards.back(), 1e-10) << potential_name(kind) << " trial " << trial;
    }
  }
}

TEST(Potentials, ZeroLambdaIsUnitPotential) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 3.0);
  for (PotentialKind kind : kAllKinds) {
    TrajectoryStats stats;
    for (int t = 5; t >= 0; --t) {
      const double r = z(rng);
      const double g = log_potential({kind, 0.0}, stats, r, t);
      EXPECT_EQ(g, 0.0);
      record_step(stats, r, g, true);
    }
  }
}

TEST(Potentials, OffScheduleStepsAreUnit) {
  TrajectoryStats stats;
  stats.max_r = 3.0;
  stats.sum_r = 5.0;
  stats.prev_r = 1.0;
  for (PotentialKind kind : kAllKinds) EXPECT_EQ(log_potential({kind, 2.0}, stats, 7.0, 4, false), 0.0);
}

TEST(Potentials, OffScheduleStepLeavesStatsUntouched) {
  TrajectoryStats stats;
  record_step(stats, 2.0, 0.0, false);
  EXPECT_EQ(stats.prev_r, 0.0);
  EXPECT_EQ(stats.sum_r, 0.0);
  EXPECT_EQ(stats.max_r, kNegInf);
}

TEST(Potentials, NamesRoundTrip) {
  for (PotentialKind kind : kAllKinds) EXPECT_EQ(parse_potential(potential_name(kind)), kind);
  EXPECT_THROW((void)parse_potential("product"), ContractViolation);
  EXPECT_FALSE(uses_intermediate_reward(PotentialKind::kBestOfN));
  EXPECT_TRUE(uses_intermediate_reward(PotentialKind::kMax));
}

}  // namespace
}  // namespace fksteer
