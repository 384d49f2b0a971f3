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
#include <vector>

#include "fksteer/error.hpp"
#include "fksteer/numeric.hpp"
#include "fksteer/state.hpp"

namespace fksteer {
namespace {

TEST(Numeric, LogSumExpMatchesDirectSum) {
  const std::vector<double> v = {0.1, -2.0, 1.5};
  double direct = 0.0;
  for (double x : v) direct += std::exp(x);
  EXPECT_NEAR(log_sum_exp(v), std::log(direct), 1e-14);
}

TEST(Numeric, LogSumExpIsShiftStable) {
  const std::vector<double> v = {1000.0, 1000.0};
  EXPECT_DOUBLE_EQ(log_sum_exp(v), 1000.0 + std::log(2.0));
  const std::vector<double> low = {-1000.0, -1000.0};
  EXPECT_DOUBLE_EQ(log_sum_exp(low), -1000.0 + std::log(2.0));
}

TEST(Numeric, LogSumExpOfNegInfinities) {
  const std::vector<double> v = {kNegInf, kNegInf};
  EXPECT_EQ(log_sum_exp(v), kNegInf);
}

TEST(Numeric, LogMeanExpExamples) {
  const std::vector<double> v = {0.0, std::log(3.0)};
  EXPECT_NEAR(log_mean_exp(v), std::log(2.0), 1e-15);
  const std::vector<double> one = {0.7};
  EXPECT_EQ(log_mean_exp(one), 0.7);
}

TEST(Numeric, NormalizeLogWeightsProperty) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 20.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> lw(1 + trial % 17);
    for (auto& x : lw) x = z(rng);
    const auto w = normalize_log_weights(lw);
    double total = 0.0;
    for (double x : w) {
      EXPECT_GE(x, 0.0);
      total += x;
    }
    EXPECT_NEAR(total, 1.0, 1e-12) << "trial " << trial;
  }
}

TEST(Numeric, LogNormalIsotropic) {
  const std::vector<double> x = {1.0, 2.0};
  const std::vector<double> m = {0.0, 0.0};
  const double expected = -std::log(2.0 * M_PI * 2.0) - (1.0 + 4.0) / (2.0 * 2.0);
  EXPECT_NEAR(log_normal_isotropic(x, m, 2.0), expected, 1e-14);
}

TEST(State, FormatAndParseRoundTrip) {
  const TokenState x = {0, 1, kMask, 2};
  EXPECT_EQ(format_tokens(x), "AB_C");
  EXPECT_EQ(parse_tokens("AB_C"), x);
}

TEST(State, ParseRejectsLowercase) { EXPECT_THROW((void)parse_tokens("ab"), ContractViolation); }

TEST(State, HasMask) {
  EXPECT_TRUE(has_mask({0, kMask}));
  EXPECT_FALSE(has_mask({0, 1}));
}

TEST(State, AccessorsCheckAlternative) {
  const State real = RealState{1.0};
  const State tokens = TokenState{0};
  EXPECT_NO_THROW((void)as_real(real));
  EXPECT_THROW((void)as_tokens(real), ContractViolation);
  EXPECT_THROW((void)as_real(tokens), ContractViolation);
}

}  // namespace
}  // namespace fksteer
