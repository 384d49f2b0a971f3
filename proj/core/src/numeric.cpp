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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fksteer/numeric.hpp"

namespace fksteer {

double log_sum_exp(std::span<const double> values) noexcept {
  if (values.empty()) return kNegInf;
  const double shift = *std::max_element(values.begin(), values.end());
  if (shift == kNegInf) return kNegInf;
  if (shift == std::numeric_limits<double>::infinity()) return shift;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - shift);
  return shift + std::log(sum);
}

double log_mean_exp(std::span<const double> values) noexcept {
  if (values.empty()) return kNegInf;
  return log_sum_exp(values) - std::log(static_cast<double>(values.size()));
}

std::vector<double> normalize_log_weights(std::span<const double> log_weights) {
  std::vector<double> out(log_weights.size(), 0.0);
  const double total = log_sum_exp(log_weights);
  if (total == kNegInf) return out;
  for (std::size_t i = 0; i < log_weights.size(); ++i) out[i] = std::exp(log_weights[i] - total);
  return out;
}

double log_normal_isotropic(std::span<const double> x, std::span<const double> mean, double variance) noexcept {
  double squared = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - mean[i];
    squared += diff * diff;
  }
  const double dim = static_cast<double>(x.size());
  return -0.5 * squared / variance - 0.5 * dim * std::log(2.0 * std::numbers::pi * variance);
}

}  // namespace fksteer
