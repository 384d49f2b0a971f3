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

#ifndef FKSTEER_NUMERIC_HPP
#define FKSTEER_NUMERIC_HPP

#include <limits>
#include <span>
#include <vector>

namespace fksteer {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log Σ exp(v_i), max-shifted. Returns -inf for an empty span or all -inf inputs.
[[nodiscard]] double log_sum_exp(std::span<const double> values) noexcept;

/// log (1/n) Σ exp(v_i).
[[nodiscard]] double log_mean_exp(std::span<const double> values) noexcept;

/// exp(v_i - log_sum_exp(v)); all zeros when every input is -inf.
[[nodiscard]] std::vector<double> normalize_log_weights(std::span<const double> log_weights);

/// log N(x; mean, variance * I) for an isotropic Gaussian.
[[nodiscard]] double log_normal_isotropic(std::span<const double> x, std::span<const double> mean,
                                          double variance) noexcept;

}  // namespace fksteer

#endif
