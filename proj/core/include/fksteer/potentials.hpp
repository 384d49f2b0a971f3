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

#ifndef FKSTEER_POTENTIALS_HPP
#define FKSTEER_POTENTIALS_HPP

#include <string>
#include <string_view>

#include "fksteer/numeric.hpp"

/**
 * \file
 * \brief Potential families G_t.
 *
 * Every family satisfies Π_t G_t = exp(λ r(x0)) along each lineage: the step values are free, and the
 * terminal potential is λ r(x0) minus everything applied before it.
 */

namespace fksteer {

enum class PotentialKind {
  kBestOfN,     ///< G_t = 1 for t >= 1, G_0 = exp(λ r(x0)): importance sampling.
  kDifference,  ///< G_t = exp(λ (r_phi(x_t) - r_phi(x_prev))).
  kMax,         ///< G_t = exp(λ max_s r_phi(x_s)).
  kSum,         ///< G_t = exp(λ Σ_s r_phi(x_s)).
};

[[nodiscard]] std::string_view potential_name(PotentialKind kind) noexcept;

/// Throws ContractViolation for unknown names.
[[nodiscard]] PotentialKind parse_potential(std::string_view name);

[[nodiscard]] constexpr bool uses_intermediate_reward(PotentialKind kind) noexcept {
  return kind != PotentialKind::kBestOfN;
}

struct PotentialSpec {
  PotentialKind kind = PotentialKind::kMax;
  double lambda = 1.0;
};

/// Lineage state consumed by the potentials. Copied, never reset, when a particle is resampled.
struct TrajectoryStats {
  double prev_r = 0.0;  ///< r_phi at the previous scored step; r_phi(x_T) = 0.
  double max_r = kNegInf;
  double sum_r = 0.0;
  double cum_log_potential = 0.0;  ///< Σ log G_s over every step applied so far.
};

/**
 * log G_t for a particle whose stats are current through t + 1.
 *
 * `r_now` is r_phi(x_t), or r(x0) when t = 0. Off-schedule steps (`scored` false, t >= 1) have unit
 * potential. At t = 0 every kind returns λ r(x0) - cum_log_potential.
 */
[[nodiscard]] double log_potential(const PotentialSpec& spec, const TrajectoryStats& stats, double r_now, int t,
                                   bool scored = true) noexcept;

/// Folds a scored step into the stats after log_potential was applied.
void record_step(TrajectoryStats& stats, double r_now, double applied_log_potential, bool scored) noexcept;

}  // namespace fksteer

#endif
