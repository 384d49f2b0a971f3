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

#include "fksteer/potentials.hpp"

#include <algorithm>

#include "fksteer/error.hpp"

namespace fksteer {

std::string_view potential_name(PotentialKind kind) noexcept {
  switch (kind) {
    case PotentialKind::kBestOfN:
      return "bon";
    case PotentialKind::kDifference:
      return "difference";
    case PotentialKind::kMax:
      return "max";
    case PotentialKind::kSum:
      return "sum";
  }
  return "unknown";
}

PotentialKind parse_potential(std::string_view name) {
  if (name == "bon") return PotentialKind::kBestOfN;
  if (name == "difference") return PotentialKind::kDifference;
  if (name == "max") return PotentialKind::kMax;
  if (name == "sum") return PotentialKind::kSum;
  throw ContractViolation("unknown potential '" + std::string(name) + "' (expected bon, difference, max, sum)");
}

double log_potential(const PotentialSpec& spec, const TrajectoryStats& stats, double r_now, int t,
                     bool scored) noexcept {
  if (spec.lambda == 0.0) return 0.0;
  if (t == 0) return spec.lambda * r_now - stats.cum_log_potential;
  if (!scored) return 0.0;
  switch (spec.kind) {
    case PotentialKind::kBestOfN:
      return 0.0;
    case PotentialKind::kDifference:
      return spec.lambda * (r_now - stats.prev_r);
    case PotentialKind::kMax:
      return spec.lambda * std::max(stats.max_r, r_now);
    case PotentialKind::kSum:
      return spec.lambda * (stats.sum_r + r_now);
  }
  return 0.0;
}

void record_step(TrajectoryStats& stats, double r_now, double applied_log_potential, bool scored) noexcept {
  stats.cum_log_potential += applied_log_potential;
  if (!scored) return;
  stats.prev_r = r_now;
  stats.max_r = std::max(stats.max_r, r_now);
  stats.sum_r += r_now;
}

}  // namespace fksteer
