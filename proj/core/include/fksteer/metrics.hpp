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

#ifndef FKSTEER_METRICS_HPP
#define FKSTEER_METRICS_HPP

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fksteer/rewards.hpp"
#include "fksteer/state.hpp"

namespace fksteer {

enum class EmbeddingKind {
  kIdentity,       ///< real states as-is; token states as their integer codes
  kOneHotFlatten,  ///< V + 1 slots per position, the last one for the mask
  kUserTable,      ///< per-token vectors, concatenated over positions
};

[[nodiscard]] EmbeddingKind parse_embedding(std::string_view name);

/// Map State -> R^n used by the diversity metric.
struct EmbeddingSpec {
  EmbeddingKind kind = EmbeddingKind::kIdentity;
  std::size_t vocab_size = 0;                ///< one-hot only
  std::vector<std::vector<double>> table;    ///< user-table only; one row per token
};

[[nodiscard]] std::vector<double> embed(const EmbeddingSpec& spec, const State& state);

/// Mean pairwise squared embedding distance, 2/(k(k-1)) Σ_{i<j} |f(x_i) - f(x_j)|^2. Requires k >= 2.
[[nodiscard]] double diversity(std::span<const State> states, const EmbeddingSpec& spec);

struct RewardSummary {
  double mean = 0.0;
  double max = 0.0;
  double min = 0.0;
  std::optional<double> attribute_fraction;
};

[[nodiscard]] RewardSummary reward_summary(std::span<const double> rewards);

/// Also reports the fraction of `states` satisfying `predicate`.
[[nodiscard]] RewardSummary reward_summary(std::span<const double> rewards, std::span<const State> states,
                                           const AttributePredicate& predicate);

}  // namespace fksteer

#endif
