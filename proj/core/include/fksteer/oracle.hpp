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

#ifndef FKSTEER_ORACLE_HPP
#define FKSTEER_ORACLE_HPP

#include <cstddef>
#include <iosfwd>
#include <map>
#include <vector>

#include "fksteer/masked_diffusion.hpp"
#include "fksteer/rewards.hpp"

namespace fksteer {

using Distribution = std::map<TokenState, double>;

inline constexpr std::size_t kMaxOracleVocab = 8;
inline constexpr std::size_t kMaxOracleLength = 6;

/// The tilted target p(x0) exp(λ r(x0)) / Z over every x0 outcome.
struct ExactDistribution {
  Distribution probability;
  double Z = 1.0;
  double log_Z = 0.0;
};

/// Exact marginal of x_t at one step of the reverse chain.
struct StepMarginal {
  int t = 0;
  Distribution probability;
};

/// Marginals of x_T, x_{T-1}, ..., x_0 (index 0 is t = T), computed by pushing mass through every
/// reverse transition. Throws EnumerationTooLarge beyond V = 8 or L = 6.
[[nodiscard]] std::vector<StepMarginal> enumerate_marginals(const MaskedDiscreteDiffusion& process,
                                                            const Context& context = {});

/// The x0 marginal of the reverse chain.
[[nodiscard]] Distribution enumerate_x0_marginal(const MaskedDiscreteDiffusion& process, const Context& context = {});

[[nodiscard]] ExactDistribution exact_tilted_target(const MaskedDiscreteDiffusion& process,
                                                    const TerminalReward& reward, double lambda,
                                                    const Context& context = {});

/// E[exp(r(x0)) | x_t] and P(x_t) for one reachable state.
struct ConditionalEntry {
  double probability = 0.0;
  double expected_exp_reward = 0.0;
};

/// Per t (indexed by t itself, 0..T), every reachable x_t with its exact conditional expectation.
using ConditionalTable = std::vector<std::map<TokenState, ConditionalEntry>>;

[[nodiscard]] ConditionalTable exact_conditional_exp_reward(const MaskedDiscreteDiffusion& process,
                                                            const TerminalReward& reward,
                                                            const Context& context = {});

/// ½ Σ |p(x) - q(x)| over the union of supports.
[[nodiscard]] double tv_distance(const Distribution& p, const Distribution& q);

/// TV between the normalized counts and the exact target. Throws ContractViolation on empty counts.
[[nodiscard]] double tv_distance(const std::map<TokenState, std::size_t>& counts, const ExactDistribution& exact);

/// Two-column text, `outcome<TAB>probability`, preceded by a `# Z` comment line.
void write_distribution(std::ostream& out, const ExactDistribution& distribution);

}  // namespace fksteer

#endif
