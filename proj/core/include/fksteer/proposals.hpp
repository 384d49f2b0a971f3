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

#ifndef FKSTEER_PROPOSALS_HPP
#define FKSTEER_PROPOSALS_HPP

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fksteer/diffusion.hpp"
#include "fksteer/rewards.hpp"

namespace fksteer {

enum class ProposalKind {
  kBaseModel,           ///< tau = p_theta.
  kGradientGuided,      ///< reverse-kernel means shifted by variance * guidance_lambda * grad r.
  kDiscreteNormalized,  ///< tau ∝ p_theta * G_t over the exact one-step support.
};

/// Where the reward gradient of a guided proposal is evaluated.
enum class GradientPoint {
  kDenoisedMean,  ///< at E[x0 | x_{t+1}]
  kRawState,      ///< at x_{t+1} itself
};

struct ProposalSpec {
  ProposalKind kind = ProposalKind::kBaseModel;
  double guidance_lambda = 0.0;
  GradientPoint gradient_at = GradientPoint::kDenoisedMean;
};

[[nodiscard]] std::string_view proposal_name(ProposalKind kind) noexcept;
[[nodiscard]] ProposalKind parse_proposal(std::string_view name);

/// Intermediate reward and log-potential of one candidate x_t.
struct CandidateScore {
  double reward = 0.0;
  double log_potential = 0.0;
};

/// Scores candidate number `index` of a step.
using CandidateScorer = std::function<CandidateScore(const State& candidate, std::size_t index)>;

struct Proposal {
  State state;
  /// log p_theta(x_t | x_{t+1}) - log tau(x_t | x_{t+1}).
  double log_correction = 0.0;
  /// Set when the proposal already scored the chosen state; the caller must reuse it.
  std::optional<CandidateScore> score;
};

/// Throws Unsupported when the proposal cannot run on this process/reward pairing.
void check_compatible(const ProposalSpec& spec, const DiffusionProcess& process, const TerminalReward& reward);

/**
 * Draws x_t from the proposal and returns the importance correction against the base kernel.
 *
 * `scorer` is consulted only by the discrete-normalized proposal, and only when non-null (a null scorer
 * means a unit potential at this step, where tau = p_theta). Its chosen candidate's score is returned so
 * that the weight G_t p/tau = Σ_x p(x) G_t(x) is exact.
 */
[[nodiscard]] Proposal propose_and_correct(const ProposalSpec& spec, const DiffusionProcess& process,
                                           const State& x_next, int t, const TerminalReward& reward,
                                           const Context& context, Stream& stream,
                                           const CandidateScorer* scorer = nullptr);

/// tau_i = p_i exp(g_i) / Σ_j p_j exp(g_j). `log_normalizer` receives log Σ_j p_j exp(g_j).
[[nodiscard]] std::vector<double> tilt_and_normalize(std::span<const double> base_probabilities,
                                                     std::span<const double> log_potentials,
                                                     double* log_normalizer = nullptr);

}  // namespace fksteer

#endif
