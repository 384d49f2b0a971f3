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

#ifndef FKSTEER_ENGINE_HPP
#define FKSTEER_ENGINE_HPP

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "fksteer/diffusion.hpp"
#include "fksteer/metrics.hpp"
#include "fksteer/potentials.hpp"
#include "fksteer/proposals.hpp"
#include "fksteer/rewards.hpp"

namespace fksteer {

enum class ScheduleMode { kEveryStep, kInterval };

/// Direction of the effective-sample-size gate.
enum class EssGate {
  kOff,           ///< never skip
  kPaperLiteral,  ///< skip when ESS < fraction * k
  kStandard,      ///< skip when ESS >= fraction * k
};

enum class Resampler { kMultinomial, kSystematic };

[[nodiscard]] EssGate parse_ess_gate(std::string_view name);
[[nodiscard]] std::string_view ess_gate_name(EssGate gate) noexcept;
[[nodiscard]] Resampler parse_resampler(std::string_view name);

/// When potentials are applied and resampling may happen.
struct ResampleSchedule {
  ScheduleMode mode = ScheduleMode::kEveryStep;
  std::set<int> steps;  ///< the set R in interval mode; must contain 0
  EssGate gate = EssGate::kPaperLiteral;
  double ess_threshold_fraction = 0.5;

  [[nodiscard]] static ResampleSchedule every_step(EssGate gate = EssGate::kPaperLiteral);
  [[nodiscard]] static ResampleSchedule interval(std::set<int> steps, EssGate gate = EssGate::kPaperLiteral);

  [[nodiscard]] bool scheduled(int t) const noexcept {
    return t == 0 || mode == ScheduleMode::kEveryStep || steps.contains(t);
  }
};

struct Particle {
  State state;
  double log_weight = 0.0;
  TrajectoryStats stats;
  std::size_t lineage_id = 0;
};

struct Ensemble {
  std::vector<Particle> particles;
  int t = 0;

  [[nodiscard]] std::size_t size() const noexcept { return particles.size(); }
  [[nodiscard]] std::vector<State> states() const;
  [[nodiscard]] std::vector<double> log_weights() const;
};

struct FKConfig {
  std::size_t k = 4;
  double lambda = 1.0;
  PotentialKind potential = PotentialKind::kMax;
  ProposalSpec proposal;
  RewardSpec reward{TerminalReward{TokenCount{0}}};
  ResampleSchedule schedule;
  Resampler resampler = Resampler::kMultinomial;
  /// Converts the weighted ensemble at t = 0 into unweighted target samples.
  bool final_resample = true;
  std::uint64_t seed = 0;
  Context context;
  /// Worker threads for per-particle work. Results do not depend on it.
  std::size_t threads = 1;
  /// When set, the diversity of the ensemble is recorded after every step.
  std::optional<EmbeddingSpec> diversity_embedding;
};

struct RunDiagnostics {
  std::vector<int> steps;          ///< time index of each trace entry, T-1 down to 0
  std::vector<double> ess_trace;   ///< ESS after reweighting at each step
  std::vector<int> resample_events;
  double log_Z_hat = 0.0;
  std::vector<double> final_rewards;   ///< r(x0) per particle before the final resample
  std::size_t best_index = 0;          ///< argmax of final_rewards, lowest index on ties
  State best_state;
  std::vector<double> sample_rewards;  ///< r(x0) per particle of the returned ensemble
  std::vector<double> diversity_trace;
};

struct SamplerResult {
  Ensemble ensemble;
  RunDiagnostics diagnostics;
};

/// 1 / Σ w_i^2 of normalized weights. Throws ContractViolation unless weights are >= 0 and sum to 1 within 1e-9.
[[nodiscard]] double ess(std::span<const double> normalized_weights);

/// k draws with replacement proportional to exp(log_weight). Copies state and stats, resets log-weights
/// to 0. Throws DegenerateEnsemble when every weight is zero.
[[nodiscard]] Ensemble resample(const Ensemble& ensemble, Stream& stream, Resampler resampler = Resampler::kMultinomial);

/// Whether to resample at t. Uniform weights (ESS = k) never resample.
[[nodiscard]] bool should_resample(int t, const ResampleSchedule& schedule, double ess_value, std::size_t k) noexcept;

/// Throws ContractViolation/Unsupported when the config cannot run on the process.
void validate(const FKConfig& config, const DiffusionProcess& process);

/// Feynman-Kac steering: propose, reweight, resample from t = T-1 down to 0.
[[nodiscard]] SamplerResult fk_sample(const FKConfig& config, const DiffusionProcess& process);

/// The SMC estimate log Ẑ of log E[Π G_t] accumulated by a completed run.
[[nodiscard]] double estimate_log_partition(const RunDiagnostics& diagnostics) noexcept;

/// k independent rollouts weighted by exp(λ r(x0)) and left unresampled.
[[nodiscard]] SamplerResult best_of_n(const FKConfig& config, const DiffusionProcess& process);

/// k independent base-model rollouts; λ and the potential are ignored.
[[nodiscard]] SamplerResult base_sample(const FKConfig& config, const DiffusionProcess& process);

/// Index chosen by one SVDD selection: argmax of `log_weights` when greedy (lowest index on ties),
/// otherwise a categorical draw on their normalized exponentials.
[[nodiscard]] std::size_t svdd_select(std::span<const double> log_weights, bool greedy, Stream& stream);

/// SVDD: at every step k proposals from one state, one selected, duplicated k-fold. `greedy` is λ = ∞.
[[nodiscard]] SamplerResult svdd_sample(const FKConfig& config, const DiffusionProcess& process, bool greedy = false);

}  // namespace fksteer

#endif
