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

#include "fksteer/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fksteer/error.hpp"
#include "fksteer/numeric.hpp"
#include "fksteer/parallel.hpp"

namespace fksteer {

namespace {

// Relative slack under which an ESS counts as k, i.e. the weights are uniform.
constexpr double kUniformEssSlack = 1e-9;

std::size_t argmax_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

void check_reward(double r, std::size_t particle, int t) {
  if (!std::isfinite(r)) throw NonFiniteReward(particle, t, r);
}

double reward_at(const RewardSpec& spec, const DiffusionProcess& process, const State& x, int t,
                 const Context& context, Stream& stream) {
  return t == 0 ? spec.terminal(x, context) : intermediate_reward(spec, process, x, t, context, stream);
}

}  // namespace

EssGate parse_ess_gate(std::string_view name) {
  if (name == "off") return EssGate::kOff;
  if (name == "paper-literal") return EssGate::kPaperLiteral;
  if (name == "standard") return EssGate::kStandard;
  throw ContractViolation("unknown ESS gate '" + std::string(name) + "' (expected off, paper-literal, standard)");
}

std::string_view ess_gate_name(EssGate gate) noexcept {
  switch (gate) {
    case EssGate::kOff:
      return "off";
    case EssGate::kPaperLiteral:
      return "paper-literal";
    case EssGate::kStandard:
      return "standard";
  }
  return "unknown";
}

Resampler parse_resampler(std::string_view name) {
  if (name == "multinomial") return Resampler::kMultinomial;
  if (name == "systematic") return Resampler::kSystematic;
  throw ContractViolation("unknown resampler '" + std::string(name) + "' (expected multinomial, systematic)");
}

ResampleSchedule ResampleSchedule::every_step(EssGate gate) {
  ResampleSchedule schedule;
  schedule.gate = gate;
  return schedule;
}

ResampleSchedule ResampleSchedule::interval(std::set<int> steps, EssGate gate) {
  ResampleSchedule schedule;
  schedule.mode = ScheduleMode::kInterval;
  schedule.steps = std::move(steps);
  schedule.gate = gate;
  return schedule;
}

std::vector<State> Ensemble::states() const {
  std::vector<State> out;
  out.reserve(particles.size());
  for (const auto& p : particles) out.push_back(p.state);
  return out;
}

std::vector<double> Ensemble::log_weights() const {
  std::vector<double> out;
  out.reserve(particles.size());
  for (const auto& p : particles) out.push_back(p.log_weight);
  return out;
}

double ess(std::span<const double> normalized_weights) {
  if (normalized_weights.empty()) throw ContractViolation("ESS of an empty weight vector");
  double total = 0.0;
  double squares = 0.0;
  for (double w : normalized_weights) {
    if (!(w >= 0.0)) throw ContractViolation("ESS weights must be nonnegative");
    total += w;
    squares += w * w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ContractViolation("ESS weights sum to " + std::to_string(total) + ", not 1");
  }
  const double k = static_cast<double>(normalized_weights.size());
  return std::clamp(1.0 / squares, 1.0, k);
}

Ensemble resample(const Ensemble& ensemble, Stream& stream, Resampler resampler) {
  const auto weights = normalize_log_weights(ensemble.log_weights());
  if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; })) {
    throw DegenerateEnsemble(ensemble.t);
  }
  const std::size_t k = ensemble.size();
  std::vector<double> cumulative(k);
  double running = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    running += weights[i];
    cumulative[i] = running;
  }
  // The last positive weight absorbs rounding in the running sum.
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (weights[i] > 0.0) last_positive = i;
  }
  auto locate = [&](double u) {
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u * running);
    const auto index = static_cast<std::size_t>(it - cumulative.begin());
    return std::min(index, last_positive);
  };

  Ensemble out;
  out.t = ensemble.t;
  out.particles.reserve(k);
  const double offset = resampler == Resampler::kSystematic ? stream.uniform() : 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double u = resampler == Resampler::kSystematic ? (offset + static_cast<double>(i)) / static_cast<double>(k)
                                                         : stream.uniform();
    Particle copy = ensemble.particles[locate(u)];
    copy.log_weight = 0.0;
    out.particles.push_back(std::move(copy));
  }
  return out;
}

bool should_resample(int t, const ResampleSchedule& schedule, double ess_value, std::size_t k) noexcept {
  if (!schedule.scheduled(t)) return false;
  const double kd = static_cast<double>(k);
  if (ess_value >= kd * (1.0 - kUniformEssSlack)) return false;
  const double threshold = schedule.ess_threshold_fraction * kd;
  switch (schedule.gate) {
    case EssGate::kOff:
      return true;
    case EssGate::kPaperLiteral:
      return ess_value >= threshold;
    case EssGate::kStandard:
      return ess_value < threshold;
  }
  return true;
}

void validate(const FKConfig& config, const DiffusionProcess& process) {
  if (config.k < 1) throw ContractViolation("particle count k must be >= 1");
  if (!std::isfinite(config.lambda) || config.lambda < 0.0) {
    throw ContractViolation("lambda must be finite and nonnegative");
  }
  const auto& schedule = config.schedule;
  if (!(schedule.ess_threshold_fraction > 0.0 && schedule.ess_threshold_fraction <= 1.0)) {
    throw ContractViolation("ESS threshold fraction must lie in (0, 1]");
  }
  if (schedule.mode == ScheduleMode::kInterval) {
    if (!schedule.steps.contains(0)) throw ContractViolation("interval resampling schedule must contain t = 0");
    for (int t : schedule.steps) {
      if (t < 0 || t > process.num_steps()) {
        throw ContractViolation("resampling step " + std::to_string(t) + " outside the time grid [0, " +
                                std::to_string(process.num_steps()) + "]");
      }
    }
  }
  if (const auto* many = std::get_if<ManySampleEstimator>(&config.reward.intermediate); many && many->samples == 0) {
    throw ContractViolation("many-sample estimator needs N >= 1");
  }
  check_compatible(config.proposal, process, config.reward.terminal);
}

SamplerResult fk_sample(const FKConfig& config, const DiffusionProcess& process) {
  validate(config, process);
  const int num_steps = process.num_steps();
  const std::size_t k = config.k;
  const PotentialSpec potential{config.potential, config.lambda};

  Ensemble ensemble;
  ensemble.t = num_steps;
  ensemble.particles.resize(k);
  parallel_for(k, config.threads, [&](std::size_t i) {
    Stream stream(config.seed, num_steps, i, Purpose::kPrior);
    ensemble.particles[i].state = process.sample_prior(config.context, stream);
    ensemble.particles[i].lineage_id = i;
  });

  SamplerResult result;
  RunDiagnostics& diag = result.diagnostics;
  std::vector<double> step_rewards(k, 0.0);

  for (int t = num_steps - 1; t >= 0; --t) {
    const bool scheduled = config.schedule.scheduled(t);
    const bool scored = scheduled && (t == 0 || uses_intermediate_reward(config.potential));

    parallel_for(k, config.threads, [&](std::size_t i) {
      Particle& particle = ensemble.particles[i];
      Stream propose_stream(config.seed, t, i, Purpose::kPropose);
      Stream reward_stream(config.seed, t, i, Purpose::kReward);

      CandidateScorer scorer = [&](const State& candidate, std::size_t index) {
        Stream candidate_stream = reward_stream.substream(index);
        const double r = reward_at(config.reward, process, candidate, t, config.context, candidate_stream);
        check_reward(r, i, t);
        return CandidateScore{r, log_potential(potential, particle.stats, r, t, true)};
      };
      Proposal proposal = propose_and_correct(config.proposal, process, particle.state, t, config.reward.terminal,
                                              config.context, propose_stream, scored ? &scorer : nullptr);

      double r_now = 0.0;
      double log_g = 0.0;
      if (proposal.score) {
        r_now = proposal.score->reward;
        log_g = proposal.score->log_potential;
      } else if (scored) {
        r_now = reward_at(config.reward, process, proposal.state, t, config.context, reward_stream);
        check_reward(r_now, i, t);
        log_g = log_potential(potential, particle.stats, r_now, t, true);
      }
      record_step(particle.stats, r_now, log_g, scored);
      particle.state = std::move(proposal.state);
      particle.log_weight += log_g + proposal.log_correction;
      step_rewards[i] = r_now;
    });
    ensemble.t = t;

    const auto log_weights = ensemble.log_weights();
    const auto normalized = normalize_log_weights(log_weights);
    if (std::all_of(normalized.begin(), normalized.end(), [](double w) { return w == 0.0; })) {
      throw DegenerateEnsemble(t);
    }
    const double ess_value = ess(normalized);
    diag.steps.push_back(t);
    diag.ess_trace.push_back(ess_value);

    Stream resample_stream(config.seed, t, 0, Purpose::kResample);
    if (t > 0) {
      if (should_resample(t, config.schedule, ess_value, k)) {
        diag.log_Z_hat += log_mean_exp(log_weights);
        ensemble = resample(ensemble, resample_stream, config.resampler);
        diag.resample_events.push_back(t);
      }
    } else {
      diag.final_rewards = step_rewards;
      diag.best_index = argmax_lowest(diag.final_rewards);
      diag.best_state = ensemble.particles[diag.best_index].state;
      // The outstanding weights close the estimate whether or not the final resample runs.
      diag.log_Z_hat += log_mean_exp(log_weights);
      const bool uniform = ess_value >= static_cast<double>(k) * (1.0 - kUniformEssSlack);
      if (config.final_resample && !uniform) {
        // Carry each particle's terminal reward through the resample via its lineage slot.
        for (std::size_t i = 0; i < k; ++i) ensemble.particles[i].lineage_id = i;
        ensemble = resample(ensemble, resample_stream, config.resampler);
        diag.resample_events.push_back(0);
        diag.sample_rewards.resize(k);
        std::vector<std::size_t> lineage(k);
        for (std::size_t i = 0; i < k; ++i) {
          const std::size_t slot = ensemble.particles[i].lineage_id;
          diag.sample_rewards[i] = diag.final_rewards[slot];
          lineage[i] = slot;
        }
        // Restore original lineage ids of the ancestors.
        for (std::size_t i = 0; i < k; ++i) ensemble.particles[i].lineage_id = lineage[i];
      } else {
        diag.sample_rewards = diag.final_rewards;
      }
    }
    if (config.diversity_embedding && k >= 2) {
      diag.diversity_trace.push_back(diversity(ensemble.states(), *config.diversity_embedding));
    }
  }
  result.ensemble = std::move(ensemble);
  return result;
}

double estimate_log_partition(const RunDiagnostics& diagnostics) noexcept { return diagnostics.log_Z_hat; }

SamplerResult best_of_n(const FKConfig& config, const DiffusionProcess& process) {
  FKConfig bon = config;
  bon.potential = PotentialKind::kBestOfN;
  bon.final_resample = false;
  return fk_sample(bon, process);
}

SamplerResult base_sample(const FKConfig& config, const DiffusionProcess& process) {
  FKConfig base = config;
  base.potential = PotentialKind::kBestOfN;
  base.lambda = 0.0;
  base.proposal = ProposalSpec{};
  base.final_resample = false;
  return fk_sample(base, process);
}

std::size_t svdd_select(std::span<const double> log_weights, bool greedy, Stream& stream) {
  if (log_weights.empty()) throw ContractViolation("SVDD selection over an empty candidate set");
  if (greedy) return argmax_lowest(log_weights);
  const auto weights = normalize_log_weights(log_weights);
  return stream.categorical(weights);
}

SamplerResult svdd_sample(const FKConfig& config, const DiffusionProcess& process, bool greedy) {
  validate(config, process);
  const int num_steps = process.num_steps();
  const std::size_t k = config.k;

  Stream prior_stream(config.seed, num_steps, 0, Purpose::kPrior);
  Particle current;
  current.state = process.sample_prior(config.context, prior_stream);

  SamplerResult result;
  RunDiagnostics& diag = result.diagnostics;
  std::vector<State> candidates(k);
  std::vector<double> rewards(k);
  std::vector<double> corrections(k);

  for (int t = num_steps - 1; t >= 0; --t) {
    parallel_for(k, config.threads, [&](std::size_t i) {
      Stream propose_stream(config.seed, t, i, Purpose::kPropose);
      Stream reward_stream(config.seed, t, i, Purpose::kReward);
      Proposal proposal = propose_and_correct(config.proposal, process, current.state, t, config.reward.terminal,
                                              config.context, propose_stream);
      const double r = reward_at(config.reward, process, proposal.state, t, config.context, reward_stream);
      check_reward(r, i, t);
      candidates[i] = std::move(proposal.state);
      rewards[i] = r;
      corrections[i] = proposal.log_correction;
    });

    std::vector<double> log_weights(k);
    for (std::size_t i = 0; i < k; ++i) {
      log_weights[i] = config.lambda * (rewards[i] - current.stats.prev_r) + corrections[i];
    }
    Stream select_stream(config.seed, t, 0, Purpose::kSelect);
    const std::size_t chosen = svdd_select(greedy ? std::span<const double>(rewards) : log_weights, greedy,
                                           select_stream);
    diag.steps.push_back(t);
    diag.ess_trace.push_back(greedy ? 1.0 : ess(normalize_log_weights(log_weights)));
    if (!greedy) diag.log_Z_hat += log_mean_exp(log_weights);
    diag.resample_events.push_back(t);

    const double applied = config.lambda * (rewards[chosen] - current.stats.prev_r);
    record_step(current.stats, rewards[chosen], applied, true);
    current.state = candidates[chosen];

    if (config.diversity_embedding && k >= 2) {
      const std::vector<State> duplicated(k, current.state);
      diag.diversity_trace.push_back(diversity(duplicated, *config.diversity_embedding));
    }
  }

  result.ensemble.t = 0;
  result.ensemble.particles.assign(k, current);
  for (std::size_t i = 0; i < k; ++i) result.ensemble.particles[i].lineage_id = i;
  diag.final_rewards.assign(k, current.stats.prev_r);
  diag.sample_rewards = diag.final_rewards;
  diag.best_index = 0;
  diag.best_state = current.state;
  return result;
}

}  // namespace fksteer
