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

#include "fksteer/proposals.hpp"

#include <cmath>

#include "fksteer/error.hpp"
#include "fksteer/gaussian_mixture.hpp"
#include "fksteer/masked_diffusion.hpp"
#include "fksteer/numeric.hpp"

namespace fksteer {

std::string_view proposal_name(ProposalKind kind) noexcept {
  switch (kind) {
    case ProposalKind::kBaseModel:
      return "base";
    case ProposalKind::kGradientGuided:
      return "gradient-guided";
    case ProposalKind::kDiscreteNormalized:
      return "discrete-normalized";
  }
  return "unknown";
}

ProposalKind parse_proposal(std::string_view name) {
  if (name == "base" || name == "base-model") return ProposalKind::kBaseModel;
  if (name == "gradient-guided") return ProposalKind::kGradientGuided;
  if (name == "discrete-normalized") return ProposalKind::kDiscreteNormalized;
  throw ContractViolation("unknown proposal '" + std::string(name) +
                          "' (expected base, gradient-guided, discrete-normalized)");
}

void check_compatible(const ProposalSpec& spec, const DiffusionProcess& process, const TerminalReward& reward) {
  switch (spec.kind) {
    case ProposalKind::kBaseModel:
      return;
    case ProposalKind::kGradientGuided:
      if (dynamic_cast<const GaussianMixtureDiffusion*>(&process) == nullptr) {
        throw Unsupported("gradient-guided proposal requires the Gaussian-mixture process");
      }
      if (!reward.differentiable()) {
        throw Unsupported("gradient-guided proposal requires a differentiable reward, got '" + reward.name() + "'");
      }
      return;
    case ProposalKind::kDiscreteNormalized:
      if (dynamic_cast<const MaskedDiscreteDiffusion*>(&process) == nullptr) {
        throw Unsupported("discrete-normalized proposal requires the masked discrete process");
      }
      return;
  }
}

std::vector<double> tilt_and_normalize(std::span<const double> base_probabilities,
                                       std::span<const double> log_potentials, double* log_normalizer) {
  if (base_probabilities.size() != log_potentials.size()) {
    throw ContractViolation("tilt_and_normalize: size mismatch");
  }
  std::vector<double> log_terms(base_probabilities.size());
  for (std::size_t i = 0; i < log_terms.size(); ++i) {
    log_terms[i] = base_probabilities[i] > 0.0 ? std::log(base_probabilities[i]) + log_potentials[i] : kNegInf;
  }
  const double total = log_sum_exp(log_terms);
  if (total == kNegInf) throw ContractViolation("tilted kernel has zero mass");
  if (log_normalizer != nullptr) *log_normalizer = total;
  std::vector<double> out(log_terms.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(log_terms[i] - total);
  return out;
}

Proposal propose_and_correct(const ProposalSpec& spec, const DiffusionProcess& process, const State& x_next, int t,
                             const TerminalReward& reward, const Context& context, Stream& stream,
                             const CandidateScorer* scorer) {
  switch (spec.kind) {
    case ProposalKind::kBaseModel: {
      auto draw = process.reverse_sample(x_next, t, context, stream);
      return {std::move(draw.state), 0.0, std::nullopt};
    }
    case ProposalKind::kGradientGuided: {
      const auto* gaussian = dynamic_cast<const GaussianMixtureDiffusion*>(&process);
      if (gaussian == nullptr) throw Unsupported("gradient-guided proposal requires the Gaussian-mixture process");
      const auto& from = as_real(x_next);
      const auto kernel = gaussian->reverse_kernel(from, t, context);
      if (spec.guidance_lambda == 0.0) {
        return {kernel.sample(stream), 0.0, std::nullopt};
      }
      const RealState point =
          spec.gradient_at == GradientPoint::kDenoisedMean ? gaussian->posterior_mean(from, t + 1, context) : from;
      const RealState gradient = reward_gradient(reward, point, context);
      const auto guided = kernel.twisted(gradient, spec.guidance_lambda);
      RealState x = guided.sample(stream);
      const double correction = kernel.log_density(x) - guided.log_density(x);
      return {std::move(x), correction, std::nullopt};
    }
    case ProposalKind::kDiscreteNormalized: {
      const auto* masked = dynamic_cast<const MaskedDiscreteDiffusion*>(&process);
      if (masked == nullptr) throw Unsupported("discrete-normalized proposal requires the masked discrete process");
      if (scorer == nullptr) {
        auto draw = process.reverse_sample(x_next, t, context, stream);
        return {std::move(draw.state), 0.0, std::nullopt};
      }
      auto support = masked->reverse_support(as_tokens(x_next), t, context);
      std::vector<double> base(support.size());
      std::vector<double> log_g(support.size());
      std::vector<CandidateScore> scores(support.size());
      for (std::size_t i = 0; i < support.size(); ++i) {
        base[i] = support[i].second;
        scores[i] = (*scorer)(support[i].first, i);
        log_g[i] = scores[i].log_potential;
      }
      double log_normalizer = 0.0;
      const auto tilted = tilt_and_normalize(base, log_g, &log_normalizer);
      const std::size_t chosen = stream.categorical(tilted);
      // G p / tau = Σ_x p(x) G(x) for every draw, so the correction cancels the chosen potential.
      const double correction = log_normalizer - log_g[chosen];
      return {std::move(support[chosen].first), correction, scores[chosen]};
    }
  }
  throw Unsupported("unknown proposal kind");
}

}  // namespace fksteer
