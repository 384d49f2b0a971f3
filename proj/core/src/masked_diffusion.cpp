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

#include "fksteer/masked_diffusion.hpp"

#include <cmath>
#include <string>

#include "fksteer/error.hpp"
#include "fksteer/numeric.hpp"

namespace fksteer {

MaskedDiscreteDiffusion::MaskedDiscreteDiffusion(std::shared_ptr<const SequenceModel> data,
                                                 std::vector<double> mask_fraction)
    : data_(std::move(data)), mask_fraction_(std::move(mask_fraction)) {
  if (!data_) throw ContractViolation("masked diffusion needs a data model");
  if (mask_fraction_.size() < 2) throw ContractViolation("mask schedule needs T >= 1");
  if (mask_fraction_.front() != 0.0) throw ContractViolation("mask schedule must start at m_0 = 0");
  if (mask_fraction_.back() != 1.0) throw ContractViolation("mask schedule must end at m_T = 1");
  for (std::size_t t = 1; t < mask_fraction_.size(); ++t) {
    if (mask_fraction_[t] < mask_fraction_[t - 1]) throw ContractViolation("mask schedule must be nondecreasing");
  }
}

std::vector<double> MaskedDiscreteDiffusion::uniform_schedule(int num_steps) {
  if (num_steps < 1) throw ContractViolation("uniform mask schedule needs T >= 1");
  std::vector<double> out(static_cast<std::size_t>(num_steps) + 1);
  for (int t = 0; t <= num_steps; ++t) out[static_cast<std::size_t>(t)] = static_cast<double>(t) / num_steps;
  return out;
}

double MaskedDiscreteDiffusion::mask_fraction(int t) const {
  check_time(t);
  return mask_fraction_[static_cast<std::size_t>(t)];
}

double MaskedDiscreteDiffusion::stay_masked_probability(int t) const {
  check_reverse_time(t);
  const double next = mask_fraction_[static_cast<std::size_t>(t) + 1];
  if (next == 0.0) return 0.0;
  return mask_fraction_[static_cast<std::size_t>(t)] / next;
}

void MaskedDiscreteDiffusion::check_sequence(const TokenState& x) const {
  if (x.size() != length()) {
    throw ContractViolation("sequence has length " + std::to_string(x.size()) + ", process has " +
                            std::to_string(length()));
  }
  const auto v = static_cast<Token>(vocab_size());
  for (Token token : x) {
    if (token != kMask && (token < 0 || token >= v)) {
      throw ContractViolation("token " + std::to_string(token) + " outside vocabulary of size " + std::to_string(v));
    }
  }
}

TokenState MaskedDiscreteDiffusion::observed(const TokenState& x, const Context& context) const {
  if (context.prefix.size() > length()) throw ContractViolation("context prefix longer than the sequence");
  TokenState out = x;
  for (std::size_t i = 0; i < context.prefix.size(); ++i) {
    if (out[i] == kMask) {
      out[i] = context.prefix[i];
    } else if (out[i] != context.prefix[i]) {
      throw ContractViolation("revealed token at position " + std::to_string(i) + " contradicts the context prefix");
    }
  }
  return out;
}

State MaskedDiscreteDiffusion::sample_prior(const Context& /*context*/, Stream& /*stream*/) const {
  return TokenState(length(), kMask);
}

State MaskedDiscreteDiffusion::sample_data(const Context& context, Stream& stream) const {
  return data_->sample_completion(observed(TokenState(length(), kMask), context), stream);
}

State MaskedDiscreteDiffusion::forward_sample(const State& x0, int t, Stream& stream) const {
  check_time(t);
  TokenState x = as_tokens(x0);
  check_sequence(x);
  if (has_mask(x)) throw ContractViolation("forward_sample expects a fully revealed x0");
  const double m = mask_fraction_[static_cast<std::size_t>(t)];
  for (Token& token : x) {
    if (stream.uniform() < m) token = kMask;
  }
  return x;
}

ReverseDraw MaskedDiscreteDiffusion::reverse_sample(const State& x_next, int t, const Context& context,
                                                    Stream& stream) const {
  const double stay = stay_masked_probability(t);
  TokenState x = as_tokens(x_next);
  check_sequence(x);
  double log_density = 0.0;
  std::vector<std::size_t> revealed;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != kMask) continue;
    if (stream.uniform() < stay) {
      log_density += std::log(stay);
    } else {
      log_density += std::log1p(-stay);
      revealed.push_back(i);
    }
  }
  if (revealed.empty()) return {std::move(x), log_density};

  const TokenState evidence = observed(as_tokens(x_next), context);
  const TokenState completion = data_->sample_completion(evidence, stream);
  TokenState joint = evidence;
  for (std::size_t i : revealed) {
    x[i] = completion[i];
    joint[i] = completion[i];
  }
  log_density += data_->log_prob_observed(joint) - data_->log_prob_observed(evidence);
  return {std::move(x), log_density};
}

double MaskedDiscreteDiffusion::reverse_log_density(const State& x_t, const State& x_next, int t,
                                                    const Context& context) const {
  const double stay = stay_masked_probability(t);
  const auto& to = as_tokens(x_t);
  const auto& from = as_tokens(x_next);
  check_sequence(to);
  check_sequence(from);
  const TokenState evidence = observed(from, context);
  TokenState joint = evidence;
  double log_density = 0.0;
  bool any_revealed = false;
  for (std::size_t i = 0; i < to.size(); ++i) {
    if (from[i] != kMask) {
      if (to[i] != from[i]) return kNegInf;
      continue;
    }
    if (to[i] == kMask) {
      log_density += std::log(stay);
    } else {
      log_density += std::log1p(-stay);
      if (joint[i] != kMask && joint[i] != to[i]) return kNegInf;
      joint[i] = to[i];
      any_revealed = true;
    }
  }
  if (any_revealed) log_density += data_->log_prob_observed(joint) - data_->log_prob_observed(evidence);
  return log_density;
}

std::vector<std::pair<TokenState, double>> MaskedDiscreteDiffusion::reverse_support(const TokenState& x_next, int t,
                                                                                   const Context& context) const {
  const double stay = stay_masked_probability(t);
  check_sequence(x_next);
  std::vector<std::size_t> masked;
  for (std::size_t i = 0; i < x_next.size(); ++i) {
    if (x_next[i] == kMask) masked.push_back(i);
  }
  const double count = std::pow(2.0 * static_cast<double>(vocab_size()), static_cast<double>(masked.size()));
  if (count > kMaxEnumeratedOutcomes) throw EnumerationTooLarge(count, kMaxEnumeratedOutcomes);

  const TokenState evidence = observed(x_next, context);
  const double log_evidence = data_->log_prob_observed(evidence);
  const std::size_t v = vocab_size();
  std::vector<std::pair<TokenState, double>> support;
  for (std::size_t subset = 0; subset < (std::size_t{1} << masked.size()); ++subset) {
    std::vector<std::size_t> reveal;
    double p_pattern = 1.0;
    for (std::size_t n = 0; n < masked.size(); ++n) {
      if ((subset >> n) & 1U) {
        reveal.push_back(masked[n]);
        p_pattern *= 1.0 - stay;
      } else {
        p_pattern *= stay;
      }
    }
    if (p_pattern == 0.0) continue;
    std::size_t assignments = 1;
    for (std::size_t n = 0; n < reveal.size(); ++n) assignments *= v;
    for (std::size_t code = 0; code < assignments; ++code) {
      TokenState x = x_next;
      TokenState joint = evidence;
      std::size_t rest = code;
      bool possible = true;
      for (std::size_t position : reveal) {
        const auto token = static_cast<Token>(rest % v);
        rest /= v;
        if (joint[position] != kMask && joint[position] != token) {
          possible = false;
          break;
        }
        x[position] = token;
        joint[position] = token;
      }
      if (!possible) continue;
      const double p_values = reveal.empty() ? 1.0 : std::exp(data_->log_prob_observed(joint) - log_evidence);
      if (p_values > 0.0) support.emplace_back(std::move(x), p_pattern * p_values);
    }
  }
  return support;
}

TokenPosterior MaskedDiscreteDiffusion::token_posterior(const TokenState& x_t, const Context& context) const {
  check_sequence(x_t);
  const TokenState evidence = observed(x_t, context);
  const double log_evidence = data_->log_prob_observed(evidence);
  const std::size_t v = vocab_size();
  TokenPosterior posterior(length(), std::vector<double>(v, 0.0));
  for (std::size_t i = 0; i < length(); ++i) {
    if (evidence[i] != kMask) {
      posterior[i][static_cast<std::size_t>(evidence[i])] = 1.0;
      continue;
    }
    TokenState probe = evidence;
    for (std::size_t s = 0; s < v; ++s) {
      probe[i] = static_cast<Token>(s);
      posterior[i][s] = std::exp(data_->log_prob_observed(probe) - log_evidence);
    }
  }
  return posterior;
}

DenoisedEstimate MaskedDiscreteDiffusion::denoised_mean(const State& x_t, int t, const Context& context) const {
  check_time(t);
  return token_posterior(as_tokens(x_t), context);
}

}  // namespace fksteer
