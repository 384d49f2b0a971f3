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

#include "fksteer/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "fksteer/error.hpp"
#include "fksteer/numeric.hpp"

namespace fksteer {

namespace {

void check_enumerable(const MaskedDiscreteDiffusion& process) {
  if (process.vocab_size() > kMaxOracleVocab || process.length() > kMaxOracleLength) {
    throw EnumerationTooLarge("exact enumeration is limited to V <= " + std::to_string(kMaxOracleVocab) +
                              " and L <= " + std::to_string(kMaxOracleLength) + "; got V = " +
                              std::to_string(process.vocab_size()) + ", L = " + std::to_string(process.length()));
  }
  const double size = std::pow(static_cast<double>(process.vocab_size()), static_cast<double>(process.length()));
  if (size > kMaxEnumeratedOutcomes) throw EnumerationTooLarge(size, kMaxEnumeratedOutcomes);
}

}  // namespace

std::vector<StepMarginal> enumerate_marginals(const MaskedDiscreteDiffusion& process, const Context& context) {
  check_enumerable(process);
  const int num_steps = process.num_steps();
  std::vector<StepMarginal> out;
  out.reserve(static_cast<std::size_t>(num_steps) + 1);
  Stream unused(0, num_steps, 0, Purpose::kPrior);
  StepMarginal prior{num_steps, {}};
  prior.probability[as_tokens(process.sample_prior(context, unused))] = 1.0;
  out.push_back(std::move(prior));
  for (int t = num_steps - 1; t >= 0; --t) {
    StepMarginal next{t, {}};
    for (const auto& [x_next, mass] : out.back().probability) {
      for (const auto& [x_t, p] : process.reverse_support(x_next, t, context)) {
        next.probability[x_t] += mass * p;
      }
    }
    out.push_back(std::move(next));
  }
  return out;
}

Distribution enumerate_x0_marginal(const MaskedDiscreteDiffusion& process, const Context& context) {
  return std::move(enumerate_marginals(process, context).back().probability);
}

ExactDistribution exact_tilted_target(const MaskedDiscreteDiffusion& process, const TerminalReward& reward,
                                      double lambda, const Context& context) {
  if (!std::isfinite(lambda)) throw ContractViolation("lambda must be finite");
  const Distribution base = enumerate_x0_marginal(process, context);
  std::vector<double> log_mass;
  std::vector<const TokenState*> outcomes;
  for (const auto& [x0, p] : base) {
    if (p <= 0.0) continue;
    const double r = reward(State{x0}, context);
    if (!std::isfinite(r)) throw ContractViolation("non-finite reward for outcome " + format_tokens(x0));
    log_mass.push_back(std::log(p) + lambda * r);
    outcomes.push_back(&x0);
  }
  ExactDistribution out;
  out.log_Z = log_sum_exp(log_mass);
  out.Z = std::exp(out.log_Z);
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    out.probability[*outcomes[i]] = std::exp(log_mass[i] - out.log_Z);
  }
  return out;
}

ConditionalTable exact_conditional_exp_reward(const MaskedDiscreteDiffusion& process, const TerminalReward& reward,
                                              const Context& context) {
  const auto marginals = enumerate_marginals(process, context);
  const int num_steps = process.num_steps();
  ConditionalTable table(static_cast<std::size_t>(num_steps) + 1);
  for (const auto& step : marginals) {
    auto& level = table[static_cast<std::size_t>(step.t)];
    for (const auto& [x, p] : step.probability) level[x].probability = p;
  }
  for (auto& [x0, entry] : table[0]) entry.expected_exp_reward = std::exp(reward(State{x0}, context));
  for (int t = 1; t <= num_steps; ++t) {
    const auto& below = table[static_cast<std::size_t>(t - 1)];
    for (auto& [x_t, entry] : table[static_cast<std::size_t>(t)]) {
      double total = 0.0;
      for (const auto& [x_prev, p] : process.reverse_support(x_t, t - 1, context)) {
        if (p > 0.0) total += p * below.at(x_prev).expected_exp_reward;
      }
      entry.expected_exp_reward = total;
    }
  }
  return table;
}

double tv_distance(const Distribution& p, const Distribution& q) {
  double total = 0.0;
  for (const auto& [x, px] : p) {
    const auto it = q.find(x);
    total += std::abs(px - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [x, qx] : q) {
    if (!p.contains(x)) total += std::abs(qx);
  }
  return 0.5 * total;
}

double tv_distance(const std::map<TokenState, std::size_t>& counts, const ExactDistribution& exact) {
  std::size_t n = 0;
  for (const auto& [x, c] : counts) n += c;
  if (n == 0) throw ContractViolation("TV distance needs at least one counted outcome");
  Distribution empirical;
  for (const auto& [x, c] : counts) empirical[x] = static_cast<double>(c) / static_cast<double>(n);
  return tv_distance(empirical, exact.probability);
}

void write_distribution(std::ostream& out, const ExactDistribution& distribution) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", distribution.Z);
  out << "# Z " << buffer << '\n';
  for (const auto& [x, p] : distribution.probability) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", p);
    out << format_tokens(x) << '\t' << buffer << '\n';
  }
}

}  // namespace fksteer
