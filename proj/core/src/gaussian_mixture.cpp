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

#include "fksteer/gaussian_mixture.hpp"

#include <cmath>
#include <string>

#include "fksteer/error.hpp"
#include "fksteer/numeric.hpp"

namespace fksteer {

RealState GaussianMixtureKernel::sample(Stream& stream) const {
  std::vector<double> weights;
  weights.reserve(components.size());
  for (const auto& c : components) weights.push_back(std::exp(c.log_weight));
  const auto& chosen = components[stream.categorical(weights)];
  const double sd = std::sqrt(chosen.variance);
  RealState x(chosen.mean.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = chosen.mean[i] + sd * stream.normal();
  return x;
}

double GaussianMixtureKernel::log_density(std::span<const double> x) const {
  std::vector<double> terms;
  terms.reserve(components.size());
  for (const auto& c : components) terms.push_back(c.log_weight + log_normal_isotropic(x, c.mean, c.variance));
  return log_sum_exp(terms);
}

RealState GaussianMixtureKernel::mean() const {
  RealState out(components.front().mean.size(), 0.0);
  for (const auto& c : components) {
    const double w = std::exp(c.log_weight);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * c.mean[i];
  }
  return out;
}

GaussianMixtureKernel GaussianMixtureKernel::twisted(std::span<const double> direction, double scale) const {
  GaussianMixtureKernel out = *this;
  if (scale == 0.0) return out;
  for (auto& c : out.components) {
    for (std::size_t i = 0; i < c.mean.size(); ++i) c.mean[i] += c.variance * scale * direction[i];
  }
  return out;
}

GaussianMixtureDiffusion::GaussianMixtureDiffusion(std::vector<MixtureComponent> components,
                                                   std::vector<double> alpha_bar)
    : components_(std::move(components)), alpha_bar_(std::move(alpha_bar)) {
  if (components_.empty()) throw ContractViolation("mixture needs at least one component");
  dimension_ = components_.front().mean.size();
  if (dimension_ == 0) throw ContractViolation("mixture dimension must be positive");
  double total = 0.0;
  for (const auto& c : components_) {
    if (c.mean.size() != dimension_) throw ContractViolation("mixture components disagree on dimension");
    if (!(c.weight > 0.0)) throw ContractViolation("mixture weights must be positive");
    if (!(c.variance > 0.0)) throw ContractViolation("mixture variances must be positive");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ContractViolation("mixture weights must sum to 1");
  if (alpha_bar_.size() < 2) throw ContractViolation("noise schedule needs T >= 1");
  if (alpha_bar_.front() != 1.0) throw ContractViolation("noise schedule must start at abar_0 = 1");
  for (std::size_t t = 1; t < alpha_bar_.size(); ++t) {
    if (!(alpha_bar_[t] < alpha_bar_[t - 1]) || !(alpha_bar_[t] > 0.0)) {
      throw ContractViolation("noise schedule must be strictly decreasing in (0, 1]");
    }
  }
}

std::vector<double> GaussianMixtureDiffusion::linear_schedule(int num_steps, double alpha_bar_min) {
  if (num_steps < 1) throw ContractViolation("linear schedule needs T >= 1");
  std::vector<double> out(static_cast<std::size_t>(num_steps) + 1);
  for (int t = 0; t <= num_steps; ++t) {
    const double f = static_cast<double>(t) / num_steps;
    out[static_cast<std::size_t>(t)] = (1.0 - f) + f * alpha_bar_min;
  }
  return out;
}

double GaussianMixtureDiffusion::alpha_bar(int t) const {
  check_time(t);
  return alpha_bar_[static_cast<std::size_t>(t)];
}

void GaussianMixtureDiffusion::check_dimension(const RealState& x) const {
  if (x.size() != dimension_) {
    throw ContractViolation("state has dimension " + std::to_string(x.size()) + ", process has " +
                            std::to_string(dimension_));
  }
}

std::vector<std::size_t> GaussianMixtureDiffusion::active(const Context& context) const {
  if (context.component) {
    if (*context.component >= components_.size()) {
      throw ContractViolation("context selects component " + std::to_string(*context.component) + " of " +
                              std::to_string(components_.size()));
    }
    return {*context.component};
  }
  std::vector<std::size_t> all(components_.size());
  for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
  return all;
}

std::vector<double> GaussianMixtureDiffusion::component_log_posterior(const RealState& x_t, int t,
                                                                      const std::vector<std::size_t>& idx) const {
  const double ab = alpha_bar_[static_cast<std::size_t>(t)];
  const double scale = std::sqrt(ab);
  std::vector<double> log_w(idx.size());
  RealState centre(dimension_);
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const auto& c = components_[idx[n]];
    for (std::size_t i = 0; i < dimension_; ++i) centre[i] = scale * c.mean[i];
    log_w[n] = std::log(c.weight) + log_normal_isotropic(x_t, centre, ab * c.variance + 1.0 - ab);
  }
  const double total = log_sum_exp(log_w);
  for (double& w : log_w) w -= total;
  return log_w;
}

std::size_t GaussianMixtureDiffusion::pick_component(const Context& context, Stream& stream) const {
  const auto idx = active(context);
  if (idx.size() == 1) return idx.front();
  std::vector<double> weights;
  weights.reserve(idx.size());
  for (std::size_t j : idx) weights.push_back(components_[j].weight);
  return idx[stream.categorical(weights)];
}

State GaussianMixtureDiffusion::sample_prior(const Context& context, Stream& stream) const {
  const auto& c = components_[pick_component(context, stream)];
  const double ab = alpha_bar_.back();
  const double sd = std::sqrt(ab * c.variance + 1.0 - ab);
  RealState x(dimension_);
  for (std::size_t i = 0; i < dimension_; ++i) x[i] = std::sqrt(ab) * c.mean[i] + sd * stream.normal();
  return x;
}

State GaussianMixtureDiffusion::sample_data(const Context& context, Stream& stream) const {
  const auto& c = components_[pick_component(context, stream)];
  const double sd = std::sqrt(c.variance);
  RealState x(dimension_);
  for (std::size_t i = 0; i < dimension_; ++i) x[i] = c.mean[i] + sd * stream.normal();
  return x;
}

State GaussianMixtureDiffusion::forward_sample(const State& x0, int t, Stream& stream) const {
  check_time(t);
  const auto& x = as_real(x0);
  check_dimension(x);
  const double ab = alpha_bar_[static_cast<std::size_t>(t)];
  const double signal = std::sqrt(ab);
  const double noise = std::sqrt(1.0 - ab);
  RealState out(dimension_);
  for (std::size_t i = 0; i < dimension_; ++i) out[i] = signal * x[i] + noise * stream.normal();
  return out;
}

GaussianMixtureKernel GaussianMixtureDiffusion::reverse_kernel(const RealState& x_next, int t,
                                                               const Context& context) const {
  check_reverse_time(t);
  check_dimension(x_next);
  const auto idx = active(context);
  const auto log_w = component_log_posterior(x_next, t + 1, idx);
  const double ab_t = alpha_bar_[static_cast<std::size_t>(t)];
  const double step_alpha = alpha_bar_[static_cast<std::size_t>(t) + 1] / ab_t;
  const double step_noise = 1.0 - step_alpha;

  GaussianMixtureKernel kernel;
  kernel.components.reserve(idx.size());
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const auto& c = components_[idx[n]];
    // Under component j, x_t ~ N(sqrt(abar_t) m, v I) and x_{t+1} | x_t ~ N(sqrt(a) x_t, (1 - a) I).
    const double v = ab_t * c.variance + 1.0 - ab_t;
    const double precision = 1.0 / v + step_alpha / step_noise;
    KernelComponent k;
    k.log_weight = log_w[n];
    k.variance = 1.0 / precision;
    k.mean.resize(dimension_);
    for (std::size_t i = 0; i < dimension_; ++i) {
      k.mean[i] = k.variance * (std::sqrt(ab_t) * c.mean[i] / v + std::sqrt(step_alpha) * x_next[i] / step_noise);
    }
    kernel.components.push_back(std::move(k));
  }
  return kernel;
}

ReverseDraw GaussianMixtureDiffusion::reverse_sample(const State& x_next, int t, const Context& context,
                                                     Stream& stream) const {
  const auto kernel = reverse_kernel(as_real(x_next), t, context);
  RealState x = kernel.sample(stream);
  const double log_density = kernel.log_density(x);
  return {std::move(x), log_density};
}

double GaussianMixtureDiffusion::reverse_log_density(const State& x_t, const State& x_next, int t,
                                                     const Context& context) const {
  const auto& x = as_real(x_t);
  check_dimension(x);
  return reverse_kernel(as_real(x_next), t, context).log_density(x);
}

RealState GaussianMixtureDiffusion::posterior_mean(const RealState& x_t, int t, const Context& context) const {
  check_time(t);
  check_dimension(x_t);
  const auto idx = active(context);
  const auto log_w = component_log_posterior(x_t, t, idx);
  const double ab = alpha_bar_[static_cast<std::size_t>(t)];
  const double signal = std::sqrt(ab);
  RealState out(dimension_, 0.0);
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const auto& c = components_[idx[n]];
    const double w = std::exp(log_w[n]);
    const double denom = ab * c.variance + (1.0 - ab);
    for (std::size_t i = 0; i < dimension_; ++i) {
      out[i] += w * (signal * c.variance * x_t[i] + (1.0 - ab) * c.mean[i]) / denom;
    }
  }
  return out;
}

DenoisedEstimate GaussianMixtureDiffusion::denoised_mean(const State& x_t, int t, const Context& context) const {
  return posterior_mean(as_real(x_t), t, context);
}

double GaussianMixtureDiffusion::marginal_log_density(const RealState& x_t, int t, const Context& context) const {
  check_time(t);
  check_dimension(x_t);
  const auto idx = active(context);
  const double ab = alpha_bar_[static_cast<std::size_t>(t)];
  std::vector<double> terms;
  RealState centre(dimension_);
  double total_weight = 0.0;
  for (std::size_t j : idx) total_weight += components_[j].weight;
  for (std::size_t j : idx) {
    const auto& c = components_[j];
    for (std::size_t i = 0; i < dimension_; ++i) centre[i] = std::sqrt(ab) * c.mean[i];
    terms.push_back(std::log(c.weight / total_weight) + log_normal_isotropic(x_t, centre, ab * c.variance + 1.0 - ab));
  }
  return log_sum_exp(terms);
}

}  // namespace fksteer
