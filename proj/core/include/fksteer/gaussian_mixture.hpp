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

#ifndef FKSTEER_GAUSSIAN_MIXTURE_HPP
#define FKSTEER_GAUSSIAN_MIXTURE_HPP

#include <span>
#include <vector>

#include "fksteer/diffusion.hpp"

namespace fksteer {

/// One isotropic Gaussian component N(mean, variance * I) of the data distribution.
struct MixtureComponent {
  double weight = 1.0;
  RealState mean;
  double variance = 1.0;
};

/// One component of a Gaussian-mixture transition kernel.
struct KernelComponent {
  double log_weight = 0.0;  ///< normalized over the kernel
  RealState mean;
  double variance = 1.0;
};

/// A finite mixture of isotropic Gaussians used as a transition kernel.
struct GaussianMixtureKernel {
  std::vector<KernelComponent> components;

  /// Component choice first, then one normal per coordinate.
  [[nodiscard]] RealState sample(Stream& stream) const;
  [[nodiscard]] double log_density(std::span<const double> x) const;
  [[nodiscard]] RealState mean() const;

  /// Shifts every component mean by variance * scale * direction. A zero scale returns an exact copy.
  [[nodiscard]] GaussianMixtureKernel twisted(std::span<const double> direction, double scale) const;
};

/**
 * Variance-preserving diffusion whose data distribution is a mixture of isotropic Gaussians.
 *
 * The forward chain is x_t = sqrt(a_t) x_{t-1} + sqrt(1 - a_t) e with a_t = abar_t / abar_{t-1}, so
 * q(x_t | x_0) = N(sqrt(abar_t) x_0, (1 - abar_t) I). Every quantity below is the exact posterior of
 * that chain: the reverse kernel is a Gaussian mixture whose component weights depend on x_{t+1}, and
 * the prior is the exact marginal q(x_T), which is N(0, I) up to abar_T.
 */
class GaussianMixtureDiffusion final : public DiffusionProcess {
 public:
  GaussianMixtureDiffusion(std::vector<MixtureComponent> components, std::vector<double> alpha_bar);

  /// abar linear from 1 at t = 0 to `alpha_bar_min` at t = T.
  [[nodiscard]] static std::vector<double> linear_schedule(int num_steps, double alpha_bar_min = 1e-4);

  [[nodiscard]] int num_steps() const noexcept override { return static_cast<int>(alpha_bar_.size()) - 1; }
  [[nodiscard]] std::size_t dimension() const noexcept { return dimension_; }
  [[nodiscard]] const std::vector<MixtureComponent>& components() const noexcept { return components_; }
  [[nodiscard]] double alpha_bar(int t) const;

  [[nodiscard]] State sample_prior(const Context& context, Stream& stream) const override;
  [[nodiscard]] State sample_data(const Context& context, Stream& stream) const override;
  [[nodiscard]] State forward_sample(const State& x0, int t, Stream& stream) const override;
  [[nodiscard]] ReverseDraw reverse_sample(const State& x_next, int t, const Context& context,
                                           Stream& stream) const override;
  [[nodiscard]] double reverse_log_density(const State& x_t, const State& x_next, int t,
                                           const Context& context) const override;
  [[nodiscard]] DenoisedEstimate denoised_mean(const State& x_t, int t, const Context& context) const override;

  /// The exact reverse kernel p(x_t | x_{t+1}, c) as a mixture.
  [[nodiscard]] GaussianMixtureKernel reverse_kernel(const RealState& x_next, int t, const Context& context) const;

  /// E[x_0 | x_t] as a plain vector.
  [[nodiscard]] RealState posterior_mean(const RealState& x_t, int t, const Context& context) const;

  /// Log of the exact marginal density q(x_t).
  [[nodiscard]] double marginal_log_density(const RealState& x_t, int t, const Context& context) const;

 private:
  /// Indices of components allowed by the context.
  [[nodiscard]] std::vector<std::size_t> active(const Context& context) const;
  /// Normalized log posterior weights of the active components given x_t.
  [[nodiscard]] std::vector<double> component_log_posterior(const RealState& x_t, int t,
                                                            const std::vector<std::size_t>& active) const;
  [[nodiscard]] std::size_t pick_component(const Context& context, Stream& stream) const;
  void check_dimension(const RealState& x) const;

  std::vector<MixtureComponent> components_;
  std::vector<double> alpha_bar_;
  std::size_t dimension_;
};

}  // namespace fksteer

#endif
