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

#ifndef FKSTEER_MASKED_DIFFUSION_HPP
#define FKSTEER_MASKED_DIFFUSION_HPP

#include <memory>
#include <utility>
#include <vector>

#include "fksteer/diffusion.hpp"
#include "fksteer/sequence_model.hpp"

namespace fksteer {

/**
 * Absorbing-mask diffusion over token sequences.
 *
 * Each position of x_t is masked independently with probability m_t, where m_0 = 0 and m_T = 1.
 * The reverse step keeps a masked position masked with probability m_t / m_{t+1}; the positions it
 * reveals are drawn jointly from the exact data posterior given every revealed token and the context
 * prefix. There is no model error: composing the prior with the reverse kernels reproduces the data
 * distribution exactly.
 */
class MaskedDiscreteDiffusion final : public DiffusionProcess {
 public:
  /// `mask_fraction[t]` is m_t for t = 0..T.
  MaskedDiscreteDiffusion(std::shared_ptr<const SequenceModel> data, std::vector<double> mask_fraction);

  /// m_t = t / T.
  [[nodiscard]] static std::vector<double> uniform_schedule(int num_steps);

  [[nodiscard]] int num_steps() const noexcept override { return static_cast<int>(mask_fraction_.size()) - 1; }
  [[nodiscard]] std::size_t vocab_size() const noexcept { return data_->vocab_size(); }
  [[nodiscard]] std::size_t length() const noexcept { return data_->length(); }
  [[nodiscard]] const SequenceModel& data() const noexcept { return *data_; }
  [[nodiscard]] double mask_fraction(int t) const;

  /// Probability that a position masked at t + 1 is still masked at t.
  [[nodiscard]] double stay_masked_probability(int t) const;

  [[nodiscard]] State sample_prior(const Context& context, Stream& stream) const override;
  [[nodiscard]] State sample_data(const Context& context, Stream& stream) const override;
  [[nodiscard]] State forward_sample(const State& x0, int t, Stream& stream) const override;
  [[nodiscard]] ReverseDraw reverse_sample(const State& x_next, int t, const Context& context,
                                           Stream& stream) const override;
  [[nodiscard]] double reverse_log_density(const State& x_t, const State& x_next, int t,
                                           const Context& context) const override;
  [[nodiscard]] DenoisedEstimate denoised_mean(const State& x_t, int t, const Context& context) const override;

  /// Every x_t reachable from x_{t+1} in one reverse step, with its probability.
  [[nodiscard]] std::vector<std::pair<TokenState, double>> reverse_support(const TokenState& x_next, int t,
                                                                           const Context& context) const;

  /// Per-position posterior P(x_0[i] = v | revealed tokens of x_t, context prefix).
  [[nodiscard]] TokenPosterior token_posterior(const TokenState& x_t, const Context& context) const;

  /// Revealed tokens of `x` merged with the context prefix.
  [[nodiscard]] TokenState observed(const TokenState& x, const Context& context) const;

 private:
  void check_sequence(const TokenState& x) const;

  std::shared_ptr<const SequenceModel> data_;
  std::vector<double> mask_fraction_;
};

}  // namespace fksteer

#endif
