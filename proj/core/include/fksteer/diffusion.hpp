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

#ifndef FKSTEER_DIFFUSION_HPP
#define FKSTEER_DIFFUSION_HPP

#include <vector>

#include "fksteer/random.hpp"
#include "fksteer/state.hpp"

namespace fksteer {

/// The ordered time indices T, T-1, ..., 0 of a discrete-time process.
class TimeGrid {
 public:
  explicit TimeGrid(int num_steps);

  [[nodiscard]] int num_steps() const noexcept { return num_steps_; }
  [[nodiscard]] const std::vector<int>& steps() const noexcept { return steps_; }
  [[nodiscard]] bool contains(int t) const noexcept { return t >= 0 && t <= num_steps_; }

 private:
  int num_steps_;
  std::vector<int> steps_;
};

/// A draw from a reverse kernel together with its exact log-density under that kernel.
struct ReverseDraw {
  State state;
  double log_density = 0.0;
};

/**
 * A discrete-time diffusion p(x_T) Π p(x_t | x_{t+1}, c) with access to its forward noising kernel.
 *
 * Implementations are immutable after construction; all entropy comes from caller-provided streams,
 * so one instance can be shared by any number of threads.
 */
class DiffusionProcess {
 public:
  virtual ~DiffusionProcess() = default;

  [[nodiscard]] virtual int num_steps() const noexcept = 0;
  [[nodiscard]] TimeGrid time_grid() const { return TimeGrid(num_steps()); }

  /// x_T ~ prior.
  [[nodiscard]] virtual State sample_prior(const Context& context, Stream& stream) const = 0;

  /// x_0 ~ data distribution (conditioned on the context).
  [[nodiscard]] virtual State sample_data(const Context& context, Stream& stream) const = 0;

  /// x_t ~ q(x_t | x_0).
  [[nodiscard]] virtual State forward_sample(const State& x0, int t, Stream& stream) const = 0;

  /// x_t ~ p(x_t | x_{t+1}, c), with the log-density of the draw. Requires 0 <= t < T.
  [[nodiscard]] virtual ReverseDraw reverse_sample(const State& x_next, int t, const Context& context,
                                                   Stream& stream) const = 0;

  /// log p(x_t | x_{t+1}, c).
  [[nodiscard]] virtual double reverse_log_density(const State& x_t, const State& x_next, int t,
                                                   const Context& context) const = 0;

  /// E[x_0 | x_t, c] (real states) or the per-position posterior over x_0 (token states).
  [[nodiscard]] virtual DenoisedEstimate denoised_mean(const State& x_t, int t, const Context& context) const = 0;

  /// Runs the reverse chain from (x_t, t) down to t = 0.
  [[nodiscard]] State rollout(State x, int t, const Context& context, Stream& stream) const;

 protected:
  void check_time(int t) const;
  void check_reverse_time(int t) const;
};

}  // namespace fksteer

#endif
