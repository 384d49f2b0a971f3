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

#ifndef FKSTEER_REWARDS_HPP
#define FKSTEER_REWARDS_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fksteer/diffusion.hpp"

namespace fksteer {

/// Number of positions holding `token`.
struct TokenCount {
  Token token = 0;
};

/// Σ_i log_table[i][x_i], a factorized per-position log-likelihood.
struct TableLogLikelihood {
  std::vector<std::vector<double>> log_table;
};

/// At least `count` positions hold `token`.
struct CountAtLeast {
  Token token = 0;
  std::size_t count = 1;
};

/// `pattern` occurs as a contiguous run.
struct ContainsPattern {
  TokenState pattern;
};

/// Euclidean distance to `center` at most `radius`.
struct InBall {
  RealState center;
  double radius = 1.0;
};

using AttributePredicate = std::variant<CountAtLeast, ContainsPattern, InBall>;

[[nodiscard]] bool satisfies(const AttributePredicate& predicate, const State& x);

/// scale * 1[predicate(x)].
struct AttributeIndicator {
  AttributePredicate predicate;
  double scale = 1.0;
};

/// a · x.
struct LinearReward {
  RealState weights;
};

/// exp(-|x - center|^2 / (2 width^2)); a smooth bump with maximum 1 at the center.
struct RadialReward {
  RealState center;
  double width = 1.0;
};

/// The terminal reward r(x0, c). A pure function of the fully denoised state.
class TerminalReward {
 public:
  using Kind = std::variant<TokenCount, TableLogLikelihood, AttributeIndicator, LinearReward, RadialReward>;

  explicit TerminalReward(Kind kind) : kind_(std::move(kind)) {}

  /// Throws ContractViolation on masked input or a state type the kind does not accept.
  [[nodiscard]] double operator()(const State& x0, const Context& context = {}) const;

  /// Exact E[r(x0)] when x0 has independent positions with the given marginals; empty unless the
  /// reward is additive over positions.
  [[nodiscard]] std::optional<double> expectation(const TokenPosterior& posterior) const;

  [[nodiscard]] bool differentiable() const noexcept;
  [[nodiscard]] const Kind& kind() const noexcept { return kind_; }
  [[nodiscard]] std::string name() const;

 private:
  Kind kind_;
};

/// ∇_x r(x). Throws Unsupported for kinds without a gradient.
[[nodiscard]] RealState reward_gradient(const TerminalReward& reward, const State& x, const Context& context = {});

class LearnedReward;

/// r_phi(x_t) = r(x0 = x̂_t).
struct DenoisedMeanEstimator {};

/// r_phi(x_t) = log (1/N) Σ_j exp(r(x0_j)) with x0_j rolled out from x_t by the base process.
struct ManySampleEstimator {
  std::size_t samples = 1;
};

/// r_phi(x_t) = log a_phi(x_t, t) from a fitted regression.
struct LearnedEstimator {
  std::shared_ptr<const LearnedReward> model;
};

using IntermediateEstimator = std::variant<DenoisedMeanEstimator, ManySampleEstimator, LearnedEstimator>;

struct RewardSpec {
  TerminalReward terminal;
  IntermediateEstimator intermediate = DenoisedMeanEstimator{};
};

[[nodiscard]] std::string estimator_name(const IntermediateEstimator& estimator);

/**
 * Estimate of the reward the trajectory through x_t will attain.
 *
 * At t = 0 every estimator returns the terminal reward exactly. On the masked process the denoised
 * estimate is a per-position simplex; additive rewards are evaluated as their exact expectation under
 * it, all other rewards on one sequence sampled from it.
 */
[[nodiscard]] double intermediate_reward(const RewardSpec& spec, const DiffusionProcess& process, const State& x_t,
                                         int t, const Context& context, Stream& stream);

/// Options for fitting a learned reward.
struct LearnedRewardOptions {
  std::size_t holdout_samples = 2000;
  std::size_t grid_cells = 32;  ///< per dimension (real states only)
  double grid_lo = -4.0;
  double grid_hi = 4.0;
};

/**
 * Regression a_phi(x_t, t) ≈ E[exp(r(x0)) | bucket(x_t), t], fitted on (x0, t, x_t) triples drawn from
 * the data distribution and the forward kernel.
 *
 * Token states are bucketed exactly by their revealed pattern; real states by a fixed grid per
 * dimension, separately for every t. Buckets never visited during fitting evaluate to the global mean.
 */
class LearnedReward {
 public:
  enum class Layout { kTokenPattern, kGrid };

  struct Bucket {
    double value = 0.0;
    std::size_t count = 0;
  };

  struct FitInfo {
    std::size_t samples = 0;
    double holdout_loss = 0.0;
  };

  LearnedReward() = default;

  [[nodiscard]] bool fitted() const noexcept { return fitted_; }
  [[nodiscard]] Layout layout() const noexcept { return layout_; }
  [[nodiscard]] const FitInfo& info() const noexcept { return info_; }
  [[nodiscard]] double global_mean() const noexcept { return global_mean_; }
  [[nodiscard]] const std::map<std::pair<int, std::string>, Bucket>& buckets() const noexcept { return buckets_; }

  [[nodiscard]] std::string bucket_id(const State& x_t) const;

  /// a_phi(x_t, t).
  [[nodiscard]] double value(const State& x_t, int t) const;

  /// True when (x_t, t) falls in a bucket that was never visited and so carries the global mean.
  [[nodiscard]] bool is_fallback(const State& x_t, int t) const;

  /// Flat text: header lines, then one `bucket_id<TAB>t<TAB>value<TAB>count` line per bucket.
  void save(std::ostream& out) const;
  [[nodiscard]] static LearnedReward load(std::istream& in);

  friend LearnedReward fit_learned_reward(const DiffusionProcess& process, const TerminalReward& terminal,
                                          std::size_t n_samples, std::uint64_t seed, const Context& context,
                                          const LearnedRewardOptions& options);

 private:
  [[nodiscard]] const Bucket* find(const State& x_t, int t) const;

  bool fitted_ = false;
  Layout layout_ = Layout::kTokenPattern;
  std::size_t grid_dimension_ = 0;
  std::size_t grid_cells_ = 0;
  double grid_lo_ = 0.0;
  double grid_hi_ = 0.0;
  double global_mean_ = 0.0;
  FitInfo info_;
  std::map<std::pair<int, std::string>, Bucket> buckets_;
};

[[nodiscard]] LearnedReward fit_learned_reward(const DiffusionProcess& process, const TerminalReward& terminal,
                                               std::size_t n_samples, std::uint64_t seed, const Context& context = {},
                                               const LearnedRewardOptions& options = {});

}  // namespace fksteer

#endif
