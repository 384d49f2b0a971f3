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

#ifndef FKSTEER_SEQUENCE_MODEL_HPP
#define FKSTEER_SEQUENCE_MODEL_HPP

#include <cstddef>
#include <vector>

#include "fksteer/random.hpp"
#include "fksteer/state.hpp"

namespace fksteer {

/// A distribution over fixed-length token sequences that supports partial observation.
class SequenceModel {
 public:
  virtual ~SequenceModel() = default;

  [[nodiscard]] virtual std::size_t vocab_size() const noexcept = 0;
  [[nodiscard]] virtual std::size_t length() const noexcept = 0;

  /// log P(x_i = partial_i for every unmasked i). -inf when the observation is impossible.
  [[nodiscard]] virtual double log_prob_observed(const TokenState& partial) const = 0;

  /// A full sequence drawn from P(x | unmasked positions of `partial`).
  [[nodiscard]] virtual TokenState sample_completion(const TokenState& partial, Stream& stream) const = 0;

 protected:
  void check_partial(const TokenState& partial) const;
};

/// First-order Markov chain: initial distribution and a row-stochastic transition matrix.
class MarkovChainModel final : public SequenceModel {
 public:
  MarkovChainModel(std::vector<double> initial, std::vector<std::vector<double>> transition, std::size_t length);

  /// Every sequence equally likely.
  [[nodiscard]] static MarkovChainModel uniform(std::size_t vocab_size, std::size_t length);

  [[nodiscard]] std::size_t vocab_size() const noexcept override { return initial_.size(); }
  [[nodiscard]] std::size_t length() const noexcept override { return length_; }
  [[nodiscard]] double log_prob_observed(const TokenState& partial) const override;
  [[nodiscard]] TokenState sample_completion(const TokenState& partial, Stream& stream) const override;

 private:
  /// Normalized filtering distributions P(x_i | observations up to i); returns the log evidence.
  double filter(const TokenState& partial, std::vector<std::vector<double>>* filtered) const;

  std::vector<double> initial_;
  std::vector<std::vector<double>> transition_;
  std::size_t length_;
};

/// An explicit probability table over all V^L sequences, indexed lexicographically.
class TableModel final : public SequenceModel {
 public:
  TableModel(std::size_t vocab_size, std::size_t length, std::vector<double> probabilities);

  [[nodiscard]] std::size_t vocab_size() const noexcept override { return vocab_size_; }
  [[nodiscard]] std::size_t length() const noexcept override { return length_; }
  [[nodiscard]] double log_prob_observed(const TokenState& partial) const override;
  [[nodiscard]] TokenState sample_completion(const TokenState& partial, Stream& stream) const override;

  [[nodiscard]] TokenState decode(std::size_t index) const;
  [[nodiscard]] std::size_t encode(const TokenState& sequence) const;

 private:
  [[nodiscard]] bool consistent(std::size_t index, const TokenState& partial) const;

  std::size_t vocab_size_;
  std::size_t length_;
  std::vector<double> probabilities_;
};

/// Upper bound on V^L for table models and exact enumeration.
inline constexpr double kMaxEnumeratedOutcomes = 1e6;

}  // namespace fksteer

#endif
