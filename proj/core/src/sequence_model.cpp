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

#include "fksteer/sequence_model.hpp"

#include <cmath>
#include <string>

#include "fksteer/error.hpp"
#include "fksteer/numeric.hpp"

namespace fksteer {

namespace {

void check_distribution(const std::vector<double>& p, const char* what) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw ContractViolation(std::string(what) + " has a negative entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ContractViolation(std::string(what) + " sums to " + std::to_string(total) + ", not 1");
  }
}

}  // namespace

void SequenceModel::check_partial(const TokenState& partial) const {
  if (partial.size() != length()) {
    throw ContractViolation("sequence has length " + std::to_string(partial.size()) + ", model has " +
                            std::to_string(length()));
  }
  const auto v = static_cast<Token>(vocab_size());
  for (Token token : partial) {
    if (token != kMask && (token < 0 || token >= v)) {
      throw ContractViolation("token " + std::to_string(token) + " outside vocabulary of size " + std::to_string(v));
    }
  }
}

MarkovChainModel::MarkovChainModel(std::vector<double> initial, std::vector<std::vector<double>> transition,
                                   std::size_t length)
    : initial_(std::move(initial)), transition_(std::move(transition)), length_(length) {
  if (initial_.empty()) throw ContractViolation("Markov chain needs a nonempty vocabulary");
  if (length_ == 0) throw ContractViolation("Markov chain needs a positive sequence length");
  check_distribution(initial_, "initial distribution");
  if (transition_.size() != initial_.size()) throw ContractViolation("transition matrix must be V x V");
  for (const auto& row : transition_) {
    if (row.size() != initial_.size()) throw ContractViolation("transition matrix must be V x V");
    check_distribution(row, "transition row");
  }
}

MarkovChainModel MarkovChainModel::uniform(std::size_t vocab_size, std::size_t length) {
  const double p = 1.0 / static_cast<double>(vocab_size);
  return MarkovChainModel(std::vector<double>(vocab_size, p),
                          std::vector<std::vector<double>>(vocab_size, std::vector<double>(vocab_size, p)), length);
}

double MarkovChainModel::filter(const TokenState& partial, std::vector<std::vector<double>>* filtered) const {
  const std::size_t v = initial_.size();
  std::vector<double> alpha(v);
  std::vector<double> next(v);
  double log_evidence = 0.0;
  for (std::size_t i = 0; i < length_; ++i) {
    for (std::size_t s = 0; s < v; ++s) {
      double prior = 0.0;
      if (i == 0) {
        prior = initial_[s];
      } else {
        for (std::size_t u = 0; u < v; ++u) prior += alpha[u] * transition_[u][s];
      }
      const bool allowed = partial[i] == kMask || partial[i] == static_cast<Token>(s);
      next[s] = allowed ? prior : 0.0;
    }
    double total = 0.0;
    for (double p : next) total += p;
    if (total <= 0.0) return kNegInf;
    log_evidence += std::log(total);
    for (std::size_t s = 0; s < v; ++s) alpha[s] = next[s] / total;
    if (filtered != nullptr) filtered->push_back(alpha);
  }
  return log_evidence;
}

double MarkovChainModel::log_prob_observed(const TokenState& partial) const {
  check_partial(partial);
  return filter(partial, nullptr);
}

TokenState MarkovChainModel::sample_completion(const TokenState& partial, Stream& stream) const {
  check_partial(partial);
  std::vector<std::vector<double>> filtered;
  filtered.reserve(length_);
  if (filter(partial, &filtered) == kNegInf) throw ContractViolation("conditioning on an impossible observation");
  // Backward sampling from the filtered marginals.
  TokenState out(length_);
  out[length_ - 1] = static_cast<Token>(stream.categorical(filtered[length_ - 1]));
  std::vector<double> weights(initial_.size());
  for (std::size_t i = length_ - 1; i-- > 0;) {
    const auto successor = static_cast<std::size_t>(out[i + 1]);
    for (std::size_t u = 0; u < weights.size(); ++u) weights[u] = filtered[i][u] * transition_[u][successor];
    out[i] = static_cast<Token>(stream.categorical(weights));
  }
  return out;
}

TableModel::TableModel(std::size_t vocab_size, std::size_t length, std::vector<double> probabilities)
    : vocab_size_(vocab_size), length_(length), probabilities_(std::move(probabilities)) {
  if (vocab_size_ == 0 || length_ == 0) throw ContractViolation("table model needs V >= 1 and L >= 1");
  const double size = std::pow(static_cast<double>(vocab_size_), static_cast<double>(length_));
  if (size > kMaxEnumeratedOutcomes) throw EnumerationTooLarge(size, kMaxEnumeratedOutcomes);
  if (static_cast<double>(probabilities_.size()) != size) {
    throw ContractViolation("table has " + std::to_string(probabilities_.size()) + " entries, expected V^L = " +
                            std::to_string(static_cast<std::size_t>(size)));
  }
  check_distribution(probabilities_, "sequence table");
}

TokenState TableModel::decode(std::size_t index) const {
  TokenState out(length_);
  for (std::size_t i = length_; i-- > 0;) {
    out[i] = static_cast<Token>(index % vocab_size_);
    index /= vocab_size_;
  }
  return out;
}

std::size_t TableModel::encode(const TokenState& sequence) const {
  std::size_t index = 0;
  for (Token token : sequence) index = index * vocab_size_ + static_cast<std::size_t>(token);
  return index;
}

bool TableModel::consistent(std::size_t index, const TokenState& partial) const {
  for (std::size_t i = length_; i-- > 0;) {
    const auto token = static_cast<Token>(index % vocab_size_);
    if (partial[i] != kMask && partial[i] != token) return false;
    index /= vocab_size_;
  }
  return true;
}

double TableModel::log_prob_observed(const TokenState& partial) const {
  check_partial(partial);
  double total = 0.0;
  for (std::size_t index = 0; index < probabilities_.size(); ++index) {
    if (consistent(index, partial)) total += probabilities_[index];
  }
  return total > 0.0 ? std::log(total) : kNegInf;
}

TokenState TableModel::sample_completion(const TokenState& partial, Stream& stream) const {
  check_partial(partial);
  std::vector<double> weights(probabilities_.size());
  bool any = false;
  for (std::size_t index = 0; index < probabilities_.size(); ++index) {
    weights[index] = consistent(index, partial) ? probabilities_[index] : 0.0;
    any = any || weights[index] > 0.0;
  }
  if (!any) throw ContractViolation("conditioning on an impossible observation");
  return decode(stream.categorical(weights));
}

}  // namespace fksteer
