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

#include "fksteer/metrics.hpp"

#include <algorithm>
#include <string>

#include "fksteer/error.hpp"

namespace fksteer {

EmbeddingKind parse_embedding(std::string_view name) {
  if (name == "identity") return EmbeddingKind::kIdentity;
  if (name == "one-hot-flatten" || name == "one-hot") return EmbeddingKind::kOneHotFlatten;
  if (name == "user-table") return EmbeddingKind::kUserTable;
  throw ContractViolation("unknown embedding '" + std::string(name) + "'");
}

std::vector<double> embed(const EmbeddingSpec& spec, const State& state) {
  if (const auto* real = std::get_if<RealState>(&state)) {
    if (spec.kind != EmbeddingKind::kIdentity) throw ContractViolation("real states only support the identity embedding");
    return *real;
  }
  const auto& tokens = std::get<TokenState>(state);
  switch (spec.kind) {
    case EmbeddingKind::kIdentity:
      return {tokens.begin(), tokens.end()};
    case EmbeddingKind::kOneHotFlatten: {
      if (spec.vocab_size == 0) throw ContractViolation("one-hot embedding needs the vocabulary size");
      const std::size_t width = spec.vocab_size + 1;
      std::vector<double> out(tokens.size() * width, 0.0);
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::size_t slot = tokens[i] == kMask ? spec.vocab_size : static_cast<std::size_t>(tokens[i]);
        if (slot >= width) throw ContractViolation("token outside the embedding vocabulary");
        out[i * width + slot] = 1.0;
      }
      return out;
    }
    case EmbeddingKind::kUserTable: {
      std::vector<double> out;
      for (Token token : tokens) {
        if (token < 0 || static_cast<std::size_t>(token) >= spec.table.size()) {
          throw ContractViolation("token " + std::to_string(token) + " has no row in the embedding table");
        }
        const auto& row = spec.table[static_cast<std::size_t>(token)];
        out.insert(out.end(), row.begin(), row.end());
      }
      return out;
    }
  }
  throw ContractViolation("unknown embedding kind");
}

double diversity(std::span<const State> states, const EmbeddingSpec& spec) {
  const std::size_t k = states.size();
  if (k < 2) throw ContractViolation("diversity is undefined for fewer than two particles");
  std::vector<std::vector<double>> embedded;
  embedded.reserve(k);
  for (const auto& s : states) embedded.push_back(embed(spec, s));
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (embedded[i].size() != embedded[j].size()) throw ContractViolation("embeddings differ in dimension");
      double squared = 0.0;
      for (std::size_t n = 0; n < embedded[i].size(); ++n) {
        const double d = embedded[i][n] - embedded[j][n];
        squared += d * d;
      }
      total += squared;
    }
  }
  return 2.0 * total / (static_cast<double>(k) * static_cast<double>(k - 1));
}

RewardSummary reward_summary(std::span<const double> rewards) {
  if (rewards.empty()) throw ContractViolation("reward summary of an empty set");
  RewardSummary out;
  double total = 0.0;
  for (double r : rewards) total += r;
  out.mean = total / static_cast<double>(rewards.size());
  const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
  out.min = *lo;
  out.max = *hi;
  return out;
}

RewardSummary reward_summary(std::span<const double> rewards, std::span<const State> states,
                             const AttributePredicate& predicate) {
  RewardSummary out = reward_summary(rewards);
  if (states.empty()) throw ContractViolation("attribute fraction of an empty set");
  std::size_t hits = 0;
  for (const auto& s : states) hits += satisfies(predicate, s) ? 1 : 0;
  out.attribute_fraction = static_cast<double>(hits) / static_cast<double>(states.size());
  return out;
}

}  // namespace fksteer
