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

#ifndef FKSTEER_STATE_HPP
#define FKSTEER_STATE_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fksteer {

using Token = std::int32_t;

/// The absorbing mask symbol of the masked discrete process.
inline constexpr Token kMask = -1;

using RealState = std::vector<double>;
using TokenState = std::vector<Token>;

/// A point of a generative process's state space.
using State = std::variant<RealState, TokenState>;

/// Per-position token distributions; one row of size V per sequence position.
using TokenPosterior = std::vector<std::vector<double>>;

/// The denoised estimate of x0: a point for real states, a simplex per position for token states.
using DenoisedEstimate = std::variant<RealState, TokenPosterior>;

/// Opaque conditioning payload. Immutable for the duration of a run.
struct Context {
  /// Tokens pinned at the start of the sequence (masked process only).
  TokenState prefix;
  /// Mixture component the data is restricted to (Gaussian process only).
  std::optional<std::size_t> component;
};

/// Renders tokens as letters A, B, ... with '_' for the mask.
[[nodiscard]] std::string format_tokens(const TokenState& tokens);

/// Inverse of format_tokens. Throws ContractViolation on characters outside [A-Z_].
[[nodiscard]] TokenState parse_tokens(std::string_view text);

[[nodiscard]] std::string format_state(const State& state);

[[nodiscard]] bool has_mask(const TokenState& tokens) noexcept;

[[nodiscard]] const RealState& as_real(const State& state);
[[nodiscard]] const TokenState& as_tokens(const State& state);

}  // namespace fksteer

#endif
