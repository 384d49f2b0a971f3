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

#include "fksteer/state.hpp"

#include <algorithm>
#include <cstdio>

#include "fksteer/error.hpp"

namespace fksteer {

std::string format_tokens(const TokenState& tokens) {
  std::string out;
  out.reserve(tokens.size());
  for (Token token : tokens) {
    if (token == kMask) {
      out.push_back('_');
    } else if (token >= 0 && token < 26) {
      out.push_back(static_cast<char>('A' + token));
    } else {
      throw ContractViolation("token " + std::to_string(token) + " has no letter rendering");
    }
  }
  return out;
}

TokenState parse_tokens(std::string_view text) {
  TokenState out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '_') {
      out.push_back(kMask);
    } else if (c >= 'A' && c <= 'Z') {
      out.push_back(c - 'A');
    } else {
      throw ContractViolation(std::string("invalid token character '") + c + "'");
    }
  }
  return out;
}

std::string format_state(const State& state) {
  if (const auto* tokens = std::get_if<TokenState>(&state)) return format_tokens(*tokens);
  std::string out = "(";
  const auto& x = std::get<RealState>(state);
  char buffer[32];
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::snprintf(buffer, sizeof buffer, "%.17g", x[i]);
    if (i > 0) out += ' ';
    out += buffer;
  }
  return out + ")";
}

bool has_mask(const TokenState& tokens) noexcept {
  return std::find(tokens.begin(), tokens.end(), kMask) != tokens.end();
}

const RealState& as_real(const State& state) {
  if (const auto* x = std::get_if<RealState>(&state)) return *x;
  throw ContractViolation("expected a real-vector state");
}

const TokenState& as_tokens(const State& state) {
  if (const auto* x = std::get_if<TokenState>(&state)) return *x;
  throw ContractViolation("expected a token-sequence state");
}

}  // namespace fksteer
