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

#include "fksteer/diffusion.hpp"

#include <string>

#include "fksteer/error.hpp"

namespace fksteer {

TimeGrid::TimeGrid(int num_steps) : num_steps_(num_steps) {
  if (num_steps < 1) throw ContractViolation("time grid needs T >= 1, got " + std::to_string(num_steps));
  steps_.reserve(static_cast<std::size_t>(num_steps) + 1);
  for (int t = num_steps; t >= 0; --t) steps_.push_back(t);
}

State DiffusionProcess::rollout(State x, int t, const Context& context, Stream& stream) const {
  check_time(t);
  for (int s = t - 1; s >= 0; --s) x = reverse_sample(x, s, context, stream).state;
  return x;
}

void DiffusionProcess::check_time(int t) const {
  if (t < 0 || t > num_steps()) {
    throw ContractViolation("time index " + std::to_string(t) + " outside [0, " + std::to_string(num_steps()) + "]");
  }
}

void DiffusionProcess::check_reverse_time(int t) const {
  if (t < 0 || t >= num_steps()) {
    throw ContractViolation("reverse step target " + std::to_string(t) + " outside [0, " +
                            std::to_string(num_steps() - 1) + "]");
  }
}

}  // namespace fksteer
