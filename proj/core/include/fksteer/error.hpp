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

#ifndef FKSTEER_ERROR_HPP
#define FKSTEER_ERROR_HPP

#include <stdexcept>
#include <string>

namespace fksteer {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation was violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Every particle carries zero weight; the ensemble cannot be resampled.
class DegenerateEnsemble : public Error {
 public:
  explicit DegenerateEnsemble(int t)
      : Error("degenerate ensemble at step t=" + std::to_string(t) + ": every particle has zero weight"), step_(t) {}

  [[nodiscard]] int step() const noexcept { return step_; }

 private:
  int step_;
};

/// A reward evaluation produced NaN or an infinity.
class NonFiniteReward : public Error {
 public:
  NonFiniteReward(std::size_t particle, int t, double value)
      : Error("non-finite reward " + std::to_string(value) + " for particle " + std::to_string(particle) +
              " at step t=" + std::to_string(t)),
        particle_(particle) {}

  [[nodiscard]] std::size_t particle() const noexcept { return particle_; }

 private:
  std::size_t particle_;
};

/// A learned reward was queried before it was fitted or loaded.
class UnfittedModel : public Error {
 public:
  UnfittedModel() : Error("learned reward model has not been fitted") {}
};

/// The requested operation is not defined for this combination of inputs.
class Unsupported : public Error {
 public:
  using Error::Error;
};

/// Exact enumeration was requested on a state space above the enumeration bound.
class EnumerationTooLarge : public Error {
 public:
  EnumerationTooLarge(double size, double bound)
      : Error("state space of size " + std::to_string(size) + " exceeds the enumeration bound " +
              std::to_string(bound)) {}
  explicit EnumerationTooLarge(const std::string& message) : Error(message) {}
};

}  // namespace fksteer

#endif
