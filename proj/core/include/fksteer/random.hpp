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

#ifndef FKSTEER_RANDOM_HPP
#define FKSTEER_RANDOM_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <optional>

/**
 * \file
 * \brief Counter-based random streams.
 *
 * Every draw made by the library comes from a Philox4x32-10 block cipher keyed by the run seed and
 * addressed by (time index, particle index, purpose). A draw therefore never depends on which thread
 * made it or in which order particles were processed.
 */

namespace fksteer {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
[[nodiscard]] Philox4x32Counter philox4x32(Philox4x32Counter counter, Philox4x32Key key) noexcept;

/// What a stream is used for. Distinct purposes never share draws.
enum class Purpose : std::uint32_t {
  kPrior = 1,
  kPropose = 2,
  kReward = 3,
  kResample = 4,
  kSelect = 5,
  kData = 6,
  kForward = 7,
  kHoldout = 8,
  kUser = 0x100,
};

/// A sequential view onto the counter space of one (seed, t, particle, purpose) address.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t seed, std::int64_t t, std::uint64_t particle, Purpose purpose) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept;

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;

  /// Uniform in (0, 1); never returns an endpoint.
  double uniform_open() noexcept;

  /// Standard normal via Box-Muller.
  double normal() noexcept;

  /// Index drawn from unnormalized nonnegative weights.
  template <class Range>
  std::size_t categorical(const Range& weights) noexcept {
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = uniform() * total;
    double acc = 0.0;
    std::size_t index = 0;
    std::size_t last_positive = 0;
    for (double w : weights) {
      if (w > 0.0) last_positive = index;
      acc += w;
      if (u < acc && w > 0.0) return index;
      ++index;
    }
    return last_positive;
  }

  /// An independent stream addressed by this stream's coordinates and `tag`.
  [[nodiscard]] Stream substream(std::uint64_t tag) const noexcept;

 private:
  Stream(Philox4x32Key key, std::array<std::uint32_t, 3> address) noexcept;

  void refill() noexcept;

  Philox4x32Key key_;
  std::array<std::uint32_t, 3> address_;
  std::uint32_t block_ = 0;
  Philox4x32Counter buffer_{};
  int used_ = 4;
  std::optional<double> spare_normal_;
};

}  // namespace fksteer

#endif
