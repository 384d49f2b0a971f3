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

#include "fksteer/random.hpp"

#include <cmath>
#include <numbers>

namespace fksteer {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

inline std::uint32_t lo32(std::uint64_t v) noexcept { return static_cast<std::uint32_t>(v); }
inline std::uint32_t hi32(std::uint64_t v) noexcept { return static_cast<std::uint32_t>(v >> 32); }

}  // namespace

Philox4x32Counter philox4x32(Philox4x32Counter c, Philox4x32Key k) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c[0], hi0, lo0);
    mulhilo(kPhiloxM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kPhiloxW0;
    k[1] += kPhiloxW1;
  }
  return c;
}

Stream::Stream(std::uint64_t seed, std::int64_t t, std::uint64_t particle, Purpose purpose) noexcept
    : key_{lo32(seed), hi32(seed)},
      address_{static_cast<std::uint32_t>(t), lo32(particle) ^ (hi32(particle) * 0x9E3779B9u),
               static_cast<std::uint32_t>(purpose)} {}

Stream::Stream(Philox4x32Key key, std::array<std::uint32_t, 3> address) noexcept : key_(key), address_(address) {}

void Stream::refill() noexcept {
  buffer_ = philox4x32({block_, address_[0], address_[1], address_[2]}, key_);
  ++block_;
  used_ = 0;
}

std::uint64_t Stream::next_u64() noexcept {
  if (used_ > 2) refill();
  const std::uint64_t value = (static_cast<std::uint64_t>(buffer_[used_]) << 32) | buffer_[used_ + 1];
  used_ += 2;
  return value;
}

double Stream::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Stream::uniform_open() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

double Stream::normal() noexcept {
  if (spare_normal_) {
    const double value = *spare_normal_;
    spare_normal_.reset();
    return value;
  }
  const double radius = std::sqrt(-2.0 * std::log(uniform_open()));
  const double angle = 2.0 * std::numbers::pi * uniform();
  spare_normal_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

Stream Stream::substream(std::uint64_t tag) const noexcept {
  // Keyed hash of (address, tag) gives the child key and address.
  const Philox4x32Key mixed{key_[0] ^ hi32(tag), key_[1] ^ 0x5BD1E995u};
  const auto out = philox4x32({address_[0], address_[1], address_[2], lo32(tag)}, mixed);
  return Stream(Philox4x32Key{out[0], out[1]}, {out[2], out[3], lo32(tag) ^ 0xA5A5A5A5u});
}

}  // namespace fksteer
