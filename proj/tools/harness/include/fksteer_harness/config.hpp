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

#ifndef FKSTEER_HARNESS_CONFIG_HPP
#define FKSTEER_HARNESS_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fksteer/fksteer.hpp"

namespace fksteer::harness {

/// A config file that cannot be parsed or names an invalid value. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message, int line = 0)
      : std::runtime_error(format(field, message, line)), field_(std::move(field)), line_(line) {}

  [[nodiscard]] const std::string& field() const noexcept { return field_; }
  [[nodiscard]] int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& field, const std::string& message, int line) {
    std::string out = "config error";
    if (line > 0) out += " at line " + std::to_string(line);
    if (!field.empty()) out += " in field '" + field + "'";
    return out + ": " + message;
  }

  std::string field_;
  int line_;
};

enum class SamplerKind { kFK, kBestOfN, kSVDD, kBase };

[[nodiscard]] std::string_view sampler_name(SamplerKind kind) noexcept;

enum class SweepAxis { kK, kLambda };

struct Sweep {
  SweepAxis axis = SweepAxis::kK;
  std::vector<double> values;
};

/// Everything one config file determines.
struct ExperimentConfig {
  std::shared_ptr<const DiffusionProcess> process;
  /// Set when the process is the masked toy; enables the oracle.
  std::shared_ptr<const MaskedDiscreteDiffusion> masked;
  FKConfig fk;
  SamplerKind sampler = SamplerKind::kFK;
  bool svdd_greedy = false;
  std::optional<AttributePredicate> attribute;
  std::size_t repeats = 1;
  std::optional<Sweep> sweep;
  bool oracle = false;
  std::filesystem::path out_dir = "out";
  std::string csv_name = "results.csv";
  std::string diagnostics_name = "diagnostics.json";
  /// Learned reward, when the intermediate estimator is learned (also set in fk.reward).
  std::shared_ptr<const LearnedReward> learned;
};

/// Parses JSON text. `base_dir` resolves relative paths named in the config.
[[nodiscard]] ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");

/// Reads and parses a config file. Throws ConfigError (also when the file cannot be read).
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace fksteer::harness

#endif
