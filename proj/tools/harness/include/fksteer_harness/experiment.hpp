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

#ifndef FKSTEER_HARNESS_EXPERIMENT_HPP
#define FKSTEER_HARNESS_EXPERIMENT_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fksteer_harness/config.hpp"

namespace fksteer::harness {

/// One CSV row: one sampler run at one seed and sweep point.
struct ResultRow {
  std::uint64_t seed = 0;
  std::string sampler;
  std::size_t k = 0;
  double lambda = 0.0;
  std::string potential;
  std::string proposal;
  double mean_reward = 0.0;
  double max_reward = 0.0;
  std::optional<double> attribute_fraction;
  std::optional<double> tv;
  std::optional<double> diversity;
  double log_Z_hat = 0.0;
  double wall_time = 0.0;
};

struct RunRecord {
  std::string point;  ///< sweep point label, e.g. "k=16"; "all" without a sweep
  ResultRow row;
  RunDiagnostics diagnostics;
};

/// The fixed column order of every results CSV.
[[nodiscard]] const std::vector<std::string>& csv_columns();

/// RFC 4180 quoting: fields containing a comma, quote, CR or LF are quoted with quotes doubled.
[[nodiscard]] std::string csv_field(const std::string& value);

/// Shortest decimal text that reads back to the same double.
[[nodiscard]] std::string format_number(double value);

void write_csv(std::ostream& out, std::span<const RunRecord> records);

/// JSON array with one object per run; see README for the keys.
void write_diagnostics(std::ostream& out, std::span<const RunRecord> records);

struct RunOptions {
  std::optional<std::size_t> seeds;  ///< overrides `repeats`
  std::size_t threads = 1;
  std::ostream* log = nullptr;       ///< progress lines when set
};

/// Runs `samplers` on every sweep point and seed. Records are ordered by sweep point, then seed, then
/// the order of `samplers`, independent of the thread count.
[[nodiscard]] std::vector<RunRecord> run_experiment(const ExperimentConfig& config, std::span<const SamplerKind> samplers,
                                                    const RunOptions& options);

/// Mean over seeds of (a - b) for one metric, with the standard error of that mean.
struct PairedDifference {
  std::string point;
  std::string first;
  std::string second;
  std::string metric;
  std::size_t pairs = 0;
  double mean_difference = 0.0;
  double standard_error = 0.0;
};

/// Paired differences of mean_reward and attribute_fraction between every pair of samplers, per sweep point.
[[nodiscard]] std::vector<PairedDifference> paired_differences(std::span<const RunRecord> records);

void write_paired_summary(std::ostream& out, std::span<const PairedDifference> differences);

/// Entry point shared by the executable and the integration tests. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fksteer::harness

#endif
