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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fksteer_harness/config.hpp"
#include "fksteer_harness/experiment.hpp"

namespace fksteer::harness {
namespace {

namespace fs = std::filesystem;

const fs::path kConfigDir = FKSTEER_CONFIG_DIR;
const fs::path kDataDir = FKSTEER_TEST_DATA_DIR;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fksteer_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int cli(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::vector<const char*> argv = {"fksteer"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text != nullptr) *err_text = err.str();
  return code;
}

std::string csv_without_wall_time(std::vector<RunRecord> records) {
  for (auto& r : records) r.row.wall_time = 0.0;
  std::ostringstream out;
  write_csv(out, records);
  return out.str();
}

const char* kSmallConfig = R"({
  "process": {"type": "masked", "vocab_size": 2, "length": 2, "num_steps": 4},
  "reward": {"terminal": {"type": "token-count", "token": "A"}},
  "k": 4,
  "lambda": 0.5,
  "repeats": 3
})";

TEST(Config, ParsesMinimalConfig) {
  const auto config = parse_config(kSmallConfig);
  EXPECT_EQ(config.fk.k, 4u);
  EXPECT_EQ(config.fk.lambda, 0.5);
  EXPECT_EQ(config.repeats, 3u);
  EXPECT_EQ(config.sampler, SamplerKind::kFK);
  EXPECT_TRUE(config.masked != nullptr);
  EXPECT_EQ(config.process->num_steps(), 4);
}

TEST(Config, ShippedConfigsParse) {
  for (const char* name : {"reference_toy.json", "rare_attribute.json", "gaussian_radial.json"}) {
    EXPECT_NO_THROW((void)load_config(kConfigDir / name)) << name;
  }
}

TEST(Config, SyntaxErrorReportsLine) {
  try {
    (void)load_config(kDataDir / "bad_syntax.json");
    FAIL() << "expected a config error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Config, UnknownFieldReportsPath) {
  try {
    (void)parse_config(R"({"process": {"type": "masked", "vocab_size": 2, "length": 2, "colour": 1},
                           "reward": {"terminal": {"type": "token-count", "token": "A"}}})");
    FAIL() << "expected a config error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "process.colour");
  }
}

TEST(Config, InvalidValuesReportField) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {R"({"process": {"type": "masked", "vocab_size": 2, "length": 2},
           "reward": {"terminal": {"type": "token-count", "token": "A"}}, "k": -3})",
       "k"},
      {R"({"process": {"type": "masked", "vocab_size": 2, "length": 2},
           "reward": {"terminal": {"type": "token-count", "token": "A"}}, "potential": "product"})",
       "potential"},
      {R"({"process": {"type": "masked", "vocab_size": 2, "length": 2}})", "reward"},
      {R"({"process": {"type": "masked", "vocab_size": 2, "length": 2},
           "reward": {"terminal": {"type": "token-count", "token": "A"}},
           "schedule": {"ess_gate": "sometimes"}})",
       "schedule.ess_gate"},
  };
  for (const auto& [text, field] : cases) {
    try {
      (void)parse_config(text);
      ADD_FAILURE() << "expected a config error for " << field;
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.field(), field) << e.what();
    }
  }
}

TEST(Config, MissingFileIsConfigError) {
  EXPECT_THROW((void)load_config(kDataDir / "does_not_exist.json"), ConfigError);
}

TEST(Csv, QuotingFollowsRfc4180) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
  EXPECT_EQ(csv_field(""), "");
}

TEST(Csv, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.0, 0.0}) {
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
  EXPECT_EQ(format_number(0.5), "0.5");
}

TEST(Csv, HeaderAndRowShape) {
  const auto config = parse_config(kSmallConfig);
  const SamplerKind samplers[] = {SamplerKind::kFK};
  const auto records = run_experiment(config, samplers, RunOptions{});
  std::ostringstream out;
  write_csv(out, records);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find("\r\n")),
            "seed,sampler,k,lambda,potential,proposal,mean_reward,max_reward,attribute_fraction,tv,diversity,"
            "log_Z_hat,wall_time");
  std::size_t lines = 0;
  for (std::size_t pos = 0; (pos = text.find("\r\n", pos)) != std::string::npos; pos += 2) ++lines;
  EXPECT_EQ(lines, 4u);
}

TEST(Experiment, IdenticalCsvAcrossThreadCounts) {
  auto config = load_config(kConfigDir / "reference_toy.json");
  const SamplerKind samplers[] = {SamplerKind::kFK, SamplerKind::kBestOfN, SamplerKind::kSVDD, SamplerKind::kBase};
  const auto one = run_experiment(config, samplers, RunOptions{3, 1, nullptr});
  const auto eight = run_experiment(config, samplers, RunOptions{3, 8, nullptr});
  EXPECT_EQ(csv_without_wall_time(one), csv_without_wall_time(eight));
  std::ostringstream a;
  std::ostringstream b;
  write_diagnostics(a, one);
  write_diagnostics(b, eight);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Experiment, BaseIgnoresLambda) {
  auto config = parse_config(kSmallConfig);
  const SamplerKind samplers[] = {SamplerKind::kBase};
  const auto low = run_experiment(config, samplers, RunOptions{});
  config.fk.lambda = 9.0;
  const auto high = run_experiment(config, samplers, RunOptions{});
  EXPECT_EQ(csv_without_wall_time(low), csv_without_wall_time(high));
  for (const auto& r : low) EXPECT_EQ(r.row.lambda, 0.0);
}

TEST(Experiment, SweepRowsAndShrinkingTv) {
  const auto config = load_config(kConfigDir / "reference_toy.json");
  const SamplerKind samplers[] = {SamplerKind::kFK};
  const auto records = run_experiment(config, samplers, RunOptions{});
  ASSERT_EQ(records.size(), 4u * config.repeats);
  std::vector<std::string> order;
  std::map<std::string, double> tv;
  for (const auto& r : records) {
    if (order.empty() || order.back() != r.point) order.push_back(r.point);
    ASSERT_TRUE(r.row.tv.has_value());
    tv[r.point] += *r.row.tv / static_cast<double>(config.repeats);
  }
  ASSERT_EQ(order, (std::vector<std::string>{"k=4", "k=16", "k=64", "k=256"}));
  for (std::size_t i = 1; i < order.size(); ++i) EXPECT_LE(tv[order[i]], tv[order[i - 1]]) << order[i];
}

TEST(Experiment, PairedDifferencesPairBySeed) {
  auto config = parse_config(kSmallConfig);
  const SamplerKind samplers[] = {SamplerKind::kFK, SamplerKind::kBase};
  const auto records = run_experiment(config, samplers, RunOptions{});
  const auto differences = paired_differences(records);
  ASSERT_FALSE(differences.empty());
  const auto& d = differences.front();
  EXPECT_EQ(d.first, "fk");
  EXPECT_EQ(d.second, "base");
  EXPECT_EQ(d.metric, "mean_reward");
  EXPECT_EQ(d.pairs, 3u);
  double expected = 0.0;
  for (std::size_t s = 0; s < 3; ++s) expected += records[2 * s].row.mean_reward - records[2 * s + 1].row.mean_reward;
  EXPECT_NEAR(d.mean_difference, expected / 3.0, 1e-12);
}

TEST(Cli, RunWritesOutputs) {
  const auto dir = scratch_dir("run");
  EXPECT_EQ(cli({"run", "--config", (kConfigDir / "reference_toy.json").string(), "--out", dir.string(), "--seeds",
                 "2", "--threads", "2"}),
            0);
  const std::string csv = read_file(dir / "results.csv");
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n' ? 1 : 0;
  EXPECT_EQ(lines, 1u + 4u * 2u);
  EXPECT_EQ(read_file(dir / "diagnostics.json").front(), '[');
}

TEST(Cli, CompareWritesOutputs) {
  const auto dir = scratch_dir("compare");
  EXPECT_EQ(cli({"compare", "--config", (kConfigDir / "rare_attribute.json").string(), "--out", dir.string(),
                 "--seeds", "3"}),
            0);
  EXPECT_TRUE(fs::exists(dir / "compare.csv"));
  EXPECT_TRUE(fs::exists(dir / "compare_diagnostics.json"));
  const std::string summary = read_file(dir / "compare_summary.csv");
  EXPECT_NE(summary.find("fk,bon,mean_reward"), std::string::npos);
  EXPECT_NE(summary.find("fk,bon,attribute_fraction"), std::string::npos);
}

TEST(Cli, OracleWritesTarget) {
  const auto dir = scratch_dir("oracle");
  EXPECT_EQ(cli({"oracle", "--config", (kConfigDir / "reference_toy.json").string(), "--out", dir.string()}), 0);
  EXPECT_EQ(read_file(dir / "target.tsv").rfind("# Z 2.25", 0), 0u);
  EXPECT_NE(read_file(dir / "oracle.json").find("\"Z\""), std::string::npos);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch_dir("codes");
  std::string err;
  EXPECT_EQ(cli({"run", "--config", (kDataDir / "bad_syntax.json").string(), "--out", dir.string()}, &err), 2);
  EXPECT_NE(err.find("line 3"), std::string::npos);
  EXPECT_EQ(cli({"run", "--config", (kDataDir / "missing.json").string()}), 2);
  EXPECT_EQ(cli({"run"}), 2);
  EXPECT_EQ(cli({"frobnicate"}), 2);
  EXPECT_EQ(cli({"run", "--config", (kConfigDir / "reference_toy.json").string(), "--threads", "0"}), 2);
  EXPECT_EQ(cli({"oracle", "--config", (kConfigDir / "gaussian_radial.json").string(), "--out", dir.string()}, &err),
            1);
  EXPECT_EQ(err.rfind("error: ", 0), 0u);
}

}  // namespace
}  // namespace fksteer::harness
