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

#include "fksteer_harness/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fksteer/parallel.hpp"

namespace fksteer::harness {

namespace {

struct Point {
  std::string label = "all";
  FKConfig fk;
};

std::vector<Point> sweep_points(const ExperimentConfig& config) {
  if (!config.sweep) return {Point{"all", config.fk}};
  std::vector<Point> out;
  for (double v : config.sweep->values) {
    Point point{"", config.fk};
    if (config.sweep->axis == SweepAxis::kK) {
      point.fk.k = static_cast<std::size_t>(v);
      point.label = "k=" + format_number(v);
    } else {
      point.fk.lambda = v;
      point.label = "lambda=" + format_number(v);
    }
    out.push_back(std::move(point));
  }
  return out;
}

double target_lambda(SamplerKind sampler, const FKConfig& fk) { return sampler == SamplerKind::kBase ? 0.0 : fk.lambda; }

std::optional<double> weighted_tv(const Ensemble& ensemble, const ExactDistribution& target) {
  const auto weights = normalize_log_weights(ensemble.log_weights());
  Distribution empirical;
  for (std::size_t i = 0; i < ensemble.size(); ++i) empirical[as_tokens(ensemble.particles[i].state)] += weights[i];
  return tv_distance(empirical, target.probability);
}

RunRecord run_one(const ExperimentConfig& config, SamplerKind sampler, const Point& point, std::uint64_t seed,
                  std::size_t engine_threads, const ExactDistribution* target) {
  FKConfig fk = point.fk;
  fk.seed = seed;
  fk.threads = engine_threads;

  const auto start = std::chrono::steady_clock::now();
  SamplerResult result;
  switch (sampler) {
    case SamplerKind::kFK:
      result = fk_sample(fk, *config.process);
      break;
    case SamplerKind::kBestOfN:
      result = best_of_n(fk, *config.process);
      break;
    case SamplerKind::kSVDD:
      result = svdd_sample(fk, *config.process, config.svdd_greedy);
      break;
    case SamplerKind::kBase:
      result = base_sample(fk, *config.process);
      break;
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

  RunRecord record;
  record.point = point.label;
  ResultRow& row = record.row;
  row.seed = seed;
  row.sampler = std::string(sampler_name(sampler));
  row.k = fk.k;
  row.lambda = target_lambda(sampler, fk);
  switch (sampler) {
    case SamplerKind::kFK:
      row.potential = std::string(potential_name(fk.potential));
      break;
    case SamplerKind::kBestOfN:
      row.potential = "bon";
      break;
    case SamplerKind::kSVDD:
      row.potential = "difference";
      break;
    case SamplerKind::kBase:
      row.potential = "none";
      break;
  }
  row.proposal = std::string(proposal_name(sampler == SamplerKind::kBase ? ProposalKind::kBaseModel : fk.proposal.kind));

  const RunDiagnostics& diag = result.diagnostics;
  // Best-of-n reports only its highest-reward particle.
  row.mean_reward = sampler == SamplerKind::kBestOfN ? diag.final_rewards[diag.best_index]
                                                     : reward_summary(diag.sample_rewards).mean;
  row.max_reward = reward_summary(diag.final_rewards).max;
  if (config.attribute) {
    if (sampler == SamplerKind::kBase) {
      const auto states = result.ensemble.states();
      row.attribute_fraction = *reward_summary(diag.sample_rewards, states, *config.attribute).attribute_fraction;
    } else {
      row.attribute_fraction = satisfies(*config.attribute, diag.best_state) ? 1.0 : 0.0;
    }
  }
  if (target) row.tv = weighted_tv(result.ensemble, *target);
  if (fk.diversity_embedding && fk.k >= 2) row.diversity = diversity(result.ensemble.states(), *fk.diversity_embedding);
  row.log_Z_hat = diag.log_Z_hat;
  row.wall_time = elapsed.count();
  record.diagnostics = result.diagnostics;
  return record;
}

std::string optional_number(const std::optional<double>& value) { return value ? format_number(*value) : ""; }

nlohmann::json optional_json(const std::optional<double>& value) {
  return value ? nlohmann::json(*value) : nlohmann::json(nullptr);
}

}  // namespace

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> columns = {
      "seed",      "sampler",  "k",  "lambda",    "potential", "proposal",  "mean_reward",
      "max_reward", "attribute_fraction", "tv", "diversity", "log_Z_hat", "wall_time"};
  return columns;
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, end);
}

void write_csv(std::ostream& out, std::span<const RunRecord> records) {
  const auto& columns = csv_columns();
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << "\r\n";
  for (const auto& record : records) {
    const ResultRow& r = record.row;
    const std::vector<std::string> fields = {std::to_string(r.seed),
                                             r.sampler,
                                             std::to_string(r.k),
                                             format_number(r.lambda),
                                             r.potential,
                                             r.proposal,
                                             format_number(r.mean_reward),
                                             format_number(r.max_reward),
                                             optional_number(r.attribute_fraction),
                                             optional_number(r.tv),
                                             optional_number(r.diversity),
                                             format_number(r.log_Z_hat),
                                             format_number(r.wall_time)};
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << csv_field(fields[i]);
    out << "\r\n";
  }
}

void write_diagnostics(std::ostream& out, std::span<const RunRecord> records) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& record : records) {
    const RunDiagnostics& d = record.diagnostics;
    nlohmann::json run;
    run["point"] = record.point;
    run["seed"] = record.row.seed;
    run["sampler"] = record.row.sampler;
    run["k"] = record.row.k;
    run["lambda"] = record.row.lambda;
    run["steps"] = d.steps;
    run["ess_trace"] = d.ess_trace;
    run["resample_events"] = d.resample_events;
    run["log_Z_hat"] = d.log_Z_hat;
    run["final_rewards"] = d.final_rewards;
    run["best_index"] = d.best_index;
    run["best_state"] = format_state(d.best_state);
    run["sample_rewards"] = d.sample_rewards;
    run["diversity_trace"] = d.diversity_trace;
    run["diversity"] = optional_json(record.row.diversity);
    run["tv"] = optional_json(record.row.tv);
    runs.push_back(std::move(run));
  }
  out << runs.dump(2) << '\n';
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config, std::span<const SamplerKind> samplers,
                                      const RunOptions& options) {
  const auto points = sweep_points(config);
  const std::size_t seeds = options.seeds.value_or(config.repeats);
  if (seeds < 1) throw ContractViolation("at least one seed is required");

  // Exact targets are shared by every run at the same tilt.
  std::map<double, ExactDistribution> targets;
  if (config.oracle) {
    for (const auto& point : points) {
      for (SamplerKind sampler : samplers) {
        const double lambda = target_lambda(sampler, point.fk);
        if (!targets.contains(lambda)) {
          targets.emplace(lambda, exact_tilted_target(*config.masked, point.fk.reward.terminal, lambda,
                                                      point.fk.context));
        }
      }
    }
  }

  const std::size_t jobs = points.size() * seeds * samplers.size();
  const std::size_t threads = std::max<std::size_t>(options.threads, 1);
  const bool per_job = jobs >= threads;
  std::vector<RunRecord> records(jobs);
  parallel_for(jobs, per_job ? threads : 1, [&](std::size_t j) {
    const std::size_t s = j % samplers.size();
    const std::size_t seed_index = (j / samplers.size()) % seeds;
    const std::size_t p = j / (samplers.size() * seeds);
    const Point& point = points[p];
    const SamplerKind sampler = samplers[s];
    const auto it = targets.find(target_lambda(sampler, point.fk));
    records[j] = run_one(config, sampler, point, config.fk.seed + seed_index, per_job ? 1 : threads,
                         it == targets.end() ? nullptr : &it->second);
  });
  if (options.log) {
    for (const auto& record : records) {
      *options.log << record.point << " seed=" << record.row.seed << " sampler=" << record.row.sampler
                   << " mean_reward=" << format_number(record.row.mean_reward)
                   << " log_Z_hat=" << format_number(record.row.log_Z_hat) << '\n';
    }
  }
  return records;
}

std::vector<PairedDifference> paired_differences(std::span<const RunRecord> records) {
  std::vector<std::string> point_order;
  std::vector<std::string> sampler_order;
  std::map<std::pair<std::string, std::uint64_t>, std::map<std::string, const ResultRow*>> groups;
  for (const auto& record : records) {
    if (std::find(point_order.begin(), point_order.end(), record.point) == point_order.end()) {
      point_order.push_back(record.point);
    }
    if (std::find(sampler_order.begin(), sampler_order.end(), record.row.sampler) == sampler_order.end()) {
      sampler_order.push_back(record.row.sampler);
    }
    groups[{record.point, record.row.seed}][record.row.sampler] = &record.row;
  }

  std::vector<PairedDifference> out;
  auto summarize = [&](const std::string& point, const std::string& a, const std::string& b, const std::string& metric,
                       auto&& value) {
    std::vector<double> diffs;
    for (const auto& [key, rows] : groups) {
      if (key.first != point) continue;
      const auto ia = rows.find(a);
      const auto ib = rows.find(b);
      if (ia == rows.end() || ib == rows.end()) continue;
      const auto va = value(*ia->second);
      const auto vb = value(*ib->second);
      if (va && vb) diffs.push_back(*va - *vb);
    }
    if (diffs.empty()) return;
    PairedDifference d{point, a, b, metric, diffs.size(), 0.0, 0.0};
    for (double x : diffs) d.mean_difference += x;
    d.mean_difference /= static_cast<double>(diffs.size());
    if (diffs.size() > 1) {
      double squares = 0.0;
      for (double x : diffs) squares += (x - d.mean_difference) * (x - d.mean_difference);
      const double n = static_cast<double>(diffs.size());
      d.standard_error = std::sqrt(squares / (n - 1.0) / n);
    }
    out.push_back(std::move(d));
  };

  for (const auto& point : point_order) {
    for (std::size_t i = 0; i < sampler_order.size(); ++i) {
      for (std::size_t j = i + 1; j < sampler_order.size(); ++j) {
        summarize(point, sampler_order[i], sampler_order[j], "mean_reward",
                  [](const ResultRow& r) { return std::optional<double>(r.mean_reward); });
        summarize(point, sampler_order[i], sampler_order[j], "attribute_fraction",
                  [](const ResultRow& r) { return r.attribute_fraction; });
      }
    }
  }
  return out;
}

void write_paired_summary(std::ostream& out, std::span<const PairedDifference> differences) {
  out << "point,first,second,metric,pairs,mean_difference,standard_error\r\n";
  for (const auto& d : differences) {
    out << csv_field(d.point) << ',' << d.first << ',' << d.second << ',' << d.metric << ',' << d.pairs << ','
        << format_number(d.mean_difference) << ',' << format_number(d.standard_error) << "\r\n";
  }
}

namespace {

struct CliOptions {
  std::string config;
  std::string out;
  std::optional<std::size_t> seeds;
  std::size_t threads = 1;
  bool verbose = false;
};

void add_common_options(CLI::App* command, CliOptions& options) {
  command->add_option("--config", options.config, "Experiment config file (JSON)")->required();
  command->add_option("--out", options.out, "Output directory; overrides output.dir of the config");
  command->add_option("--seeds", options.seeds, "Number of seeds; overrides repeats of the config")
      ->check(CLI::PositiveNumber);
  command->add_option("--threads", options.threads, "Worker threads")->check(CLI::PositiveNumber);
  command->add_flag("--verbose", options.verbose, "Print one line per run");
}

std::filesystem::path output_dir(const CliOptions& options, const ExperimentConfig& config) {
  std::filesystem::path dir = options.out.empty() ? config.out_dir : std::filesystem::path(options.out);
  std::filesystem::create_directories(dir);
  return dir;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

int command_run(const CliOptions& options, std::ostream& out, std::ostream& err) {
  const ExperimentConfig config = load_config(options.config);
  const auto dir = output_dir(options, config);
  const SamplerKind samplers[] = {config.sampler};
  const auto records =
      run_experiment(config, samplers, RunOptions{options.seeds, options.threads, options.verbose ? &err : nullptr});
  auto csv = open_output(dir / config.csv_name);
  write_csv(csv, records);
  auto diagnostics = open_output(dir / config.diagnostics_name);
  write_diagnostics(diagnostics, records);
  out << "wrote " << records.size() << " rows to " << (dir / config.csv_name).string() << '\n';
  return 0;
}

int command_compare(const CliOptions& options, std::ostream& out, std::ostream& err) {
  const ExperimentConfig config = load_config(options.config);
  const auto dir = output_dir(options, config);
  const SamplerKind samplers[] = {SamplerKind::kFK, SamplerKind::kBestOfN, SamplerKind::kSVDD, SamplerKind::kBase};
  const auto records =
      run_experiment(config, samplers, RunOptions{options.seeds, options.threads, options.verbose ? &err : nullptr});
  auto csv = open_output(dir / "compare.csv");
  write_csv(csv, records);
  auto diagnostics = open_output(dir / "compare_diagnostics.json");
  write_diagnostics(diagnostics, records);
  const auto differences = paired_differences(records);
  auto summary = open_output(dir / "compare_summary.csv");
  write_paired_summary(summary, differences);
  for (const auto& d : differences) {
    out << d.point << ' ' << d.first << " - " << d.second << ' ' << d.metric << ": " << format_number(d.mean_difference)
        << " (se " << format_number(d.standard_error) << ", n " << d.pairs << ")\n";
  }
  return 0;
}

int command_oracle(const CliOptions& options, std::ostream& out) {
  const ExperimentConfig config = load_config(options.config);
  if (!config.masked) throw Unsupported("the oracle needs the masked process");
  const auto dir = output_dir(options, config);
  std::vector<double> lambdas = {config.fk.lambda};
  if (config.sweep && config.sweep->axis == SweepAxis::kLambda) lambdas = config.sweep->values;

  nlohmann::json summary = nlohmann::json::array();
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const auto target = exact_tilted_target(*config.masked, config.fk.reward.terminal, lambdas[i], config.fk.context);
    const std::string name = lambdas.size() == 1 ? "target.tsv" : "target_" + std::to_string(i) + ".tsv";
    auto file = open_output(dir / name);
    write_distribution(file, target);
    nlohmann::json entry;
    entry["lambda"] = lambdas[i];
    entry["Z"] = target.Z;
    entry["log_Z"] = target.log_Z;
    entry["file"] = name;
    if (config.attribute) {
      double mass = 0.0;
      for (const auto& [x, p] : target.probability) mass += satisfies(*config.attribute, State{x}) ? p : 0.0;
      entry["attribute_probability"] = mass;
    }
    summary.push_back(std::move(entry));
    out << "lambda " << format_number(lambdas[i]) << ": Z = " << format_number(target.Z) << ", " << name << '\n';
  }
  auto file = open_output(dir / "oracle.json");
  file << summary.dump(2) << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feynman-Kac steering of toy diffusion processes", "fksteer"};
  app.require_subcommand(1);
  CliOptions options;
  auto* run = app.add_subcommand("run", "Run the configured sampler over seeds and sweep points");
  auto* compare = app.add_subcommand("compare", "Run fk, bon, svdd and base on identical seeds");
  auto* oracle = app.add_subcommand("oracle", "Write the exact tilted target of an enumerable config");
  for (auto* command : {run, compare, oracle}) add_common_options(command, options);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (run->parsed()) return command_run(options, out, err);
    if (compare->parsed()) return command_compare(options, out, err);
    return command_oracle(options, out);
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace fksteer::harness
