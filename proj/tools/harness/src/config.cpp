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

#include "fksteer_harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fksteer::harness {

namespace {

using nlohmann::json;

/// A view of one JSON object that records which keys were read so leftovers can be rejected.
class Node {
 public:
  Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {
    if (!value_.is_object()) fail("expected an object");
  }

  [[nodiscard]] const std::string& path() const noexcept { return path_; }

  [[nodiscard]] bool has(const std::string& key) const { return value_.contains(key); }

  [[nodiscard]] std::string child_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  [[nodiscard]] const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!value_.contains(key)) throw ConfigError(child_path(key), "missing required field");
    return value_.at(key);
  }

  [[nodiscard]] Node object(const std::string& key) { return Node(raw(key), child_path(key)); }

  [[nodiscard]] std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(child_path(key), "expected a string");
    return v.get<std::string>();
  }

  [[nodiscard]] std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }

  [[nodiscard]] double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(child_path(key), "expected a number");
    const double out = v.get<double>();
    if (!std::isfinite(out)) throw ConfigError(child_path(key), "expected a finite number");
    return out;
  }

  [[nodiscard]] double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  [[nodiscard]] std::uint64_t count(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError(child_path(key), "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  [[nodiscard]] std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    return has(key) ? count(key) : fallback;
  }

  [[nodiscard]] bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(child_path(key), "expected true or false");
    return v.get<bool>();
  }

  [[nodiscard]] std::vector<double> numbers(const std::string& key) {
    const json& v = raw(key);
    return number_array(v, child_path(key));
  }

  [[nodiscard]] std::vector<std::vector<double>> matrix(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(child_path(key), "expected an array of arrays");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(number_array(v[i], child_path(key) + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  /// Rejects keys that were never read; catches misspelled fields.
  void finish() const {
    for (const auto& item : value_.items()) {
      if (!seen_.contains(item.key())) throw ConfigError(child_path(item.key()), "unknown field");
    }
  }

  [[noreturn]] void fail(const std::string& message) const { throw ConfigError(path_, message); }

 private:
  static std::vector<double> number_array(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& item : v) {
      if (!item.is_number()) throw ConfigError(path, "expected an array of numbers");
      out.push_back(item.get<double>());
    }
    return out;
  }

  const json& value_;
  std::string path_;
  std::set<std::string> seen_;
};

/// Runs `body`, converting library contract violations into config errors on `field`.
template <class Body>
auto guarded(const std::string& field, Body&& body) {
  try {
    return body();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(field, e.what());
  }
}

Token parse_token(const json& v, const std::string& path) {
  if (v.is_number_integer()) {
    const auto token = v.get<std::int64_t>();
    if (token < 0) throw ConfigError(path, "token index must be nonnegative");
    return static_cast<Token>(token);
  }
  if (v.is_string()) {
    const auto tokens = guarded(path, [&] { return parse_tokens(v.get<std::string>()); });
    if (tokens.size() != 1 || tokens[0] == kMask) throw ConfigError(path, "expected a single unmasked token");
    return tokens[0];
  }
  throw ConfigError(path, "expected a token letter or index");
}

TokenState parse_sequence(const json& v, const std::string& path) {
  if (v.is_string()) return guarded(path, [&] { return parse_tokens(v.get<std::string>()); });
  if (v.is_array()) {
    TokenState out;
    for (const auto& item : v) out.push_back(parse_token(item, path));
    return out;
  }
  throw ConfigError(path, "expected a token string such as \"AB\" or an array of token indices");
}

std::shared_ptr<const SequenceModel> parse_sequence_model(Node node, std::size_t vocab, std::size_t length) {
  const std::string type = node.string("type", "uniform");
  std::shared_ptr<const SequenceModel> out;
  if (type == "uniform") {
    out = guarded(node.path(), [&] {
      return std::make_shared<const MarkovChainModel>(MarkovChainModel::uniform(vocab, length));
    });
  } else if (type == "markov") {
    auto initial = node.numbers("initial");
    auto transition = node.matrix("transition");
    out = guarded(node.path(), [&] {
      return std::make_shared<const MarkovChainModel>(std::move(initial), std::move(transition), length);
    });
  } else if (type == "table") {
    auto probabilities = node.numbers("probabilities");
    out = guarded(node.path(), [&] {
      return std::make_shared<const TableModel>(vocab, length, std::move(probabilities));
    });
  } else {
    throw ConfigError(node.child_path("type"), "unknown data model '" + type + "' (expected uniform, markov, table)");
  }
  node.finish();
  if (out->vocab_size() != vocab) throw ConfigError(node.path(), "data model vocabulary disagrees with vocab_size");
  return out;
}

void parse_process(Node node, ExperimentConfig& config) {
  const std::string type = node.string("type");
  if (type == "masked") {
    const auto vocab = node.count("vocab_size");
    const auto length = node.count("length");
    const auto steps = static_cast<int>(node.count("num_steps", 8));
    if (vocab < 1) throw ConfigError(node.child_path("vocab_size"), "must be >= 1");
    if (length < 1) throw ConfigError(node.child_path("length"), "must be >= 1");
    if (steps < 1) throw ConfigError(node.child_path("num_steps"), "must be >= 1");
    auto data = node.has("data") ? parse_sequence_model(node.object("data"), vocab, length)
                                 : parse_sequence_model(Node(json::object(), node.child_path("data")), vocab, length);
    std::vector<double> schedule = node.has("mask_schedule") ? node.numbers("mask_schedule")
                                                              : MaskedDiscreteDiffusion::uniform_schedule(steps);
    auto masked = guarded(node.path(), [&] {
      return std::make_shared<const MaskedDiscreteDiffusion>(std::move(data), std::move(schedule));
    });
    config.masked = masked;
    config.process = masked;
  } else if (type == "gaussian") {
    const json& raw = node.raw("components");
    if (!raw.is_array() || raw.empty()) throw ConfigError(node.child_path("components"), "expected a nonempty array");
    std::vector<MixtureComponent> components;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      Node c(raw[i], node.child_path("components") + "[" + std::to_string(i) + "]");
      MixtureComponent component;
      component.weight = c.number("weight", 1.0);
      component.mean = c.numbers("mean");
      component.variance = c.number("variance", 1.0);
      c.finish();
      components.push_back(std::move(component));
    }
    const auto steps = static_cast<int>(node.count("num_steps", 16));
    if (steps < 1) throw ConfigError(node.child_path("num_steps"), "must be >= 1");
    std::vector<double> alpha_bar;
    if (node.has("alpha_bar")) {
      alpha_bar = node.numbers("alpha_bar");
    } else {
      const double minimum = node.number("alpha_bar_min", 1e-4);
      alpha_bar = guarded(node.child_path("alpha_bar_min"),
                          [&] { return GaussianMixtureDiffusion::linear_schedule(steps, minimum); });
    }
    config.process = guarded(node.path(), [&] {
      return std::make_shared<const GaussianMixtureDiffusion>(std::move(components), std::move(alpha_bar));
    });
  } else {
    throw ConfigError(node.child_path("type"), "unknown process '" + type + "' (expected masked, gaussian)");
  }
  node.finish();
}

AttributePredicate parse_predicate(Node node) {
  const std::string type = node.string("type");
  AttributePredicate out;
  if (type == "count-at-least") {
    out = CountAtLeast{parse_token(node.raw("token"), node.child_path("token")), node.count("count", 1)};
  } else if (type == "contains-pattern") {
    out = ContainsPattern{parse_sequence(node.raw("pattern"), node.child_path("pattern"))};
  } else if (type == "in-ball") {
    out = InBall{node.numbers("center"), node.number("radius", 1.0)};
  } else {
    throw ConfigError(node.child_path("type"),
                      "unknown predicate '" + type + "' (expected count-at-least, contains-pattern, in-ball)");
  }
  node.finish();
  return out;
}

TerminalReward parse_terminal(Node node) {
  const std::string type = node.string("type");
  TerminalReward::Kind kind;
  if (type == "token-count") {
    kind = TokenCount{parse_token(node.raw("token"), node.child_path("token"))};
  } else if (type == "table-log-likelihood") {
    kind = TableLogLikelihood{node.matrix("log_table")};
  } else if (type == "attribute") {
    kind = AttributeIndicator{parse_predicate(node.object("predicate")), node.number("scale", 1.0)};
  } else if (type == "linear") {
    kind = LinearReward{node.numbers("weights")};
  } else if (type == "radial") {
    kind = RadialReward{node.numbers("center"), node.number("width", 1.0)};
  } else {
    throw ConfigError(node.child_path("type"), "unknown reward '" + type +
                                                   "' (expected token-count, table-log-likelihood, attribute, "
                                                   "linear, radial)");
  }
  node.finish();
  return TerminalReward(std::move(kind));
}

IntermediateEstimator parse_intermediate(Node node, ExperimentConfig& config, const TerminalReward& terminal,
                                         const std::filesystem::path& base_dir) {
  const std::string type = node.string("type");
  IntermediateEstimator out;
  if (type == "denoised-mean") {
    out = DenoisedMeanEstimator{};
  } else if (type == "many-sample") {
    const auto samples = node.count("samples", 1);
    if (samples < 1) throw ConfigError(node.child_path("samples"), "must be >= 1");
    out = ManySampleEstimator{samples};
  } else if (type == "learned") {
    std::shared_ptr<LearnedReward> model;
    if (node.has("path")) {
      const std::filesystem::path path = base_dir / node.string("path");
      std::ifstream in(path);
      if (!in) throw ConfigError(node.child_path("path"), "cannot open learned-reward file " + path.string());
      model = guarded(node.child_path("path"), [&] { return std::make_shared<LearnedReward>(LearnedReward::load(in)); });
    } else {
      const auto samples = node.count("samples", 100000);
      if (samples < 1) throw ConfigError(node.child_path("samples"), "must be >= 1");
      const auto seed = node.count("seed", 0);
      model = guarded(node.path(), [&] {
        return std::make_shared<LearnedReward>(
            fit_learned_reward(*config.process, terminal, samples, seed, config.fk.context));
      });
    }
    config.learned = model;
    out = LearnedEstimator{model};
  } else {
    throw ConfigError(node.child_path("type"),
                      "unknown intermediate reward '" + type + "' (expected denoised-mean, many-sample, learned)");
  }
  node.finish();
  return out;
}

ResampleSchedule parse_schedule(Node node) {
  ResampleSchedule out;
  const std::string mode = node.string("mode", "every-step");
  if (mode == "interval") {
    out.mode = ScheduleMode::kInterval;
    const json& raw = node.raw("steps");
    if (!raw.is_array()) throw ConfigError(node.child_path("steps"), "expected an array of step indices");
    for (const auto& t : raw) {
      if (!t.is_number_integer()) throw ConfigError(node.child_path("steps"), "expected integer step indices");
      out.steps.insert(t.get<int>());
    }
  } else if (mode != "every-step") {
    throw ConfigError(node.child_path("mode"), "unknown schedule mode '" + mode + "' (expected every-step, interval)");
  }
  if (node.has("ess_gate")) {
    out.gate = guarded(node.child_path("ess_gate"), [&] { return parse_ess_gate(node.string("ess_gate")); });
  }
  out.ess_threshold_fraction = node.number("ess_threshold_fraction", 0.5);
  node.finish();
  return out;
}

EmbeddingSpec parse_embedding_spec(Node node, const ExperimentConfig& config) {
  EmbeddingSpec out;
  const std::string name = node.string("embedding", config.masked ? "one-hot-flatten" : "identity");
  out.kind = guarded(node.child_path("embedding"), [&] { return parse_embedding(name); });
  if (config.masked) out.vocab_size = config.masked->vocab_size();
  if (out.kind == EmbeddingKind::kUserTable) out.table = node.matrix("table");
  node.finish();
  return out;
}

Sweep parse_sweep(Node node) {
  Sweep out;
  const std::string axis = node.string("axis");
  if (axis == "k") {
    out.axis = SweepAxis::kK;
  } else if (axis == "lambda") {
    out.axis = SweepAxis::kLambda;
  } else {
    throw ConfigError(node.child_path("axis"), "unknown sweep axis '" + axis + "' (expected k, lambda)");
  }
  out.values = node.numbers("values");
  if (out.values.empty()) throw ConfigError(node.child_path("values"), "sweep needs at least one value");
  for (double v : out.values) {
    if (out.axis == SweepAxis::kK && (v < 1 || v != std::floor(v))) {
      throw ConfigError(node.child_path("values"), "k values must be positive integers");
    }
    if (out.axis == SweepAxis::kLambda && v < 0) {
      throw ConfigError(node.child_path("values"), "lambda values must be nonnegative");
    }
  }
  node.finish();
  return out;
}

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

}  // namespace

std::string_view sampler_name(SamplerKind kind) noexcept {
  switch (kind) {
    case SamplerKind::kFK:
      return "fk";
    case SamplerKind::kBestOfN:
      return "bon";
    case SamplerKind::kSVDD:
      return "svdd";
    case SamplerKind::kBase:
      return "base";
  }
  return "unknown";
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // The parser reports the byte just past the offending token.
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    throw ConfigError("", e.what(), line_of_offset(text, offset));
  }
  Node root(doc, "");
  ExperimentConfig config;

  parse_process(root.object("process"), config);

  if (root.has("context")) {
    Node context = root.object("context");
    if (context.has("prefix")) config.fk.context.prefix = parse_sequence(context.raw("prefix"), context.child_path("prefix"));
    if (context.has("component")) config.fk.context.component = context.count("component");
    context.finish();
  }

  {
    Node reward = root.object("reward");
    TerminalReward terminal = parse_terminal(reward.object("terminal"));
    IntermediateEstimator intermediate = DenoisedMeanEstimator{};
    if (reward.has("intermediate")) {
      intermediate = parse_intermediate(reward.object("intermediate"), config, terminal, base_dir);
    }
    reward.finish();
    config.fk.reward = RewardSpec{std::move(terminal), std::move(intermediate)};
  }

  if (root.has("attribute")) {
    config.attribute = parse_predicate(root.object("attribute"));
  } else if (const auto* indicator = std::get_if<AttributeIndicator>(&config.fk.reward.terminal.kind())) {
    config.attribute = indicator->predicate;
  }

  const std::string sampler = root.string("sampler", "fk");
  if (sampler == "fk") {
    config.sampler = SamplerKind::kFK;
  } else if (sampler == "bon") {
    config.sampler = SamplerKind::kBestOfN;
  } else if (sampler == "svdd") {
    config.sampler = SamplerKind::kSVDD;
  } else if (sampler == "base") {
    config.sampler = SamplerKind::kBase;
  } else {
    throw ConfigError("sampler", "unknown sampler '" + sampler + "' (expected fk, bon, svdd, base)");
  }
  config.svdd_greedy = root.boolean("svdd_greedy", false);

  config.fk.k = root.count("k", 4);
  if (config.fk.k < 1) throw ConfigError("k", "must be >= 1");
  config.fk.lambda = root.number("lambda", 1.0);
  if (config.fk.lambda < 0) throw ConfigError("lambda", "must be nonnegative");
  if (root.has("potential")) {
    config.fk.potential = guarded("potential", [&] { return parse_potential(root.string("potential")); });
  }
  if (root.has("proposal")) {
    Node proposal = root.object("proposal");
    config.fk.proposal.kind = guarded(proposal.child_path("type"),
                                      [&] { return parse_proposal(proposal.string("type", "base")); });
    config.fk.proposal.guidance_lambda = proposal.number("guidance_lambda", 0.0);
    const std::string at = proposal.string("gradient_at", "denoised-mean");
    if (at == "denoised-mean") {
      config.fk.proposal.gradient_at = GradientPoint::kDenoisedMean;
    } else if (at == "raw-state") {
      config.fk.proposal.gradient_at = GradientPoint::kRawState;
    } else {
      throw ConfigError(proposal.child_path("gradient_at"), "expected denoised-mean or raw-state");
    }
    proposal.finish();
  }
  if (root.has("schedule")) config.fk.schedule = parse_schedule(root.object("schedule"));
  if (root.has("resampler")) {
    config.fk.resampler = guarded("resampler", [&] { return parse_resampler(root.string("resampler")); });
  }
  config.fk.final_resample = root.boolean("final_resample", true);
  config.fk.seed = root.count("seed", 0);
  config.repeats = root.count("repeats", 1);
  if (config.repeats < 1) throw ConfigError("repeats", "must be >= 1");
  if (root.has("sweep")) config.sweep = parse_sweep(root.object("sweep"));
  config.oracle = root.boolean("oracle", false);
  if (config.oracle && !config.masked) throw ConfigError("oracle", "the oracle needs the masked process");

  if (root.has("diversity")) {
    config.fk.diversity_embedding = parse_embedding_spec(root.object("diversity"), config);
  } else {
    config.fk.diversity_embedding = parse_embedding_spec(Node(json::object(), "diversity"), config);
  }

  if (root.has("output")) {
    Node output = root.object("output");
    if (output.has("dir")) config.out_dir = base_dir / output.string("dir");
    config.csv_name = output.string("csv", config.csv_name);
    config.diagnostics_name = output.string("diagnostics", config.diagnostics_name);
    output.finish();
  }
  root.finish();

  guarded("", [&] {
    validate(config.fk, *config.process);
    return 0;
  });
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

}  // namespace fksteer::harness
