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

#include "fksteer/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "fksteer/error.hpp"
#include "fksteer/numeric.hpp"

namespace fksteer {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

const TokenState& revealed_tokens(const State& x) {
  const auto& tokens = as_tokens(x);
  if (has_mask(tokens)) throw ContractViolation("terminal reward evaluated on a masked sequence");
  return tokens;
}

const RealState& real_of_dimension(const State& x, std::size_t dimension) {
  const auto& v = as_real(x);
  if (v.size() != dimension) {
    throw ContractViolation("reward expects dimension " + std::to_string(dimension) + ", state has " +
                            std::to_string(v.size()));
  }
  return v;
}

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

}  // namespace

bool satisfies(const AttributePredicate& predicate, const State& x) {
  return std::visit(
      Overloaded{
          [&](const CountAtLeast& p) {
            const auto& tokens = revealed_tokens(x);
            return static_cast<std::size_t>(std::count(tokens.begin(), tokens.end(), p.token)) >= p.count;
          },
          [&](const ContainsPattern& p) {
            const auto& tokens = revealed_tokens(x);
            if (p.pattern.empty()) return true;
            return std::search(tokens.begin(), tokens.end(), p.pattern.begin(), p.pattern.end()) != tokens.end();
          },
          [&](const InBall& p) {
            const auto& v = real_of_dimension(x, p.center.size());
            double squared = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) squared += (v[i] - p.center[i]) * (v[i] - p.center[i]);
            return std::sqrt(squared) <= p.radius;
          },
      },
      predicate);
}

double TerminalReward::operator()(const State& x0, const Context& /*context*/) const {
  return std::visit(
      Overloaded{
          [&](const TokenCount& k) {
            const auto& tokens = revealed_tokens(x0);
            return static_cast<double>(std::count(tokens.begin(), tokens.end(), k.token));
          },
          [&](const TableLogLikelihood& k) {
            const auto& tokens = revealed_tokens(x0);
            if (k.log_table.size() != tokens.size()) throw ContractViolation("log-likelihood table length mismatch");
            double total = 0.0;
            for (std::size_t i = 0; i < tokens.size(); ++i) {
              total += k.log_table[i].at(static_cast<std::size_t>(tokens[i]));
            }
            return total;
          },
          [&](const AttributeIndicator& k) { return satisfies(k.predicate, x0) ? k.scale : 0.0; },
          [&](const LinearReward& k) {
            const auto& v = real_of_dimension(x0, k.weights.size());
            double total = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) total += k.weights[i] * v[i];
            return total;
          },
          [&](const RadialReward& k) {
            const auto& v = real_of_dimension(x0, k.center.size());
            double squared = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) squared += (v[i] - k.center[i]) * (v[i] - k.center[i]);
            return std::exp(-squared / (2.0 * k.width * k.width));
          },
      },
      kind_);
}

std::optional<double> TerminalReward::expectation(const TokenPosterior& posterior) const {
  if (const auto* k = std::get_if<TokenCount>(&kind_)) {
    double total = 0.0;
    for (const auto& row : posterior) total += row.at(static_cast<std::size_t>(k->token));
    return total;
  }
  if (const auto* k = std::get_if<TableLogLikelihood>(&kind_)) {
    if (k->log_table.size() != posterior.size()) throw ContractViolation("log-likelihood table length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < posterior.size(); ++i) {
      for (std::size_t v = 0; v < posterior[i].size(); ++v) {
        if (posterior[i][v] > 0.0) total += posterior[i][v] * k->log_table[i].at(v);
      }
    }
    return total;
  }
  return std::nullopt;
}

bool TerminalReward::differentiable() const noexcept {
  return std::holds_alternative<LinearReward>(kind_) || std::holds_alternative<RadialReward>(kind_);
}

std::string TerminalReward::name() const {
  return std::visit(Overloaded{
                        [](const TokenCount&) { return std::string("token-count"); },
                        [](const TableLogLikelihood&) { return std::string("log-likelihood-table"); },
                        [](const AttributeIndicator&) { return std::string("attribute-indicator"); },
                        [](const LinearReward&) { return std::string("linear"); },
                        [](const RadialReward&) { return std::string("radial"); },
                    },
                    kind_);
}

RealState reward_gradient(const TerminalReward& reward, const State& x, const Context& /*context*/) {
  if (const auto* k = std::get_if<LinearReward>(&reward.kind())) {
    real_of_dimension(x, k->weights.size());
    return k->weights;
  }
  if (const auto* k = std::get_if<RadialReward>(&reward.kind())) {
    const auto& v = real_of_dimension(x, k->center.size());
    const double value = reward(x);
    const double inv_w2 = 1.0 / (k->width * k->width);
    RealState grad(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) grad[i] = -(v[i] - k->center[i]) * inv_w2 * value;
    return grad;
  }
  throw Unsupported("reward kind '" + reward.name() + "' has no gradient");
}

std::string estimator_name(const IntermediateEstimator& estimator) {
  return std::visit(Overloaded{
                        [](const DenoisedMeanEstimator&) { return std::string("denoised-mean"); },
                        [](const ManySampleEstimator&) { return std::string("many-sample"); },
                        [](const LearnedEstimator&) { return std::string("learned"); },
                    },
                    estimator);
}

double intermediate_reward(const RewardSpec& spec, const DiffusionProcess& process, const State& x_t, int t,
                           const Context& context, Stream& stream) {
  if (t < 0 || t > process.num_steps()) {
    throw ContractViolation("intermediate reward at t=" + std::to_string(t) + " outside the time grid");
  }
  if (t == 0) return spec.terminal(x_t, context);
  return std::visit(
      Overloaded{
          [&](const DenoisedMeanEstimator&) {
            const auto estimate = process.denoised_mean(x_t, t, context);
            if (const auto* point = std::get_if<RealState>(&estimate)) return spec.terminal(*point, context);
            const auto& posterior = std::get<TokenPosterior>(estimate);
            if (auto expected = spec.terminal.expectation(posterior)) return *expected;
            TokenState draw(posterior.size());
            for (std::size_t i = 0; i < posterior.size(); ++i) {
              draw[i] = static_cast<Token>(stream.categorical(posterior[i]));
            }
            return spec.terminal(draw, context);
          },
          [&](const ManySampleEstimator& e) {
            if (e.samples == 0) throw ContractViolation("many-sample estimator needs N >= 1");
            std::vector<double> rewards(e.samples);
            for (std::size_t j = 0; j < e.samples; ++j) {
              Stream rollout_stream = stream.substream(j);
              rewards[j] = spec.terminal(process.rollout(x_t, t, context, rollout_stream), context);
            }
            if (rewards.size() == 1) return rewards.front();
            return log_mean_exp(rewards);
          },
          [&](const LearnedEstimator& e) {
            if (!e.model || !e.model->fitted()) throw UnfittedModel();
            return std::log(e.model->value(x_t, t));
          },
      },
      spec.intermediate);
}

std::string LearnedReward::bucket_id(const State& x_t) const {
  if (layout_ == Layout::kTokenPattern) return format_tokens(as_tokens(x_t));
  const auto& v = as_real(x_t);
  if (v.size() != grid_dimension_) throw ContractViolation("state dimension does not match the learned grid");
  std::size_t cell = 0;
  for (double coordinate : v) {
    const double scaled = (coordinate - grid_lo_) / (grid_hi_ - grid_lo_) * static_cast<double>(grid_cells_);
    const double clamped = std::clamp(std::floor(scaled), 0.0, static_cast<double>(grid_cells_ - 1));
    cell = cell * grid_cells_ + static_cast<std::size_t>(clamped);
  }
  return std::to_string(cell);
}

const LearnedReward::Bucket* LearnedReward::find(const State& x_t, int t) const {
  if (!fitted_) throw UnfittedModel();
  const auto it = buckets_.find({t, bucket_id(x_t)});
  return it == buckets_.end() ? nullptr : &it->second;
}

double LearnedReward::value(const State& x_t, int t) const {
  const Bucket* bucket = find(x_t, t);
  return bucket != nullptr ? bucket->value : global_mean_;
}

bool LearnedReward::is_fallback(const State& x_t, int t) const { return find(x_t, t) == nullptr; }

void LearnedReward::save(std::ostream& out) const {
  if (!fitted_) throw UnfittedModel();
  out << "# fksteer learned-reward v1\n";
  out << "layout " << (layout_ == Layout::kTokenPattern ? "token" : "grid") << '\n';
  if (layout_ == Layout::kGrid) {
    out << "grid " << grid_dimension_ << ' ' << grid_cells_ << ' ' << format_double(grid_lo_) << ' '
        << format_double(grid_hi_) << '\n';
  }
  out << "global " << format_double(global_mean_) << '\n';
  out << "fit " << info_.samples << ' ' << format_double(info_.holdout_loss) << '\n';
  for (const auto& [key, bucket] : buckets_) {
    out << key.second << '\t' << key.first << '\t' << format_double(bucket.value) << '\t' << bucket.count << '\n';
  }
}

LearnedReward LearnedReward::load(std::istream& in) {
  LearnedReward model;
  std::string line;
  bool saw_layout = false;
  bool saw_global = false;
  std::size_t line_number = 0;
  auto fail = [&](const std::string& why) {
    return ContractViolation("learned-reward table line " + std::to_string(line_number) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line.front() == '#') continue;
    if (line.find('\t') == std::string::npos) {
      std::istringstream fields(line);
      std::string key;
      fields >> key;
      if (key == "layout") {
        std::string layout;
        fields >> layout;
        if (layout == "token") {
          model.layout_ = Layout::kTokenPattern;
        } else if (layout == "grid") {
          model.layout_ = Layout::kGrid;
        } else {
          throw fail("unknown layout '" + layout + "'");
        }
        saw_layout = true;
      } else if (key == "grid") {
        fields >> model.grid_dimension_ >> model.grid_cells_ >> model.grid_lo_ >> model.grid_hi_;
      } else if (key == "global") {
        fields >> model.global_mean_;
        saw_global = true;
      } else if (key == "fit") {
        fields >> model.info_.samples >> model.info_.holdout_loss;
      } else {
        throw fail("unknown header '" + key + "'");
      }
      if (fields.fail()) throw fail("malformed header");
      continue;
    }
    std::istringstream fields(line);
    std::string id;
    int t = 0;
    Bucket bucket;
    if (!std::getline(fields, id, '\t') || !(fields >> t >> bucket.value >> bucket.count)) {
      throw fail("expected bucket_id, t, value, count");
    }
    if (!(bucket.value > 0.0)) throw fail("bucket value must be positive");
    model.buckets_[{t, id}] = bucket;
  }
  if (!saw_layout || !saw_global) throw ContractViolation("learned-reward table is missing its header");
  if (model.layout_ == Layout::kGrid && (model.grid_cells_ == 0 || model.grid_dimension_ == 0)) {
    throw ContractViolation("learned-reward grid table is missing its grid line");
  }
  model.fitted_ = true;
  return model;
}

LearnedReward fit_learned_reward(const DiffusionProcess& process, const TerminalReward& terminal,
                                 std::size_t n_samples, std::uint64_t seed, const Context& context,
                                 const LearnedRewardOptions& options) {
  if (n_samples == 0) throw ContractViolation("fit_learned_reward needs at least one sample");
  const int num_steps = process.num_steps();
  auto draw = [&](Stream& stream, int& t, State& x_t) {
    t = std::min(num_steps, static_cast<int>(stream.uniform() * (num_steps + 1)));
    const State x0 = process.sample_data(context, stream);
    x_t = process.forward_sample(x0, t, stream);
    return std::exp(terminal(x0, context));
  };

  LearnedReward model;
  {
    Stream probe(seed, 0, 0, Purpose::kData);
    const State sample = process.sample_data(context, probe);
    if (const auto* real = std::get_if<RealState>(&sample)) {
      if (options.grid_cells == 0 || !(options.grid_hi > options.grid_lo)) {
        throw ContractViolation("learned-reward grid needs cells >= 1 and hi > lo");
      }
      model.layout_ = LearnedReward::Layout::kGrid;
      model.grid_dimension_ = real->size();
      model.grid_cells_ = options.grid_cells;
      model.grid_lo_ = options.grid_lo;
      model.grid_hi_ = options.grid_hi;
    }
  }

  // Least squares on a piecewise-constant model is the per-bucket mean; running means keep a bucket
  // whose targets are all equal exactly equal to that target.
  double global = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    Stream stream(seed, static_cast<std::int64_t>(s), 0, Purpose::kData);
    int t = 0;
    State x_t;
    const double target = draw(stream, t, x_t);
    auto& bucket = model.buckets_[{t, model.bucket_id(x_t)}];
    ++bucket.count;
    bucket.value += (target - bucket.value) / static_cast<double>(bucket.count);
    global += (target - global) / static_cast<double>(s + 1);
  }
  model.global_mean_ = global;
  model.fitted_ = true;

  double loss = 0.0;
  for (std::size_t s = 0; s < options.holdout_samples; ++s) {
    Stream stream(seed, static_cast<std::int64_t>(s), 0, Purpose::kHoldout);
    int t = 0;
    State x_t;
    const double target = draw(stream, t, x_t);
    const double residual = model.value(x_t, t) - target;
    loss += (residual * residual - loss) / static_cast<double>(s + 1);
  }
  model.info_ = {n_samples, loss};
  return model;
}

}  // namespace fksteer
