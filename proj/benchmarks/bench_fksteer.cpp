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

#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>

#include "fksteer/fksteer.hpp"

namespace fksteer {
namespace {

std::shared_ptr<const MaskedDiscreteDiffusion> rare_toy() {
  auto data = std::make_shared<const MarkovChainModel>(MarkovChainModel::uniform(3, 4));
  return std::make_shared<const MaskedDiscreteDiffusion>(data, MaskedDiscreteDiffusion::uniform_schedule(8));
}

std::shared_ptr<const GaussianMixtureDiffusion> gaussian_toy() {
  std::vector<MixtureComponent> components = {{0.5, {-2.0, 0.0}, 0.25}, {0.5, {2.0, 0.0}, 0.25}};
  return std::make_shared<const GaussianMixtureDiffusion>(components, GaussianMixtureDiffusion::linear_schedule(16));
}

void BM_Philox(benchmark::State& state) {
  Stream stream(1, 0, 0, Purpose::kUser);
  for (auto _ : state) benchmark::DoNotOptimize(stream.uniform());
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Philox);

void BM_FkDiscrete(benchmark::State& state) {
  const auto process = rare_toy();
  FKConfig config;
  config.k = static_cast<std::size_t>(state.range(0));
  config.lambda = 3.0;
  config.potential = PotentialKind::kDifference;
  config.reward = RewardSpec{TerminalReward{TokenCount{0}}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(fk_sample(config, *process));
    ++config.seed;
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FkDiscrete)->RangeMultiplier(4)->Range(4, 256);

void BM_FkGaussianGuided(benchmark::State& state) {
  const auto process = gaussian_toy();
  FKConfig config;
  config.k = static_cast<std::size_t>(state.range(0));
  config.lambda = 10.0;
  config.reward = RewardSpec{TerminalReward{RadialReward{{2.0, 1.0}, 1.0}}};
  config.proposal = ProposalSpec{ProposalKind::kGradientGuided, 1.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(fk_sample(config, *process));
    ++config.seed;
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FkGaussianGuided)->RangeMultiplier(4)->Range(4, 256);

void BM_ManySampleEstimator(benchmark::State& state) {
  const auto process = rare_toy();
  FKConfig config;
  config.k = 8;
  config.potential = PotentialKind::kMax;
  config.reward = RewardSpec{TerminalReward{TokenCount{0}}, ManySampleEstimator{static_cast<std::size_t>(state.range(0))}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(fk_sample(config, *process));
    ++config.seed;
  }
}
BENCHMARK(BM_ManySampleEstimator)->Arg(1)->Arg(8)->Arg(32);

void BM_ExactTarget(benchmark::State& state) {
  auto data = std::make_shared<const MarkovChainModel>(
      MarkovChainModel::uniform(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1))));
  const MaskedDiscreteDiffusion process(data, MaskedDiscreteDiffusion::uniform_schedule(8));
  const TerminalReward reward{TokenCount{0}};
  for (auto _ : state) benchmark::DoNotOptimize(exact_tilted_target(process, reward, 1.0));
}
BENCHMARK(BM_ExactTarget)->Args({2, 2})->Args({3, 4})->Args({4, 5});

void BM_Resample(benchmark::State& state) {
  Ensemble ensemble;
  const auto k = static_cast<std::size_t>(state.range(0));
  Stream weights(2, 0, 0, Purpose::kUser);
  for (std::size_t i = 0; i < k; ++i) {
    Particle p;
    p.state = TokenState{0, 1};
    p.log_weight = weights.normal();
    ensemble.particles.push_back(p);
  }
  Stream stream(3, 0, 0, Purpose::kResample);
  for (auto _ : state) benchmark::DoNotOptimize(resample(ensemble, stream, Resampler::kSystematic));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Resample)->RangeMultiplier(8)->Range(8, 4096);

}  // namespace
}  // namespace fksteer

BENCHMARK_MAIN();
