/*
   Copyright 2026 The mcunc Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// Serial reference loops against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <random>

#include "mcunc/dropweights_net.hpp"
#include "mcunc/referral.hpp"
#include "mcunc/synthetic.hpp"
#include "mcunc/uncertainty.hpp"

namespace {

mcunc::Exec exec_of(const benchmark::State& state) {
  return state.range(0) ? mcunc::Exec::parallel : mcunc::Exec::serial;
}

const mcunc::SyntheticDataset& dataset() {
  static const auto data = mcunc::generate_synthetic(1, mcunc::scale_counts(mcunc::kChestXrayClassCounts, 0.1), 8, 1.0);
  return data;
}

const mcunc::DropweightNet& network() {
  static const mcunc::DropweightNet net({8, 32, 4}, 0.3, {2, 2, 1, 50}, 1);
  return net;
}

void BM_McPredict(benchmark::State& state) {
  const auto& d = dataset();
  for (auto _ : state) {
    benchmark::DoNotOptimize(mcunc::mc_predict(network(), d.inputs, d.item_ids, 50, 3, exec_of(state)));
  }
}

void BM_BuildReport(benchmark::State& state) {
  const auto& d = dataset();
  const auto preds = mcunc::mc_predict(network(), d.inputs, d.item_ids, 50, 3);
  for (auto _ : state) benchmark::DoNotOptimize(mcunc::build_report(preds, exec_of(state)));
}

void BM_RandomBaseline(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::bernoulli_distribution hit(0.85);
  std::vector<bool> correct(600);
  for (std::size_t i = 0; i < correct.size(); ++i) correct[i] = hit(rng);
  const std::vector<double> fractions{0.1, 0.2, 0.3, 0.4, 0.5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(mcunc::random_referral_baseline(correct, fractions, 1000, 7, exec_of(state)));
  }
}

}  // namespace

BENCHMARK(BM_McPredict)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BuildReport)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RandomBaseline)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
