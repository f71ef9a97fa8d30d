// Copyright 2026 The hetsl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial reference kernels against their OpenMP twins, plus serial and
// parallel replicate execution.

#include <benchmark/benchmark.h>

#include "hetsl/harness.hpp"
#include "hetsl/kernels.hpp"
#include "hetsl/models.hpp"
#include "hetsl/sbm_graph.hpp"

namespace {

struct Fixture {
  hetsl::Matrix combination;
  hetsl::Matrix beliefs;
  hetsl::Matrix log_lik;

  Fixture(int agents, int hypotheses) {
    const int half = agents / 2;
    const hetsl::Network net =
        hetsl::sample_sbm(hetsl::SbmParams::symmetric(half, 0.8, 0.1), 7);
    combination = net.combination;
    beliefs = hetsl::Matrix::Random(hypotheses, net.size());
    log_lik = hetsl::Matrix::Random(hypotheses, net.size());
    hetsl::kernels::normalize_columns(beliefs);
  }
};

template <bool kParallel>
void BM_Combine(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  hetsl::Matrix out(f.beliefs.rows(), f.beliefs.cols());
  for (auto _ : state) {
    if constexpr (kParallel)
      hetsl::kernels::combine_parallel(f.combination, f.beliefs, out);
    else
      hetsl::kernels::combine_serial(f.combination, f.beliefs, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool kParallel>
void BM_Adapt(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  hetsl::Matrix out(f.beliefs.rows(), f.beliefs.cols());
  for (auto _ : state) {
    if constexpr (kParallel)
      hetsl::kernels::adapt_parallel(f.beliefs, f.log_lik, 0.1, out);
    else
      hetsl::kernels::adapt_serial(f.beliefs, f.log_lik, 0.1, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool kParallel>
void BM_Replicates(benchmark::State& state) {
  hetsl::ExperimentConfig cfg;
  cfg.network.sbm = hetsl::SbmParams::symmetric(15, 0.8, 0.1);
  cfg.horizon = 300;
  cfg.replicates = static_cast<int>(state.range(0));
  cfg.trace_replicates = 0;
  hetsl::ExecutionOptions exec;
  exec.parallel = kParallel;
  for (auto _ : state) {
    auto result = hetsl::run_experiment(cfg, exec);
    benchmark::DoNotOptimize(result.completed);
  }
}

void KernelArgs(benchmark::internal::Benchmark* b) {
  for (int agents : {30, 200, 1000})
    for (int hypotheses : {2, 8}) b->Args({agents, hypotheses});
}

BENCHMARK(BM_Combine<false>)->Name("combine/serial")->Apply(KernelArgs);
BENCHMARK(BM_Combine<true>)->Name("combine/parallel")->Apply(KernelArgs);
BENCHMARK(BM_Adapt<false>)->Name("adapt/serial")->Apply(KernelArgs);
BENCHMARK(BM_Adapt<true>)->Name("adapt/parallel")->Apply(KernelArgs);
BENCHMARK(BM_Replicates<false>)->Name("replicates/serial")->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Replicates<true>)->Name("replicates/parallel")->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
