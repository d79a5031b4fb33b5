// Serial reference paths against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "scalebench/harness.hpp"
#include "scalebench/rng.hpp"

using namespace scalebench;

namespace {

std::vector<double> normal_sample(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) {
    // Box-Muller; good enough for a timing fixture.
    const double u1 = 1.0 - rng.uniform01();
    const double u2 = rng.uniform01();
    x = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  return v;
}

void bootstrap(benchmark::State& state, bool parallel) {
  const auto data = normal_sample(200, 7);
  BcaOptions o;
  o.replicates = static_cast<int>(state.range(0));
  o.parallel = parallel;
  for (auto _ : state) {
    auto ci = bootstrap_bca(data, [](std::span<const double> v) { return median_of(v); }, o);
    benchmark::DoNotOptimize(ci);
  }
}

void sweep(benchmark::State& state, bool parallel) {
  auto params = WorkloadParams::defaults();
  const auto jobs = generate_workload(params, default_subclasses()[0], 6, 11);
  ClusterConfig cluster;
  cluster.max_executors = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto points = sweep_static_counts(jobs, cluster, parallel);
    benchmark::DoNotOptimize(points);
  }
}

void cells(benchmark::State& state, bool parallel) {
  ExperimentPlan plan;
  PolicyDescriptor reactive;
  PolicyDescriptor fingerprint;
  fingerprint.name = "fingerprint";
  fingerprint.kind = PolicyKind::Fingerprint;
  reactive.name = "reactive";
  plan.policies = {reactive, fingerprint};
  plan.subclasses = {default_subclasses()[0], default_subclasses()[7]};
  plan.seeds = {1, 2, 3};
  plan.jobs_per_cell = 6;
  plan.cluster.max_executors = 16;
  plan.calibration.jobs = 5;
  plan.stats.bootstrap_replicates = 500;
  RunOptions options;
  options.write_outputs = false;
  options.parallel = parallel;
  for (auto _ : state) {
    auto outcome = run_plan(plan, options);
    benchmark::DoNotOptimize(outcome);
  }
}

}  // namespace

BENCHMARK_CAPTURE(bootstrap, serial, false)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bootstrap, parallel, true)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(sweep, serial, false)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(sweep, parallel, true)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(cells, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(cells, parallel, true)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
