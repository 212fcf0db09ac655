// Serial reference vs OpenMP fan-out for the suite runner and the raw
// per-point curvature sweep.

#include <benchmark/benchmark.h>

#include "linein/fields.hpp"
#include "linein/geometry.hpp"
#include "linein/harness.hpp"
#include "linein/parallel.hpp"

using namespace linein;

namespace {

const std::vector<Background>& backgrounds() {
  static const std::vector<Background> b{builtin("sphere", 4), builtin("schwarzschild", 4),
                                         builtin("de_sitter_static", 4)};
  return b;
}

void BM_suite(benchmark::State& state, const char* suite, Execution exec) {
  OracleConfig cfg;
  cfg.points_per_background = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    SuiteRun run = run_suite(suite, cfg, backgrounds(), exec);
    benchmark::DoNotOptimize(run);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * static_cast<long>(backgrounds().size()));
}

void BM_curvature_sweep(benchmark::State& state, Execution exec) {
  const MetricSpec& spec = backgrounds()[1].spec;
  const auto pts = sample_points(spec, static_cast<std::size_t>(state.range(0)), 42);
  std::vector<double> out(pts.size());
  for (auto _ : state) {
    for_each_index(pts.size(), exec, [&](std::size_t i) {
      out[i] = curvature_scale(curvature_pack(spec, pts[i]));
    });
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(BM_curvature_sweep, serial, Execution::Serial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_curvature_sweep, parallel, Execution::Parallel)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_suite, complex_serial, "complex", Execution::Serial)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_suite, complex_parallel, "complex", Execution::Parallel)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_suite, perturbation_serial, "perturbation", Execution::Serial)
    ->Arg(4)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_suite, perturbation_parallel, "perturbation", Execution::Parallel)
    ->Arg(4)
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
