// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "cablelift/linearization.hpp"
#include "cablelift/parallel.hpp"
#include "cablelift/presets.hpp"
#include "cablelift/sim.hpp"

using namespace cablelift;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::kParallel : Execution::kSerial; }

void BM_Jacobian(benchmark::State& state) {
  const SystemParams p = presets::triangle_three_quad();
  const HoverEquilibrium eq = build_equilibrium(p);
  const int d = reduced_config_dim(p.n());
  const VectorField f = [&](const Eigen::VectorXd& x) {
    return reduced_vector_field(p, eq, x.head(2 * d), x.tail(3 * p.n()));
  };
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(2 * d + 3 * p.n());
  for (auto _ : state) benchmark::DoNotOptimize(central_difference_jacobian(f, x0, 1e-5, mode(state)));
  state.counters["threads"] = state.range(0) ? parallel_threads() : 1;
}
BENCHMARK(BM_Jacobian)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_Batch(benchmark::State& state) {
  std::vector<Scenario> batch;
  for (const char* name : {"rod-2quad-tilted", "triangle-3quad-tilted"}) {
    for (int k = 0; k < 4; ++k) {
      Scenario s = *find_builtin(name);
      s.duration = 1.0;
      batch.push_back(s);
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(run_batch(batch, mode(state)));
  state.counters["threads"] = state.range(0) ? parallel_threads() : 1;
}
BENCHMARK(BM_Batch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
