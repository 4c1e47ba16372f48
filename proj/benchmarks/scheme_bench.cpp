#include "gbsde/problems.hpp"
#include "gbsde/scheme.hpp"

#include <benchmark/benchmark.h>

namespace {

// One backward step of Example 1 over the default grid.
void BM_StepBackward(benchmark::State& state)
{
    const auto entry = gbsde::example1({0.25, 1.0});
    gbsde::SchemeParams params;
    params.n_steps = static_cast<int>(state.range(0));
    params.lattice_depth = static_cast<int>(state.range(1));
    params.theta1 = 1.0;
    params.theta2 = 1.0;
    params.threads = 1;
    const auto grid = gbsde::resolve_grid({}, entry.spec, params);
    std::vector<double> y;
    for (double x : grid.points()) {
        y.push_back(entry.spec.terminal(x));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(gbsde::step_backward(y, 1.0 - 1.0 / params.n_steps, entry.spec, grid, params));
    }
}
BENCHMARK(BM_StepBackward)->Args({8, 32})->Args({32, 32})->Args({32, 128})->Unit(benchmark::kMillisecond);

}  // namespace
