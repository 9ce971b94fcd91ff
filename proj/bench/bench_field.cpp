// Serial brute-force field evaluation against the hashed OpenMP kernel.

#include "levelperc/field.hpp"
#include "levelperc/percolation.hpp"

#include <benchmark/benchmark.h>

using namespace levelperc;

namespace {

struct Fixture {
    AttenuationSpec kernel = AttenuationSpec::exponential(1.0);
    double radius = 0.0;
    PointSet points;

    explicit Fixture(double half_width)
    {
        radius = truncation_radius(kernel, 2, 1.0, 1e-3);
        points = sample_poisson(Window{2, half_width, radius + 1.0, Boundary::hard}, 1.0, 42);
    }
};

void field_reference(benchmark::State& state)
{
    Fixture const f(static_cast<double>(state.range(0)));
    for (auto _ : state) {
        auto grid = reference::field_on_grid(f.points, f.kernel, 0.25, f.radius, FieldMode::exact_center);
        benchmark::DoNotOptimize(grid.values.data());
    }
    state.counters["cells"] = static_cast<double>(GridGeometry::covering(2, state.range(0), 0.25).cell_count());
}

void field_parallel(benchmark::State& state)
{
    Fixture const f(static_cast<double>(state.range(0)));
    for (auto _ : state) {
        auto grid = field_on_grid(f.points, f.kernel, 0.25, f.radius, FieldMode::exact_center);
        benchmark::DoNotOptimize(grid.values.data());
    }
    state.counters["cells"] = static_cast<double>(GridGeometry::covering(2, state.range(0), 0.25).cell_count());
}

void trace_sweep(benchmark::State& state)
{
    Fixture const f(static_cast<double>(state.range(0)));
    auto const grid = field_on_grid(f.points, f.kernel, 0.25, f.radius, FieldMode::exact_center);
    for (auto _ : state) {
        auto trace = trace_levels(grid);
        benchmark::DoNotOptimize(trace.h_cross);
    }
}

} // namespace

BENCHMARK(field_reference)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(field_parallel)->Arg(4)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(trace_sweep)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
