#include <benchmark/benchmark.h>

#include "frac/ma_geometry.hpp"
#include "frac/parallel.hpp"
#include "frac/paraboloid.hpp"
#include "frac/rng.hpp"

// Serial reference vs OpenMP kernels: same code paths the tests compare for
// bitwise equality, timed here.

namespace {

using namespace frac;

XZField make_field(int n) {
    XZGrid g;
    g.x.resize(n);
    g.z.resize(n);
    for (int i = 0; i < n; ++i) {
        g.x[i] = -1.0 + 2.0 * i / (n - 1);
        g.z[i] = -1.0 + 2.0 * i / (n - 1);
    }
    XZField U(g);
    RngStream rng(7);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            U.at(i, j) = sq(g.x[i]) + sq(g.z[j]) + 0.05 * rng.uniform();
    return U;
}

void bench_contact_scan(benchmark::State& state, par::Mode mode) {
    par::mode() = mode;
    const SParam s(0.5);
    XZField U = make_field(static_cast<int>(state.range(0)));
    NodeSet search = all_nodes(U.grid);
    std::size_t k = 0;
    for (auto _ : state) {
        const double vx = -0.5 + 0.01 * (k % 100);
        TouchResult t = slide_from_below(U, s, 1.0, vx, 0.0, search);
        benchmark::DoNotOptimize(t.ci);
        ++k;
    }
    par::mode() = par::Mode::openmp;
}

void bench_quasi_K(benchmark::State& state, par::Mode mode) {
    par::mode() = mode;
    const SParam s(0.3);
    for (auto _ : state) {
        EstimateResult r = estimate_quasi_K(s, 1, Potential::Phi, SampleRegion{},
                                            static_cast<std::size_t>(state.range(0)), 42);
        benchmark::DoNotOptimize(r.value);
    }
    par::mode() = par::Mode::openmp;
}

void bench_mu_sum(benchmark::State& state, par::Mode mode) {
    par::mode() = mode;
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        double v = par::det_sum(n, [](std::size_t i) {
            return std::sqrt(static_cast<double>(i % 1024) + 1.0);
        });
        benchmark::DoNotOptimize(v);
    }
    par::mode() = par::Mode::openmp;
}

}  // namespace

BENCHMARK_CAPTURE(bench_contact_scan, serial, frac::par::Mode::serial)->Arg(256);
BENCHMARK_CAPTURE(bench_contact_scan, openmp, frac::par::Mode::openmp)->Arg(256);
BENCHMARK_CAPTURE(bench_quasi_K, serial, frac::par::Mode::serial)->Arg(1 << 16);
BENCHMARK_CAPTURE(bench_quasi_K, openmp, frac::par::Mode::openmp)->Arg(1 << 16);
BENCHMARK_CAPTURE(bench_mu_sum, serial, frac::par::Mode::serial)->Arg(1 << 22);
BENCHMARK_CAPTURE(bench_mu_sum, openmp, frac::par::Mode::openmp)->Arg(1 << 22);

BENCHMARK_MAIN();
