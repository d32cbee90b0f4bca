// Microbenchmarks for the hot paths: kernel evaluation, branch solving, the
// time stepper, and the quadratic forms used in every diagnostics dump.

#include <benchmark/benchmark.h>

#include <random>

#include "flockfp/diagnostics.hpp"
#include "flockfp/gibbs.hpp"
#include "flockfp/linearized.hpp"
#include "flockfp/phase.hpp"
#include "flockfp/solver.hpp"

using namespace flockfp;

namespace {

ModelParams subcritical(int d) {
    const double Ds = find_D_star(d, 4.0);
    return ModelParams{d, 4.0, 0.8 * Ds};
}

void bench_angular_h(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const QuadSpec spec = make_quad_spec(ModelParams{d, 4.0, 0.5});
    double x = 0.1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(angular_h(x, d, 0, spec));
        x += 1e-6;
    }
}
BENCHMARK(bench_angular_h)->Arg(1)->Arg(2);

void bench_kernels(benchmark::State& state) {
    const ModelParams p = subcritical(static_cast<int>(state.range(0)));
    double r = 0.3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(K_of_r(p, r));
        benchmark::DoNotOptimize(H_of_r(p, r));
        r = r == 0.3 ? 0.31 : 0.3;
    }
}
BENCHMARK(bench_kernels)->Arg(1)->Arg(2);

void bench_find_r(benchmark::State& state) {
    const ModelParams p = subcritical(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(find_r_of_D(p));
}
BENCHMARK(bench_find_r)->Arg(1)->Arg(2);

void bench_find_D_star(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(find_D_star(d, 4.0));
}
BENCHMARK(bench_find_D_star)->Arg(1)->Arg(2);

void bench_step(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const ModelParams p = subcritical(d);
    const double r = *find_r_of_D(p);
    SolverConfig cfg = default_solver_config(p, r);
    if (d == 2) cfg.n = 96;
    const Grid grid = make_grid(d, cfg.n, cfg.L);
    GridDensity f = discrete_gibbs(grid, make_gibbs(p, std::vector<double>(d, 0.0)));
    for (auto _ : state) {
        f = step(f, cfg, p);
        benchmark::DoNotOptimize(f.values.data());
    }
}
BENCHMARK(bench_step)->Arg(1)->Arg(2)->Unit(benchmark::kMicrosecond);

void bench_free_energy(benchmark::State& state) {
    const ModelParams p = subcritical(1);
    const double r = *find_r_of_D(p);
    const SolverConfig cfg = default_solver_config(p, r);
    const Grid grid = make_grid(1, cfg.n, cfg.L);
    const GridDensity f = discrete_gibbs(grid, make_gibbs(p, {r}));
    for (auto _ : state) benchmark::DoNotOptimize(free_energy(f, p));
}
BENCHMARK(bench_free_energy);

void bench_quadratic_forms(benchmark::State& state) {
    const ModelParams p = subcritical(1);
    const double r = *find_r_of_D(p);
    const Grid grid = make_grid(1, 400, default_half_width(p, r));
    const GibbsState anchor = make_gibbs(p, {r});
    std::mt19937_64 rng(5);
    const Perturbation g =
        make_perturbation(grid, anchor, aligned_perturbation(grid, anchor, rng));
    for (auto _ : state) {
        benchmark::DoNotOptimize(q1(g));
        benchmark::DoNotOptimize(q2(g));
    }
}
BENCHMARK(bench_quadratic_forms);

}  // namespace

BENCHMARK_MAIN();
