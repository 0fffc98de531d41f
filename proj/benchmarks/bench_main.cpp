#include <benchmark/benchmark.h>

#include <cmath>

#include "nslab/integrator.hpp"
#include "nslab/regularizers.hpp"
#include "nslab/resolvers.hpp"
#include "nslab/systems.hpp"

#ifdef NSLAB_BENCH_EXPR
#include "nslab/cli/expr.hpp"
#endif

using namespace nslab;

static void BM_AdaptiveOscillator(benchmark::State& state) {
    const Field osc = [](double, std::span<const double> s, std::span<double> d) {
        d[0] = s[1];
        d[1] = -s[0];
    };
    const IntegratorOptions opts{1e-9, 1e-12};
    for (auto _ : state) {
        auto tr = integrate_adaptive(osc, 0.0, {1.0, 0.0}, 10.0, opts);
        benchmark::DoNotOptimize(tr.size());
    }
}
BENCHMARK(BM_AdaptiveOscillator);

static void BM_Hysteresis(benchmark::State& state) {
    const double alpha = 1.0 / static_cast<double>(state.range(0));
    const auto sys = exutkin();
    for (auto _ : state) {
        auto run = run_hysteresis(sys, {0.0}, -alpha, -1, alpha, 1.0, IntegratorOptions{});
        benchmark::DoNotOptimize(run.cycles.size());
    }
}
BENCHMARK(BM_Hysteresis)->Arg(10)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_Embedded(benchmark::State& state) {
    const double alpha = 1.0 / static_cast<double>(state.range(0));
    const auto sys = exutkin();
    for (auto _ : state) {
        auto run = run_embedded(sys, {0.0}, 0.0, 1.0, alpha, alpha * alpha, 1.0, IntegratorOptions{});
        benchmark::DoNotOptimize(run.trajectory.size());
    }
}
BENCHMARK(BM_Embedded)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);

static void BM_Resolvers(benchmark::State& state) {
    const auto sys = exutkin();
    const Vec x{0.1};
    for (auto _ : state) {
        benchmark::DoNotOptimize(filippov_field(sys, x));
        benchmark::DoNotOptimize(utkin_field(sys, x));
    }
}
BENCHMARK(BM_Resolvers);

#ifdef NSLAB_BENCH_EXPR
static void BM_ExprEval(benchmark::State& state) {
    const auto e = cli::parse_expr("0.3 + u^3 - 0.1*sin(x1)*exp(-y^2)", cli::system_variables(1));
    double slots[] = {0.2, 0.01, -0.5};
    for (auto _ : state) {
        slots[1] += 1e-12;
        benchmark::DoNotOptimize(e(slots));
    }
}
BENCHMARK(BM_ExprEval);
#endif

BENCHMARK_MAIN();
