#include <benchmark/benchmark.h>

#include "spider/coeffexpr.hpp"
#include "spider/simulator.hpp"

namespace {

spider::CoefficientSet coefficients() {
    return spider::expr::build_coefficient_set(spider::json::parse(R"js({
        "edges": 3, "drift": ["0.5 - x", "sin(t + l)", "0"], "sigma": "1 + 0.2 * sin(x + l)",
        "alpha": {"mode": "renormalize", "weights": ["1 + l", "1", "2"]},
        "bounds": {"a_lower": 0.05, "sigma_lower": 0.5, "b_bound": 3, "sigma_bound": 1.5, "alpha_lip": 1}})js"));
}

spider::SimConfig config(std::int64_t paths) {
    spider::SimConfig cfg;
    cfg.h = 1e-3;
    cfg.T = 1.0;
    cfg.n_paths = static_cast<std::size_t>(paths);
    cfg.seed = 3;
    return cfg;
}

void BM_batch_serial(benchmark::State& state) {
    const auto c = coefficients();
    const auto cfg = config(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(spider::simulate_batch_serial(c, {}, cfg).summary.x_T.mean);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_batch_openmp(benchmark::State& state) {
    const auto c = coefficients();
    const auto cfg = config(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(spider::simulate_batch(c, {}, cfg).summary.x_T.mean);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_batch_serial)->Arg(256)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_batch_openmp)->Arg(256)->Arg(2048)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
