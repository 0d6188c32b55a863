// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>

#include "ccl/control.hpp"
#include "ccl/experiment.hpp"
#include "ccl/idiscovery.hpp"

using namespace ccl;

namespace {

graph::TsPag circles_pag() {
    graph::TsPag g = graph::init_complete_pag(4, 1);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (const auto& l : g.links()) g.set_effect(l.from, l.lag, l.to, u(rng));
    return g;
}

control::InterventionMenu menu() {
    control::InterventionMenu m;
    for (int v = 1; v < 4; ++v) m.entries.push_back({v, {-1.6, 1.6}, 0.0});
    return m;
}

Series mixed_series(std::size_t rows, std::size_t cols) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    std::bernoulli_distribution coin(0.25);
    Series s(rows, cols);
    for (std::size_t t = 0; t < rows; ++t)
        for (std::size_t c = 0; c < cols; ++c) {
            s.values(t, c) = z(rng);
            s.do_mask[t * cols + c] = coin(rng);
        }
    return s;
}

void BM_find_optimal_serial(benchmark::State& st) {
    const auto g = circles_pag();
    const auto m = menu();
    const Matrix start(1, 4);
    for (auto _ : st) benchmark::DoNotOptimize(control::find_optimal_serial(g, m, 0, start, {}));
}

void BM_find_optimal_omp(benchmark::State& st) {
    omp_set_num_threads(static_cast<int>(st.range(0)));
    const auto g = circles_pag();
    const auto m = menu();
    const Matrix start(1, 4);
    for (auto _ : st) benchmark::DoNotOptimize(control::find_optimal(g, m, 0, start, {}));
}

void BM_interventional_serial(benchmark::State& st) {
    const Series s = mixed_series(2000, 7);
    for (auto _ : st) benchmark::DoNotOptimize(idisc::discover_interventional_serial(s, {}));
}

void BM_interventional_omp(benchmark::State& st) {
    omp_set_num_threads(static_cast<int>(st.range(0)));
    const Series s = mixed_series(2000, 7);
    for (auto _ : st) benchmark::DoNotOptimize(idisc::discover_interventional(s, {}));
}

void BM_run_batch(benchmark::State& st) {
    experiment::EpisodeConfig cfg;
    cfg.t_max = 100;
    const auto seeds = experiment::episode_seeds(0, 8);
    for (auto _ : st) benchmark::DoNotOptimize(experiment::run_batch(cfg, seeds, static_cast<int>(st.range(0))));
}

}  // namespace

BENCHMARK(BM_find_optimal_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_find_optimal_omp)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_interventional_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_interventional_omp)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_run_batch)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
