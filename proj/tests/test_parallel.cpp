#include <doctest.h>

#include <omp.h>

#include <random>

#include "ccl/control.hpp"
#include "ccl/experiment.hpp"
#include "ccl/idiscovery.hpp"
#include "ccl/io.hpp"
#include "gen.hpp"

using namespace ccl;

namespace {

struct Threads {
    int saved = omp_get_max_threads();
    explicit Threads(int n) { omp_set_num_threads(n); }
    ~Threads() { omp_set_num_threads(saved); }
};

}  // namespace

TEST_CASE("parallel find_optimal equals the serial reference") {
    Threads four(4);
    std::mt19937_64 rng(41);
    int large = 0;
    for (int trial = 0; trial < 60; ++trial) {
        graph::TsPag g(4, 1);
        for (const auto& l : graph::init_complete_pag(4, 1).links()) {
            if (gen::coin(rng, 0.6)) continue;
            const auto m = l.lag > 0 ? graph::Edgemark::Arrow : gen::any_mark(rng);
            g.add(l.from, l.lag, l.to, gen::any_mark(rng), m);
            g.set_effect(l.from, l.lag, l.to, gen::uniform(rng, -0.5, 0.5));
        }
        control::InterventionMenu menu;
        for (int v = 1; v < 4; ++v) menu.entries.push_back({v, {gen::uniform(rng, -2, 0), gen::uniform(rng, 0, 2)}, 0.0});
        Matrix start(1, 4);
        for (double& x : std::span<double>(start.row(0))) x = gen::uniform(rng, -1, 1);
        control::PlanConfig cfg;
        if (gen::coin(rng)) cfg.mode = control::ObjectiveMode::Magnitude;
        const bool empty_start = gen::coin(rng, 0.3);
        const Matrix s = empty_start ? Matrix() : start;
        const auto mags = graph::enumerate_mags(g, cfg.mag_cap);
        if (mags.mags.empty()) continue;
        large += mags.mags.size() * 6 > 64;
        const auto a = control::find_optimal(g, menu, 0, s, cfg);
        const auto b = control::find_optimal_serial(g, menu, 0, s, cfg);
        CHECK(a.variable == b.variable);
        CHECK(a.value_opt == b.value_opt);
        CHECK(a.expected_outcome == b.expected_outcome);
        CHECK(a.source_mag == b.source_mag);
    }
    CHECK(large >= 5);
}

TEST_CASE("parallel discover_interventional equals the serial reference") {
    Threads four(4);
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 40; ++trial) {
        const Series s = gen::series(rng, 200, 6, 0.3);
        const idisc::InterventionalConfig cfg{1, 0.05, 0.8, idisc::PruneList::Deps};
        CHECK(idisc::discover_interventional(s, cfg) == idisc::discover_interventional_serial(s, cfg));
    }
}

TEST_CASE("run_batch output does not depend on the worker count") {
    experiment::EpisodeConfig cfg;
    cfg.seed = 300;
    cfg.t_max = 60;
    const auto seeds = experiment::episode_seeds(cfg.seed, 8);
    const auto a = experiment::run_batch(cfg, seeds, 1);
    const auto b = experiment::run_batch(cfg, seeds, 4);
    for (std::size_t k = 0; k < seeds.size(); ++k) CHECK(io::episode_csv(a[k]) == io::episode_csv(b[k]));
    CHECK(io::aggregate_csv(experiment::aggregate(a)) == io::aggregate_csv(experiment::aggregate(b)));
}
