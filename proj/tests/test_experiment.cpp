#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "ccl/control.hpp"
#include "ccl/error.hpp"
#include "ccl/experiment.hpp"
#include "ccl/stats.hpp"
#include "gen.hpp"

using namespace ccl;
using namespace ccl::experiment;

namespace {

EpisodeConfig quick(std::uint64_t seed) {
    EpisodeConfig c;
    c.seed = seed;
    c.t_max = 80;
    return c;
}

}  // namespace

TEST_CASE("action schedule") {
    std::size_t acted = 0;
    for (std::size_t t = 0; t < 200; ++t) acted += is_action_step(t, 0.25);
    CHECK(acted == 50);
    for (std::size_t t = 0; t < 12; ++t) CHECK(is_action_step(t, 0.25) == (t % 4 == 3));

    std::mt19937_64 rng(1);
    for (int k = 0; k < 200; ++k) {
        const double f = gen::coin(rng, 0.2) ? static_cast<double>(gen::uniform_int(rng, 0, 4)) / 4.0 : gen::uniform(rng, 0, 1);
        const auto T = static_cast<std::size_t>(gen::uniform_int(rng, 0, 300));
        std::size_t n = 0, inc = 0;
        for (std::size_t t = 0; t < T; ++t) n += is_action_step(t, f);
        for (std::size_t t = 1; t <= T; ++t)
            inc += std::floor(static_cast<double>(t) * f) > std::floor(static_cast<double>(t - 1) * f);
        CHECK(n == inc);
    }
}

TEST_CASE("episode records and averages") {
    const EpisodeResult r = run_episode(quick(3));
    REQUIRE(r.records.size() == 80);
    double sum = 0.0;
    std::size_t acted = 0;
    for (const StepRecord& s : r.records) {
        CHECK(s.regret_increment == s.y_oracle - s.y_actual);
        CHECK(s.eps == control::epsilon_at(s.t, 0.5, 0.99));
        if (!s.acted) {
            CHECK(s.variable == -1);
            CHECK(std::isnan(s.value));
        }
        acted += s.acted;
        sum += s.regret_increment;
    }
    CHECK(acted == 20);
    CHECK(std::abs(r.avg_regret - sum / 80.0) <= 1e-12);
    auto shuffled = r.records;
    std::mt19937_64 rng(2);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    double s2 = 0.0;
    for (const StepRecord& s : shuffled) s2 += s.regret_increment;
    CHECK(std::abs(s2 / 80.0 - r.avg_regret) <= 1e-12);
}

TEST_CASE("no interventions leaves only the passive gap") {
    EpisodeConfig c = quick(4);
    c.intervention_fraction = 0.0;
    const EpisodeResult r = run_episode(c);
    for (const StepRecord& s : r.records) CHECK_FALSE(s.acted);
    CHECK(std::isnan(r.optimal_fraction));
    CHECK(r.discoveries == 0);
    CHECK(r.avg_regret > 0.0);
}

TEST_CASE("episodes are reproducible") {
    for (Mode m : {Mode::Baseline, Mode::Extended, Mode::OracleConstraints, Mode::ObservationalOnly}) {
        EpisodeConfig c = quick(5);
        c.mode = m;
        const EpisodeResult a = run_episode(c), b = run_episode(c);
        CHECK(a.records == b.records);
        CHECK(a.avg_regret == b.avg_regret);
    }
}

TEST_CASE("baseline and extended agree until the constraints change the graph") {
    for (std::uint64_t seed = 10; seed < 20; ++seed) {
        EpisodeConfig c = quick(seed);
        c.trace = true;
        c.mode = Mode::Baseline;
        const EpisodeResult base = run_episode(c);
        c.mode = Mode::Extended;
        const EpisodeResult ext = run_episode(c);
        std::size_t k = 0;
        while (k < base.trace.size() && k < ext.trace.size() && base.trace[k] == ext.trace[k]) ++k;
        std::size_t seen = 0;
        for (std::size_t t = 0; t < base.records.size(); ++t) {
            if (base.records[t].acted && seen++ == k) break;
            CHECK(base.records[t] == ext.records[t]);
        }
    }
}

TEST_CASE("oracle twin") {
    // y = 0 <- 0.5 * X^2 (lag 0); X^1 is unconnected.
    scm::Scm s;
    s.n_total = 3;
    s.auto_coeff = {0.4, 0.3, 0.5};
    s.cross = {{{2, 0, 0.5}}, {}, {}};
    s.noise_std = {1.0, 1.0, 1.0};
    s.observed_idx = {0, 1, 2};
    s.target = 0;

    const OracleAction o = oracle_action(s, 20);
    const double sd2 = 1.0 / std::sqrt(1.0 - 0.25);
    CHECK(o.variable == 2);
    CHECK(o.value == doctest::Approx(stats::normal_quantile(0.95) * sd2));
    CHECK(o.optimal_variables == std::vector<int>{2});
    const Matrix zero(1, 3);
    scm::Scm quiet = s;
    quiet.noise_std = {0, 0, 0};
    Rng rng(0);
    const Series twin = scm::generate(quiet, scm::Intervention{2, o.value}, zero, 400, rng);
    CHECK(twin.values(399, 0) == doctest::Approx(0.5 * o.value / (1.0 - 0.4)).epsilon(1e-9));

    // With no path from the intervened variable the twin's target is the passive one.
    s.cross = {{}, {}, {{0, 0, 0.5}}};
    const scm::Stepper st(s);
    Matrix passive(1, 3), acted(1, 3);
    std::vector<double> noise(3);
    for (std::size_t t = 1; t < 50; ++t) {
        scm::draw_noise(s, rng, noise);
        passive.append_row(std::vector<double>(3, 0.0));
        acted.append_row(std::vector<double>(3, 0.0));
        st.step(passive, t, std::nullopt, noise);
        st.step(acted, t, scm::Intervention{1, 2.0}, noise);
        CHECK(passive(t, 0) == acted(t, 0));
    }
}

TEST_CASE("oracle constraints partition the grid by true ancestry") {
    Rng rng(9);
    for (int k = 0; k < 30; ++k) {
        const scm::Scm s = scm::sample_scm(scm::SamplingConfig{}, rng);
        const auto c = oracle_constraints(s, 1);
        const std::size_t n = s.observed_idx.size();
        CHECK(c.deps.size() + c.indeps.size() == n * n * 2 - n);
        const graph::Dag dag = scm::to_dag(s);
        for (const auto& d : c.deps)
            CHECK(graph::is_ancestor(dag, {s.observed_idx[static_cast<std::size_t>(d.i)], d.tau},
                                     {s.observed_idx[static_cast<std::size_t>(d.j)], 0}));
        CHECK(idisc::contemporaneous_acyclic(c.deps));
    }
}

TEST_CASE("oracle constraints settle on a unique ancestor") {
    std::size_t hits = 0, total = 0;
    int used = 0;
    for (std::uint64_t seed = 0; used < 20 && seed < 2000; ++seed) {
        EpisodeConfig c;
        c.seed = seed;
        c.mode = Mode::OracleConstraints;
        const scm::Scm s = episode_scm(c);
        const auto oc = oracle_constraints(s, 1);
        const int y = s.observed_target();
        std::set<int> anc;
        for (const auto& d : oc.deps)
            if (d.j == y && d.i != y) anc.insert(d.i);
        if (anc.size() != 1) continue;
        ++used;
        const EpisodeResult r = run_episode(c);
        for (const StepRecord& rec : r.records)
            if (rec.acted && rec.t >= 150) {
                ++total;
                hits += rec.variable == *anc.begin();
            }
    }
    CHECK(used == 20);
    CHECK(static_cast<double>(hits) >= 0.8 * static_cast<double>(total));
}

TEST_CASE("aggregate") {
    EpisodeResult a;
    a.avg_regret = 1.2;
    CHECK(aggregate(std::vector<EpisodeResult>{a}).mean_avg_regret == doctest::Approx(1.2));
    std::vector<EpisodeResult> three(3);
    for (int k = 0; k < 3; ++k) {
        three[static_cast<std::size_t>(k)].avg_regret = k + 1.0;
        three[static_cast<std::size_t>(k)].optimal_fraction = k == 1 ? kNaN : 0.5 * k;
    }
    const Aggregate g = aggregate(three);
    CHECK(g.mean_avg_regret == doctest::Approx(2.0));
    CHECK(g.median == doctest::Approx(2.0));
    CHECK(g.q1 == doctest::Approx(1.5));
    CHECK(g.q3 == doctest::Approx(2.5));
    CHECK(g.min == 1.0);
    CHECK(g.max == 3.0);
    CHECK(g.mean_optimal_fraction == doctest::Approx(0.5));
    CHECK_THROWS(aggregate(std::vector<EpisodeResult>{}));
}

TEST_CASE("run_batch and sweep") {
    const auto seeds = episode_seeds(40, 6);
    CHECK(seeds == std::vector<std::uint64_t>{40, 41, 42, 43, 44, 45});
    const auto one = run_batch(quick(0), seeds, 1);
    const auto four = run_batch(quick(0), seeds, 4);
    REQUIRE(one.size() == 6);
    for (std::size_t k = 0; k < 6; ++k) {
        CHECK(one[k].seed == seeds[k]);
        CHECK(one[k].records == four[k].records);
    }
    const auto rows = sweep(quick(40), "intervention_fraction", {"0", "0.5"}, 2, 2);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].episodes.size() == 2);
    CHECK(rows[1].param_value == "0.5");
    CHECK_THROWS_AS(sweep(quick(0), "bogus", {"1"}, 1, 1), ConfigError);
    CHECK_THROWS_AS(sweep(quick(0), "intervention_fraction", {"2"}, 1, 1), ConfigError);
}

TEST_CASE("config validation names the key") {
    EpisodeConfig c;
    c.intervention_fraction = 1.5;
    try {
        c.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "intervention_fraction");
    }
}
