#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "ccl/odiscovery.hpp"
#include "ccl/scm.hpp"
#include "ccl/stats.hpp"
#include "gen.hpp"

using namespace ccl;
using namespace ccl::graph;
using namespace ccl::odisc;

namespace {

scm::Scm static_scm(int n, std::vector<std::pair<int, std::pair<int, double>>> links) {
    scm::Scm s;
    s.n_total = n;
    s.tau_max = 0;
    s.auto_coeff.assign(static_cast<std::size_t>(n), 0.0);
    s.cross.resize(static_cast<std::size_t>(n));
    s.noise_std.assign(static_cast<std::size_t>(n), 1.0);
    for (int j = 0; j < n; ++j) s.observed_idx.push_back(j);
    for (const auto& [dst, src] : links) s.cross[static_cast<std::size_t>(dst)].push_back({src.first, 0, src.second});
    return s;
}

Series sample(const scm::Scm& s, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    return scm::generate(s, std::nullopt, scm::warm_up_start(s, rng), n, rng);
}

DiscoveryConfig static_cfg() {
    DiscoveryConfig c;
    c.tau_max = 0;
    return c;
}

std::set<LinkKey> skeleton(const TsPag& g) {
    std::set<LinkKey> out;
    for (const Link& l : g.links()) out.insert(l.key());
    return out;
}

}  // namespace

TEST_CASE("inject_constraints examples") {
    const TsPag fresh = init_complete_pag(2, 0);
    CHECK(inject_constraints(fresh, {}) == fresh);

    idisc::ConstraintList dep;
    dep.deps.push_back({1, 0, 0, 0.01});
    const TsPag d = inject_constraints(fresh, dep);
    CHECK(d.mark_at_source(0, 0, 1) == Edgemark::Tail);
    CHECK(d.mark_at_target(0, 0, 1) == Edgemark::Arrow);
    CHECK(d.fixed_marks().size() == 2);

    idisc::ConstraintList both;
    both.indeps.push_back({1, 0, 0, 0.9});
    both.indeps.push_back({0, 1, 0, 0.9});
    const TsPag b = inject_constraints(fresh, both);
    CHECK(b.mark_at_source(0, 0, 1) == Edgemark::Arrow);
    CHECK(b.mark_at_target(0, 0, 1) == Edgemark::Arrow);

    SUBCASE("conflict resolved by the smaller p and logged") {
        idisc::ConstraintList c;
        c.deps.push_back({1, 0, 0, 0.04});
        c.indeps.push_back({1, 0, 0, 0.9});
        std::vector<std::string> log;
        const TsPag g = inject_constraints(fresh, c, &log);
        CHECK(g.mark_at_source(0, 0, 1) == Edgemark::Tail);
        CHECK(log.size() == 1);
        c.deps[0].p = 0.95;
        const TsPag h = inject_constraints(fresh, c);
        CHECK(h.mark_at_source(0, 0, 1) == Edgemark::Arrow);
    }
    SUBCASE("missing edges are not added") {
        TsPag empty(2, 0);
        CHECK(inject_constraints(empty, dep).link_count() == 0);
    }
}

TEST_CASE("effect_size reads the stored minimum") {
    SepsetStore s;
    s.min_stat[canonical_key(0, 1, 2)] = -0.07;
    CHECK(effect_size(s, 0, 2, 1) == -0.07);
    CHECK_FALSE(effect_size(s, 2, 0, 1).has_value());
}

TEST_CASE("independent pair is removed at c = 0") {
    const Series d = sample(static_scm(2, {}), 5000, 1);
    const auto r = discover(d, {}, static_cfg());
    CHECK(r.pag.link_count() == 0);
    CHECK(r.store.sepsets.count(canonical_key(0, 0, 1)));
    CHECK(r.store.sepsets.at(canonical_key(0, 0, 1)).empty());
}

TEST_CASE("collider is oriented in most seeds") {
    const auto s = static_scm(3, {{2, {0, 0.5}}, {2, {1, 0.5}}});
    int good = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const TsPag g = discover(sample(s, 10000, seed), {}, static_cfg()).pag;
        good += skeleton(g) == std::set<LinkKey>{{0, 0, 2}, {1, 0, 2}} &&
                g.mark_at_target(0, 0, 2) == Edgemark::Arrow && g.mark_at_target(1, 0, 2) == Edgemark::Arrow;
    }
    CHECK(good >= 11);
}

TEST_CASE("fork effect size shrinks under conditioning") {
    const auto s = static_scm(3, {{0, {1, 0.5}}, {2, {1, 0.5}}});
    const Series d = sample(s, 10000, 3);
    const auto r = discover(d, {}, static_cfg());
    const auto e = effect_size(r.store, 0, 2, 0);
    REQUIRE(e.has_value());
    const double raw = stats::pearson_test(d.values.column(0), d.values.column(2)).statistic;
    CHECK(std::abs(*e) < std::abs(raw));
}

TEST_CASE("indep constraint survives on an observationally ambiguous link") {
    const auto s = static_scm(5, {{4, {0, 0.5}}});
    const Series d = sample(s, 5000, 4);
    idisc::ConstraintList c;
    c.indeps.push_back({0, 4, 0, 0.95});
    const TsPag g = discover(d, c, static_cfg()).pag;
    REQUIRE(g.has(0, 0, 4));
    CHECK(g.mark_at({4, 0}, {0, 0}) == Edgemark::Arrow);
    CHECK(g.fixed_at({4, 0}, {0, 0}));
}

TEST_CASE("MomentTable matches explicit cellwise filtering") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = static_cast<std::size_t>(gen::uniform_int(rng, 2, 4));
        const int tau = gen::uniform_int(rng, 0, 1);
        Series s = gen::series(rng, 150, n, 0.1);
        for (std::size_t t = 1; t < s.rows(); ++t) s.values(t, n - 1) += 0.5 * s.values(t - 1, 0);
        const bool rowwise = gen::coin(rng, 0.3);
        const MomentTable table(s, tau, rowwise);
        const std::size_t d = n * static_cast<std::size_t>(tau + 1);
        const std::size_t x = static_cast<std::size_t>(gen::uniform_int(rng, 0, static_cast<int>(d) - 1));
        std::size_t y = x;
        while (y == x) y = static_cast<std::size_t>(gen::uniform_int(rng, 0, static_cast<int>(d) - 1));
        std::vector<std::size_t> S;
        for (std::size_t c = 0; c < d; ++c)
            if (c != x && c != y && gen::coin(rng, 0.3)) S.push_back(c);
        std::vector<std::size_t> cols{x, y};
        cols.insert(cols.end(), S.begin(), S.end());

        std::vector<std::vector<double>> kept(cols.size());
        for (std::size_t t = static_cast<std::size_t>(tau); t < s.rows(); ++t) {
            bool ok = true;
            for (std::size_t c = 0; c < (rowwise ? d : cols.size()); ++c) {
                const std::size_t col = rowwise ? c : cols[c];
                if (s.is_do(t - col / n, col % n)) ok = false;
            }
            if (!ok) continue;
            for (std::size_t c = 0; c < cols.size(); ++c) kept[c].push_back(s.values(t - cols[c] / n, cols[c] % n));
        }
        const auto got = table.test(x, y, S);
        if (kept[0].size() < S.size() + 3) {
            CHECK_FALSE(got.has_value());
            continue;
        }
        std::vector<std::span<const double>> Sv(kept.begin() + 2, kept.end());
        const auto want = stats::partial_corr_test(kept[0], kept[1], Sv);
        REQUIRE(got.has_value());
        CHECK(got->n == want.n);
        CHECK(got->statistic == doctest::Approx(want.statistic).epsilon(1e-9));
        CHECK(got->p_value == doctest::Approx(want.p_value).epsilon(1e-9));
    }
}

TEST_CASE("discovery properties on random SCM data with random constraints") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = gen::uniform_int(rng, 2, 4);
        const scm::Scm s = gen::scm(rng, n);
        Rng r(static_cast<std::uint64_t>(trial));
        Series d = scm::generate(s, std::nullopt, scm::warm_up_start(s, r), 400, r);
        for (std::size_t t = 0; t < d.rows(); ++t)
            for (std::size_t j = 0; j < d.cols(); ++j) d.set_do(t, j, gen::coin(rng, 0.05));
        idisc::ConstraintList c;
        std::set<std::tuple<int, int, int>> used;
        for (int k = 0; k < 4; ++k) {
            const int i = gen::uniform_int(rng, 0, n - 1), j = gen::uniform_int(rng, 0, n - 1), tau = gen::uniform_int(rng, 0, 1);
            if ((i == j && tau == 0) || !used.insert({j, i, tau}).second) continue;
            if (tau == 0 && used.count({i, j, 0})) continue;
            (gen::coin(rng) ? c.deps : c.indeps).push_back({j, i, tau, gen::coin(rng) ? 0.01 : 0.9});
        }
        const auto res = discover(d, c, DiscoveryConfig{});
        const TsPag full = init_complete_pag(n, 1);
        const TsPag seeded = inject_constraints(full, c);
        for (const Link& l : res.pag.links()) {
            CHECK(full.has(l.from, l.lag, l.to));
            CHECK(l.effect.has_value());
        }
        for (const auto& [key, at_from] : seeded.fixed_marks()) {
            if (!res.pag.has(key.from, key.lag, key.to)) continue;
            const LaggedNode a{key.from, key.lag}, b{key.to, 0};
            const LaggedNode at = at_from ? a : b, other = at_from ? b : a;
            CHECK(res.pag.fixed_at(at, other));
            CHECK(res.pag.mark_at(at, other) == seeded.mark_at(at, other));
        }
        for (const auto& k : c.indeps)
            if (res.pag.has(k.i, k.tau, k.j)) CHECK(res.pag.mark_at({k.i, k.tau}, {k.j, 0}) == Edgemark::Arrow);
        for (const auto& k : c.deps)
            if (res.pag.has(k.i, k.tau, k.j)) {
                CHECK(res.pag.mark_at({k.i, k.tau}, {k.j, 0}) == Edgemark::Tail);
                CHECK(res.pag.mark_at({k.j, 0}, {k.i, k.tau}) == Edgemark::Arrow);
            }
        for (const Link& l : full.links())
            if (!res.pag.has(l.from, l.lag, l.to)) CHECK(res.store.sepsets.count(l.key()));
    }
}

TEST_CASE("skeleton recovery on 3-variable SCMs") {
    int good = 0;
    for (std::uint64_t run = 0; run < 50; ++run) {
        Rng rng(1000 + run);
        scm::SamplingConfig c;
        c.n_total = c.n_observed = c.n_links = 3;
        c.noise_min = c.noise_max = 1.0;
        c.target_rule = scm::TargetRule::Any;
        const scm::Scm s = scm::sample_scm(c, rng);
        std::set<LinkKey> truth;
        for (int j = 0; j < 3; ++j) {
            truth.insert({j, 1, j});
            for (const auto& m : s.cross[static_cast<std::size_t>(j)]) truth.insert(canonical_key(m.source, m.lag, j));
        }
        const Series d = scm::generate(s, std::nullopt, scm::warm_up_start(s, rng), 10000, rng);
        good += skeleton(discover(d, {}, DiscoveryConfig{}).pag) == truth;
    }
    CHECK(good >= 45);
}
