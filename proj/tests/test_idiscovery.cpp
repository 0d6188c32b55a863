#include <doctest.h>

#include <algorithm>
#include <random>
#include <tuple>

#include "ccl/idiscovery.hpp"
#include "gen.hpp"

using namespace ccl;
using namespace ccl::idisc;

namespace {

bool has(const std::vector<Constraint>& list, int j, int i, int tau) {
    return std::any_of(list.begin(), list.end(), [&](const Constraint& c) { return c.j == j && c.i == i && c.tau == tau; });
}

}  // namespace

TEST_CASE("no interventional cells gives no constraints") {
    std::mt19937_64 rng(1);
    const Series s = gen::series(rng, 100, 3, 0.0);
    CHECK(discover_interventional(s, {}).empty());
}

TEST_CASE("perfect interventional ramp is a dependency") {
    Series s(30, 2);
    for (std::size_t t = 0; t < 30; ++t) {
        s.values(t, 0) = static_cast<double>(t);
        s.values(t, 1) = static_cast<double>(t);
        s.set_do(t, 0, true);
    }
    const ConstraintList c = discover_interventional(s, {});
    REQUIRE(has(c.deps, 1, 0, 0));
    const auto it = std::find_if(c.deps.begin(), c.deps.end(), [](const Constraint& k) { return k.tau == 0; });
    CHECK(it->p < 1e-12);
}

TEST_CASE("null pairs land in indeps about 20% of the time") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z;
    const int trials = 2000;
    int indep = 0;
    for (int k = 0; k < trials; ++k) {
        Series s(200, 2);
        for (std::size_t t = 0; t < 200; ++t) {
            s.values(t, 0) = z(rng);
            s.values(t, 1) = z(rng);
            s.set_do(t, 0, true);
        }
        indep += has(discover_interventional(s, {0, 0.05, 0.8, PruneList::Deps}).indeps, 1, 0, 0);
    }
    const double frac = static_cast<double>(indep) / trials;
    CHECK(frac > 0.17);
    CHECK(frac < 0.23);
}

TEST_CASE("too few usable samples are skipped") {
    Series s(10, 2);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    for (std::size_t t = 0; t < 10; ++t) s.values(t, 0) = z(rng), s.values(t, 1) = z(rng);
    s.set_do(0, 0, true);
    s.set_do(1, 0, true);
    CHECK(discover_interventional(s, {0, 0.05, 0.8, PruneList::Deps}).empty());
}

TEST_CASE("prune_cycles drops the weakest member") {
    std::vector<Constraint> deps{{1, 0, 0, 0.01}, {2, 1, 0, 0.04}, {0, 2, 0, 0.02}, {2, 0, 1, 0.5}};
    prune_cycles(deps);
    CHECK(deps.size() == 3);
    CHECK_FALSE(has(deps, 2, 1, 0));
    CHECK(has(deps, 2, 0, 1));
    CHECK(contemporaneous_acyclic(deps));

    std::vector<Constraint> two{{1, 0, 0, 0.03}, {0, 1, 0, 0.03}};
    prune_cycles(two);
    REQUIRE(two.size() == 1);
    CHECK(two[0].j == 0);
}

TEST_CASE("constraint invariants on random mixed data") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = static_cast<std::size_t>(gen::uniform_int(rng, 2, 5));
        Series s = gen::series(rng, 120, n, 0.0);
        // Correlated chains and random interventions give a mix of outcomes.
        for (std::size_t t = 1; t < s.rows(); ++t)
            for (std::size_t j = 1; j < n; ++j)
                if (gen::coin(rng, 0.5)) s.values(t, j) += gen::uniform(rng, -1, 1) * s.values(t - gen::uniform_int(rng, 0, 1), j - 1);
        for (std::size_t t = 0; t < s.rows(); ++t)
            for (std::size_t j = 0; j < n; ++j) s.set_do(t, j, gen::coin(rng, 0.3));
        const InterventionalConfig cfg{gen::uniform_int(rng, 0, 2), 0.1, 0.6,
                                       gen::coin(rng) ? PruneList::Deps : PruneList::Indeps};
        const ConstraintList c = discover_interventional(s, cfg);
        for (const auto* list : {&c.deps, &c.indeps}) {
            for (const Constraint& k : *list) {
                CHECK_FALSE((k.i == k.j && k.tau == 0));
                CHECK(k.tau <= cfg.tau_max);
                CHECK(k.p >= 0.0);
                CHECK(k.p <= 1.0);
            }
            CHECK(std::is_sorted(list->begin(), list->end(), [](const Constraint& a, const Constraint& b) {
                return std::tie(a.j, a.i, a.tau) < std::tie(b.j, b.i, b.tau);
            }));
        }
        for (const Constraint& d : c.deps) CHECK_FALSE(has(c.indeps, d.j, d.i, d.tau));
        if (cfg.prune == PruneList::Deps) CHECK(contemporaneous_acyclic(c.deps));
        CHECK(discover_interventional_serial(s, cfg) == c);
    }
}
