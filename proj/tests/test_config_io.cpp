#include <doctest.h>

#include <random>

#include "ccl/config.hpp"
#include "ccl/error.hpp"
#include "ccl/io.hpp"
#include "gen.hpp"

using namespace ccl;

TEST_CASE("config parse and apply") {
    const auto kv = config::parse("# comment\nseed = 9\nmode=baseline  # trailing\n\nepisodes = 3\n");
    REQUIRE(kv.size() == 3);
    experiment::EpisodeConfig cfg;
    config::RunSettings run;
    config::apply_all(cfg, run, kv);
    CHECK(cfg.seed == 9);
    CHECK(cfg.mode == experiment::Mode::Baseline);
    CHECK(run.episodes == 3);

    CHECK_THROWS_AS(config::parse("seed 9\n"), ConfigError);
    CHECK_THROWS_AS(config::parse("seed=1\nseed=2\n"), ConfigError);
    try {
        config::apply(cfg, "t_maxx", "3");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "t_maxx");
    }
    CHECK_THROWS_AS(config::apply(cfg, "alpha_obs", "abc"), ConfigError);
    CHECK_THROWS_AS(config::apply(cfg, "objective_mode", "max"), ConfigError);
}

TEST_CASE("config snapshot round trip") {
    experiment::EpisodeConfig cfg;
    config::RunSettings run;
    config::apply_all(cfg, run, {{"seed", "12"}, {"alpha_indep", "0.9"}, {"prune_list", "indeps"}, {"jobs", "3"}});
    const auto snap = config::snapshot(cfg, run);
    experiment::EpisodeConfig back;
    config::RunSettings run2;
    config::apply_all(back, run2, snap);
    CHECK(config::snapshot(back, run2) == snap);
    for (const auto& [k, v] : snap)
        CHECK(std::find(config::known_keys().begin(), config::known_keys().end(), k) != config::known_keys().end());
}

TEST_CASE("series csv round trip") {
    std::mt19937_64 rng(1);
    const Series s = gen::series(rng, 30, 3, 0.2);
    CHECK(io::parse_series_csv(io::series_csv(s)) == s);

    const Series plain = io::parse_series_csv("t,x0,x1\n0,1.5,2\n1,-3,0.25\n");
    CHECK(plain.rows() == 2);
    CHECK_FALSE(plain.any_interventional());
    const Series zeros = io::parse_series_csv("t,x0,x1,do0,do1\n0,1.5,2,0,0\n1,-3,0.25,0,0\n");
    CHECK(zeros == plain);
    CHECK_THROWS_AS(io::parse_series_csv("t,x0,x1\n0,1\n"), FormatError);
    CHECK_THROWS_AS(io::parse_series_csv("t,x0\n0,abc\n"), FormatError);
}

TEST_CASE("constraints csv round trip") {
    idisc::ConstraintList c;
    c.deps.push_back({1, 0, 0, 0.001});
    c.indeps.push_back({2, 1, 1, 0.93});
    const std::string text = io::constraints_csv(c);
    CHECK(text.rfind("kind,j,i,tau,p\n", 0) == 0);
    CHECK(io::parse_constraints_csv(text) == c);
    CHECK(io::parse_constraints_csv("kind,j,i,tau,p\n").empty());
    CHECK_THROWS_AS(io::parse_constraints_csv("kind,j,i,tau,p\nmaybe,1,0,0,0.5\n"), FormatError);
}

TEST_CASE("episode csv layout") {
    experiment::EpisodeResult r;
    experiment::StepRecord a;
    a.t = 0;
    a.y_actual = 1.0;
    a.y_oracle = 1.5;
    a.regret_increment = 0.5;
    experiment::StepRecord b = a;
    b.t = 1;
    b.acted = true;
    b.variable = 2;
    b.value = -1.25;
    r.records = {a, b};
    const std::string csv = io::episode_csv(r);
    CHECK(csv ==
          "t,acted,variable,value,was_alternative,eps,y_actual,y_oracle,regret_increment\n"
          "0,0,,,0,0,1,1.5,0.5\n"
          "1,1,2,-1.25,0,0,1,1.5,0.5\n");
}

TEST_CASE("sha256") {
    CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
