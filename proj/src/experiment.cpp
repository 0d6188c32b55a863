#include "ccl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <stdexcept>

#include "ccl/config.hpp"
#include "ccl/error.hpp"
#include "ccl/stats.hpp"

namespace ccl::experiment {

namespace {

// Independent generator per purpose so that modes sharing a seed share noise.
enum Stream : std::uint32_t { kScmStream = 1, kNoiseStream = 2, kPolicyStream = 3, kRestartStream = 4 };

Rng stream_rng(std::uint64_t seed, std::uint32_t stream, std::uint32_t sub = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream, sub};
    return Rng(seq);
}

Series rows_from(const Series& s, std::size_t first) {
    Series out(s.rows() - first, s.cols());
    for (std::size_t t = first; t < s.rows(); ++t) {
        for (std::size_t j = 0; j < s.cols(); ++j) {
            out.values(t - first, j) = s.values(t, j);
            out.set_do(t - first, j, s.is_do(t, j));
        }
    }
    return out;
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

void EpisodeConfig::validate() const {
    auto fail = [](const char* key, const char* what) { throw ConfigError(key, std::string(key) + ": " + what); };
    if (scm.n_total < 1) fail("n_total", "must be >= 1");
    if (scm.n_observed < 1 || scm.n_observed > scm.n_total) fail("n_observed", "must be in [1, n_total]");
    if (scm.n_links < 1) fail("n_links", "must be >= 1");
    if (!(scm.frac_contemporaneous >= 0.0 && scm.frac_contemporaneous <= 1.0))
        fail("frac_contemporaneous", "must be in [0, 1]");
    if (!(intervention_fraction >= 0.0 && intervention_fraction <= 1.0))
        fail("intervention_fraction", "must be in [0, 1]");
    if (!(eps0 >= 0.0 && eps0 <= 1.0)) fail("eps0", "must be in [0, 1]");
    if (!(decay > 0.0 && decay <= 1.0)) fail("decay", "must be in (0, 1]");
    if (!(discovery.alpha_obs > 0.0 && discovery.alpha_obs < 1.0)) fail("alpha_obs", "must be in (0, 1)");
    if (discovery.tau_max < 1) fail("tau_max", "must be >= 1");
    if (discovery.k < 0) fail("k", "must be >= 0");
    if (discovery.p_max < 0) fail("p_max", "must be >= 0");
    if (!(alpha_dep > 0.0 && alpha_dep < 1.0)) fail("alpha_dep", "must be in (0, 1)");
    if (!(alpha_indep > 0.0 && alpha_indep <= 1.0)) fail("alpha_indep", "must be in (0, 1]");
    if (!(alpha_dep < alpha_indep)) fail("alpha_dep", "must be < alpha_indep");
    if (plan.horizon < 1) fail("horizon", "must be >= 1");
    if (plan.mag_cap < 1) fail("mag_cap", "must be >= 1");
    if (plan.restarts < 1) fail("restarts", "must be >= 1");
    if (discovery_stride < 1) fail("discovery_stride", "must be >= 1");
}

Calibration& Calibration::operator+=(const Calibration& o) {
    dep_true += o.dep_true;
    dep_false += o.dep_false;
    indep_true += o.indep_true;
    indep_false += o.indep_false;
    return *this;
}

double Calibration::dep_precision() const {
    const auto n = dep_true + dep_false;
    return n ? static_cast<double>(dep_true) / static_cast<double>(n) : kNaN;
}

double Calibration::indep_precision() const {
    const auto n = indep_true + indep_false;
    return n ? static_cast<double>(indep_true) / static_cast<double>(n) : kNaN;
}

bool is_action_step(std::size_t t, double fraction) {
    return std::floor(static_cast<double>(t + 1) * fraction) > std::floor(static_cast<double>(t) * fraction);
}

idisc::ConstraintList oracle_constraints(const scm::Scm& scm, int tau_max) {
    const graph::Dag dag = scm::to_dag(scm);
    idisc::ConstraintList out;
    const int n = static_cast<int>(scm.observed_idx.size());
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            for (int tau = 0; tau <= tau_max; ++tau) {
                if (i == j && tau == 0) continue;
                const graph::LaggedNode a{scm.observed_idx[static_cast<std::size_t>(i)], tau};
                const graph::LaggedNode b{scm.observed_idx[static_cast<std::size_t>(j)], 0};
                if (graph::is_ancestor(dag, a, b))
                    out.deps.push_back({j, i, tau, 0.0});
                else
                    out.indeps.push_back({j, i, tau, 1.0});
            }
        }
    }
    return out;
}

OracleAction oracle_action(const scm::Scm& scm, int horizon) {
    const Matrix cov = scm::stationary_covariance(scm);
    const double z = stats::normal_quantile(0.95);
    const scm::Stepper stepper(scm);
    const Matrix zero(static_cast<std::size_t>(scm.tau_max), static_cast<std::size_t>(scm.n_total), 0.0);

    struct Scored {
        int obs;
        int var;
        double value;
        double outcome;
    };
    std::vector<Scored> all;
    for (std::size_t k = 0; k < scm.observed_idx.size(); ++k) {
        const int v = scm.observed_idx[k];
        if (v == scm.target) continue;
        const double sd = std::sqrt(std::max(0.0, cov(static_cast<std::size_t>(v), static_cast<std::size_t>(v))));
        for (double value : {-z * sd, z * sd}) {
            const double o = control::simulate_outcome(stepper, scm.target, {v, value}, zero, horizon);
            all.push_back({static_cast<int>(k), v, value, o});
        }
    }
    OracleAction best;
    if (all.empty()) {
        best.variable = -1;
        best.outcome = kNaN;
        return best;
    }
    const Scored* top = &all.front();
    for (const Scored& s : all)
        if (s.outcome > top->outcome) top = &s;
    best.variable = top->var;
    best.value = top->value;
    best.outcome = top->outcome;
    const double tol = 1e-12 * std::max(1.0, std::abs(top->outcome));
    for (const Scored& s : all) {
        if (top->outcome - s.outcome <= tol &&
            std::find(best.optimal_variables.begin(), best.optimal_variables.end(), s.obs) ==
                best.optimal_variables.end())
            best.optimal_variables.push_back(s.obs);
    }
    std::sort(best.optimal_variables.begin(), best.optimal_variables.end());
    return best;
}

scm::Scm episode_scm(const EpisodeConfig& cfg) {
    Rng scm_rng = stream_rng(cfg.seed, kScmStream);
    return scm::sample_scm(cfg.scm, scm_rng);
}

EpisodeResult run_episode(const EpisodeConfig& cfg) {
    cfg.validate();
    EpisodeResult res;
    res.seed = cfg.seed;

    const scm::Scm truth = episode_scm(cfg);
    const scm::Stepper stepper(truth);
    const int target_obs = truth.observed_target();
    const OracleAction oracle = oracle_action(truth, cfg.plan.horizon);
    res.optimal_variables = oracle.optimal_variables;
    std::optional<scm::Intervention> oracle_act;
    if (oracle.variable >= 0) oracle_act = scm::Intervention{oracle.variable, oracle.value};

    Rng noise_rng = stream_rng(cfg.seed, kNoiseStream);
    Rng policy_rng = stream_rng(cfg.seed, kPolicyStream);

    // Buffers hold the warm-up start in their first p rows.
    const auto p = static_cast<std::size_t>(truth.tau_max);
    const auto n = static_cast<std::size_t>(truth.n_total);
    const Matrix start = scm::warm_up_start(truth, noise_rng);
    const Series init = scm::generate(truth, std::nullopt, start, cfg.t_init, noise_rng);
    Series actual(p, n);
    for (std::size_t r = 0; r < p; ++r)
        for (std::size_t j = 0; j < n; ++j) actual.values(r, j) = start(r, j);
    const std::vector<std::uint8_t> no_do(n, 0);
    for (std::size_t t = 0; t < init.rows(); ++t) actual.append_row(init.values.row(t), no_do);
    Matrix twin = actual.values;

    const graph::Dag dag = scm::to_dag(truth);
    const idisc::InterventionalConfig icfg{cfg.discovery.tau_max, cfg.alpha_dep, cfg.alpha_indep, cfg.prune};
    odisc::DiscoveryConfig dcfg = cfg.discovery;
    if (cfg.mode == Mode::ObservationalOnly) dcfg.rowwise_exclusion = true;
    idisc::ConstraintList truth_constraints;
    if (cfg.mode == Mode::OracleConstraints) truth_constraints = oracle_constraints(truth, cfg.discovery.tau_max);

    auto score = [&](const idisc::ConstraintList& cl) {
        Calibration c;
        auto anc = [&](const idisc::Constraint& k) {
            return graph::is_ancestor(dag, {truth.observed_idx[static_cast<std::size_t>(k.i)], k.tau},
                                      {truth.observed_idx[static_cast<std::size_t>(k.j)], 0});
        };
        for (const auto& k : cl.deps) ++(anc(k) ? c.dep_true : c.dep_false);
        for (const auto& k : cl.indeps) ++(anc(k) ? c.indep_false : c.indep_true);
        return c;
    };

    std::optional<graph::TsPag> pag;
    std::size_t since_discovery = 0;
    std::vector<double> noise(n, 0.0);
    std::vector<std::uint8_t> mask(n, 0);
    std::size_t acted = 0, acted_optimal = 0;
    double regret_sum = 0.0;

    for (std::size_t t = 0; t < cfg.t_max; ++t) {
        StepRecord rec;
        rec.t = t;
        rec.eps = control::epsilon_at(t, cfg.eps0, cfg.decay);
        rec.acted = is_action_step(t, cfg.intervention_fraction);
        std::optional<scm::Intervention> act;

        if (rec.acted) {
            const Series obs = scm::drop_latents(rows_from(actual, p), truth.observed_idx);
            if (!pag || since_discovery >= cfg.discovery_stride) {
                idisc::ConstraintList constraints;
                if (cfg.mode == Mode::Extended) {
                    constraints = idisc::discover_interventional(obs, icfg);
                    res.final_calibration = score(constraints);
                    res.calibration += res.final_calibration;
                } else if (cfg.mode == Mode::OracleConstraints) {
                    constraints = truth_constraints;
                }
                pag = odisc::discover(obs, constraints, dcfg).pag;
                ++res.discoveries;
                since_discovery = 0;
                if (cfg.trace) res.trace.push_back(graph::to_text(*pag));
            }
            const control::InterventionMenu menu = control::build_menu(obs, target_obs);
            control::PlanConfig plan = cfg.plan;
            Rng restart_rng = stream_rng(cfg.seed, kRestartStream, static_cast<std::uint32_t>(t));
            plan.restart_seed = restart_rng();
            const Matrix recent = obs.rows() >= p ? obs.values.tail(p) : Matrix(0, obs.cols());
            const control::Proposal prop = control::find_optimal(*pag, menu, target_obs, recent, plan);
            const auto [value, alt] = control::select_value(prop, rec.eps, policy_rng);
            rec.variable = prop.variable;
            rec.value = value;
            rec.was_alternative = alt;
            act = scm::Intervention{truth.observed_idx[static_cast<std::size_t>(prop.variable)], value};
            ++acted;
            if (std::binary_search(oracle.optimal_variables.begin(), oracle.optimal_variables.end(), prop.variable))
                ++acted_optimal;
        }
        ++since_discovery;

        scm::draw_noise(truth, noise_rng, noise);
        const std::size_t row = actual.rows();
        std::fill(mask.begin(), mask.end(), 0);
        if (act) mask[static_cast<std::size_t>(act->variable)] = 1;
        actual.append_row(std::vector<double>(n, 0.0), mask);
        stepper.step(actual.values, row, act, noise);
        twin.append_row(std::vector<double>(n, 0.0));
        stepper.step(twin, row, oracle_act, noise);

        rec.y_actual = actual.values(row, static_cast<std::size_t>(truth.target));
        rec.y_oracle = twin(row, static_cast<std::size_t>(truth.target));
        rec.regret_increment = rec.y_oracle - rec.y_actual;
        regret_sum += rec.regret_increment;
        res.records.push_back(rec);
    }
    if (cfg.trace) res.observed = scm::drop_latents(rows_from(actual, p), truth.observed_idx);
    res.avg_regret = cfg.t_max ? regret_sum / static_cast<double>(cfg.t_max) : 0.0;
    res.optimal_fraction = acted ? static_cast<double>(acted_optimal) / static_cast<double>(acted) : kNaN;
    return res;
}

std::vector<std::uint64_t> episode_seeds(std::uint64_t base, std::size_t count) {
    std::vector<std::uint64_t> out(count);
    for (std::size_t l = 0; l < count; ++l) out[l] = base + l;
    return out;
}

std::vector<EpisodeResult> run_batch(const EpisodeConfig& base, std::span<const std::uint64_t> seeds, int jobs) {
    base.validate();
    std::vector<EpisodeResult> out(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    const auto ns = static_cast<std::ptrdiff_t>(seeds.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, jobs)) if (jobs > 1)
    for (std::ptrdiff_t l = 0; l < ns; ++l) {
        const auto k = static_cast<std::size_t>(l);
        try {
            EpisodeConfig cfg = base;
            cfg.seed = seeds[k];
            out[k] = run_episode(cfg);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

Aggregate aggregate(std::span<const EpisodeResult> results) {
    if (results.empty()) throw std::invalid_argument("aggregate: no episodes");
    Aggregate a;
    a.episodes = results.size();
    std::vector<double> r;
    double frac = 0.0;
    std::size_t nfrac = 0;
    for (const EpisodeResult& e : results) {
        r.push_back(e.avg_regret);
        if (!std::isnan(e.optimal_fraction)) {
            frac += e.optimal_fraction;
            ++nfrac;
        }
    }
    double sum = 0.0;
    for (double v : r) sum += v;
    a.mean_avg_regret = sum / static_cast<double>(r.size());
    a.q1 = quantile(r, 0.25);
    a.median = quantile(r, 0.5);
    a.q3 = quantile(r, 0.75);
    a.min = *std::min_element(r.begin(), r.end());
    a.max = *std::max_element(r.begin(), r.end());
    a.mean_optimal_fraction = nfrac ? frac / static_cast<double>(nfrac) : kNaN;
    return a;
}

const std::vector<std::string>& sweep_params() {
    static const std::vector<std::string> names{"intervention_fraction", "t_init", "n_observed", "alpha_obs",
                                                "alpha_indep", "alpha_dep", "mode"};
    return names;
}

std::vector<SweepRow> sweep(const EpisodeConfig& base, const std::string& param, const std::vector<std::string>& values,
                            std::size_t episodes, int jobs) {
    const auto& names = sweep_params();
    if (std::find(names.begin(), names.end(), param) == names.end()) {
        std::string list;
        for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
        throw ConfigError(param, "unknown sweep parameter '" + param + "'; valid: " + list);
    }
    if (values.empty()) throw ConfigError("values", "no sweep values given");
    if (episodes < 1) throw ConfigError("episodes", "episodes must be >= 1");
    const auto seeds = episode_seeds(base.seed, episodes);
    std::vector<SweepRow> rows;
    for (const std::string& v : values) {
        EpisodeConfig cfg = base;
        config::apply(cfg, param, v);
        cfg.validate();
        SweepRow row;
        row.param_value = v;
        row.episodes = run_batch(cfg, seeds, jobs);
        row.agg = aggregate(row.episodes);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string to_string(Mode m) {
    switch (m) {
        case Mode::Baseline: return "baseline";
        case Mode::Extended: return "extended";
        case Mode::OracleConstraints: return "oracle_constraints";
        case Mode::ObservationalOnly: return "observational_only";
    }
    return "extended";
}

Mode parse_mode(const std::string& s) {
    if (s == "baseline") return Mode::Baseline;
    if (s == "extended") return Mode::Extended;
    if (s == "oracle_constraints") return Mode::OracleConstraints;
    if (s == "observational_only") return Mode::ObservationalOnly;
    throw ConfigError("mode", "mode: expected baseline, extended, oracle_constraints or observational_only, got '" +
                                  s + "'");
}

}  // namespace ccl::experiment
