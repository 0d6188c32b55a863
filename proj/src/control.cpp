#include "ccl/control.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>

#include "ccl/error.hpp"
#include "ccl/stats.hpp"

namespace ccl::control {

using graph::Edgemark;

InterventionMenu build_menu(const Series& data, int target) {
    if (data.rows() == 0) throw std::invalid_argument("build_menu: empty data");
    InterventionMenu menu;
    for (std::size_t v = 0; v < data.cols(); ++v) {
        if (static_cast<int>(v) == target) continue;
        const auto col = data.values.column(v);
        const stats::GaussianFit fit = stats::fit_gaussian(col);
        MenuEntry e;
        e.variable = static_cast<int>(v);
        if (fit.sigma == 0.0) {
            e.values = {fit.mu};
        } else {
            e.values = {stats::gaussian_percentile(fit, 0.05), stats::gaussian_percentile(fit, 0.95)};
        }
        e.alternative = stats::gaussian_percentile(fit, 0.5);
        menu.entries.push_back(std::move(e));
    }
    return menu;
}

double alternative_value(const Series& data, int variable) {
    if (data.rows() == 0) throw std::invalid_argument("alternative_value: empty column");
    const auto col = data.values.column(static_cast<std::size_t>(variable));
    return stats::gaussian_percentile(stats::fit_gaussian(col), 0.5);
}

scm::Scm reconstruct_scm(const graph::Mag& mag, int target) {
    const graph::TsPag& g = mag.graph();
    scm::Scm s;
    s.n_total = g.n_vars();
    s.tau_max = g.tau_max();
    s.auto_coeff.assign(static_cast<std::size_t>(s.n_total), 0.0);
    s.cross.assign(static_cast<std::size_t>(s.n_total), {});
    s.noise_std.assign(static_cast<std::size_t>(s.n_total), 0.0);
    for (int v = 0; v < s.n_total; ++v) s.observed_idx.push_back(v);
    s.target = target;

    for (const graph::Link& l : g.links()) {
        int src = -1, dst = -1;
        if (l.mark_from == Edgemark::Tail && l.mark_to == Edgemark::Arrow) {
            src = l.from;
            dst = l.to;
        } else if (l.lag == 0 && l.mark_from == Edgemark::Arrow && l.mark_to == Edgemark::Tail) {
            src = l.to;
            dst = l.from;
        } else {
            continue;
        }
        if (!l.effect)
            throw std::invalid_argument("reconstruct_scm: directed link " + std::to_string(l.from) + " @ " +
                                        std::to_string(l.lag) + " -> " + std::to_string(l.to) +
                                        " has no effect size");
        if (l.lag == 1 && src == dst)
            s.auto_coeff[static_cast<std::size_t>(dst)] = *l.effect;
        else
            s.cross[static_cast<std::size_t>(dst)].push_back({src, l.lag, *l.effect});
    }
    scm::topological_order(s);
    return s;
}

double simulate_outcome(const scm::Stepper& stepper, int target, const scm::Intervention& act, const Matrix& start,
                        int horizon) {
    if (horizon < 1) throw std::invalid_argument("simulate_outcome: horizon must be >= 1");
    const auto n = static_cast<std::size_t>(stepper.n_vars());
    const auto p = static_cast<std::size_t>(stepper.tau_max());
    if (start.rows() != p || (p > 0 && start.cols() != n))
        throw std::invalid_argument("simulate_outcome: start must have tau_max rows");
    const auto h = static_cast<std::size_t>(horizon);
    Matrix buf(p + h, n);
    for (std::size_t r = 0; r < p; ++r)
        for (std::size_t j = 0; j < n; ++j) buf(r, j) = start(r, j);
    const std::vector<double> zero(n, 0.0);
    const std::optional<scm::Intervention> a = act;
    double sum = 0.0;
    for (std::size_t t = p; t < p + h; ++t) {
        stepper.step(buf, t, a, zero);
        sum += buf(t, static_cast<std::size_t>(target));
    }
    return sum / static_cast<double>(h);
}

double simulate_outcome(const scm::Scm& scm, const scm::Intervention& act, const Matrix& start, int horizon) {
    return simulate_outcome(scm::Stepper(scm), scm.target, act, start, horizon);
}

namespace {

struct Cell {
    std::size_t mag;
    int variable;
    double value;
    double alt;
};

struct Plan {
    graph::MagEnumeration mags;
    std::vector<scm::Stepper> steppers;
    std::vector<Matrix> starts;
    std::vector<Cell> cells;
};

Plan prepare(const graph::TsPag& pag, const InterventionMenu& menu, int target, const Matrix& start,
             const PlanConfig& cfg) {
    if (menu.empty()) throw std::invalid_argument("find_optimal: empty menu");
    for (const MenuEntry& e : menu.entries)
        if (e.variable == target) throw std::invalid_argument("find_optimal: target in menu");
    Plan plan;
    plan.mags = graph::enumerate_mags(pag, cfg.mag_cap);
    if (plan.mags.mags.empty()) throw NoModelError("find_optimal: the PAG admits no MAG");
    for (const graph::Mag& m : plan.mags.mags) plan.steppers.emplace_back(reconstruct_scm(m, target));

    const auto p = static_cast<std::size_t>(pag.tau_max());
    const auto n = static_cast<std::size_t>(pag.n_vars());
    if (start.rows() == 0 && p > 0) {
        Rng rng(cfg.restart_seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int r = 0; r < cfg.restarts; ++r) {
            Matrix s(p, n);
            for (std::size_t a = 0; a < p; ++a)
                for (std::size_t b = 0; b < n; ++b) s(a, b) = normal(rng);
            plan.starts.push_back(std::move(s));
        }
        if (plan.starts.empty()) throw std::invalid_argument("find_optimal: restarts must be >= 1");
    } else {
        plan.starts.push_back(start);
    }

    for (std::size_t m = 0; m < plan.mags.mags.size(); ++m)
        for (const MenuEntry& e : menu.entries)
            for (double v : e.values) plan.cells.push_back({m, e.variable, v, e.alternative});
    return plan;
}

double evaluate(const Plan& plan, const Cell& c, int target, int horizon) {
    double sum = 0.0;
    for (const Matrix& s : plan.starts)
        sum += simulate_outcome(plan.steppers[c.mag], target, {c.variable, c.value}, s, horizon);
    return sum / static_cast<double>(plan.starts.size());
}

Proposal reduce(const Plan& plan, const std::vector<double>& outcomes, ObjectiveMode mode) {
    auto objective = [&](std::size_t k) { return mode == ObjectiveMode::SignedMax ? outcomes[k] : std::abs(outcomes[k]); };
    std::size_t best = 0;
    for (std::size_t k = 1; k < plan.cells.size(); ++k) {
        const double a = objective(k);
        const double b = objective(best);
        const Cell& ck = plan.cells[k];
        const Cell& cb = plan.cells[best];
        if (a > b || (a == b && std::tie(ck.variable, ck.value, ck.mag) < std::tie(cb.variable, cb.value, cb.mag)))
            best = k;
    }
    const Cell& c = plan.cells[best];
    Proposal p;
    p.variable = c.variable;
    p.value_opt = c.value;
    p.value_alt = c.alt;
    p.expected_outcome = outcomes[best];
    p.source_mag = c.mag;
    p.mag_count = plan.mags.mags.size();
    p.truncated = plan.mags.truncated;
    return p;
}

}  // namespace

Proposal find_optimal_serial(const graph::TsPag& pag, const InterventionMenu& menu, int target, const Matrix& start,
                             const PlanConfig& cfg) {
    const Plan plan = prepare(pag, menu, target, start, cfg);
    std::vector<double> outcomes(plan.cells.size());
    for (std::size_t k = 0; k < plan.cells.size(); ++k) outcomes[k] = evaluate(plan, plan.cells[k], target, cfg.horizon);
    return reduce(plan, outcomes, cfg.mode);
}

Proposal find_optimal(const graph::TsPag& pag, const InterventionMenu& menu, int target, const Matrix& start,
                      const PlanConfig& cfg) {
    const Plan plan = prepare(pag, menu, target, start, cfg);
    std::vector<double> outcomes(plan.cells.size());
    const auto nc = static_cast<std::ptrdiff_t>(plan.cells.size());
#pragma omp parallel for schedule(static) if (nc > 64)
    for (std::ptrdiff_t k = 0; k < nc; ++k)
        outcomes[static_cast<std::size_t>(k)] = evaluate(plan, plan.cells[static_cast<std::size_t>(k)], target, cfg.horizon);
    return reduce(plan, outcomes, cfg.mode);
}

double epsilon_at(std::size_t step, double eps0, double decay) {
    if (!(eps0 >= 0.0 && eps0 <= 1.0)) throw std::invalid_argument("epsilon_at: eps0 must be in [0, 1]");
    if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("epsilon_at: decay must be in (0, 1]");
    return eps0 * std::pow(decay, static_cast<double>(step));
}

std::pair<double, bool> select_value(const Proposal& proposal, double eps, Rng& rng) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("select_value: eps must be in [0, 1]");
    const bool alt = std::bernoulli_distribution(eps)(rng);
    return {alt ? proposal.value_alt : proposal.value_opt, alt};
}

}  // namespace ccl::control
