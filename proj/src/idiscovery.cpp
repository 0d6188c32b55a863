#include "ccl/idiscovery.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <tuple>

#include "ccl/stats.hpp"

namespace ccl::idisc {

namespace {

struct Triple {
    int i;
    int j;
    int tau;
};

std::vector<Triple> grid(int n, int tau_max) {
    std::vector<Triple> out;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            for (int tau = 0; tau <= tau_max; ++tau)
                if (!(i == j && tau == 0)) out.push_back({i, j, tau});
    return out;
}

// p-value of one (i, j, tau) test, or nothing when the pair is unusable.
std::optional<double> test_triple(const Series& data, const Triple& k) {
    const std::size_t T = data.rows();
    const auto i = static_cast<std::size_t>(k.i);
    const auto j = static_cast<std::size_t>(k.j);
    const auto tau = static_cast<std::size_t>(k.tau);
    std::vector<double> x, y;
    for (std::size_t t = tau; t < T; ++t) {
        if (data.is_do(t - tau, i) && !data.is_do(t, j)) {
            x.push_back(data.values(t - tau, i));
            y.push_back(data.values(t, j));
        }
    }
    if (x.size() < kMinUsableSamples) return std::nullopt;
    const stats::TestResult r = stats::pearson_test(x, y);
    // A constant column, or a Fisher z without degrees of freedom, carries no
    // evidence either way.
    if (r.degenerate || x.size() <= 3) return std::nullopt;
    return r.p_value;
}

void check(const Series& data, const InterventionalConfig& cfg) {
    if (cfg.tau_max < 0) throw std::invalid_argument("discover_interventional: tau_max must be >= 0");
    if (!(cfg.alpha_dep < cfg.alpha_indep))
        throw std::invalid_argument("discover_interventional: alpha_dep must be < alpha_indep");
    if (data.do_mask.size() != data.rows() * data.cols())
        throw std::invalid_argument("discover_interventional: mask shape mismatch");
}

ConstraintList bin(const std::vector<Triple>& keys, const std::vector<std::optional<double>>& ps,
                   const InterventionalConfig& cfg) {
    ConstraintList out;
    for (std::size_t k = 0; k < keys.size(); ++k) {
        if (!ps[k]) continue;
        const double p = *ps[k];
        const Constraint c{keys[k].j, keys[k].i, keys[k].tau, p};
        if (p <= cfg.alpha_dep)
            out.deps.push_back(c);
        else if (p >= cfg.alpha_indep)
            out.indeps.push_back(c);
    }
    prune_cycles(cfg.prune == PruneList::Deps ? out.deps : out.indeps);
    auto order = [](const Constraint& a, const Constraint& b) {
        return std::tie(a.j, a.i, a.tau) < std::tie(b.j, b.i, b.tau);
    };
    std::sort(out.deps.begin(), out.deps.end(), order);
    std::sort(out.indeps.begin(), out.indeps.end(), order);
    return out;
}

// Tarjan-free SCC membership by mutual reachability; graphs here are tiny.
std::vector<std::vector<char>> reachability(int n, const std::vector<Constraint>& list) {
    const auto un = static_cast<std::size_t>(n);
    std::vector<std::vector<char>> r(un, std::vector<char>(un, 0));
    for (const Constraint& c : list)
        if (c.tau == 0) r[static_cast<std::size_t>(c.i)][static_cast<std::size_t>(c.j)] = 1;
    for (std::size_t m = 0; m < un; ++m)
        for (std::size_t a = 0; a < un; ++a)
            if (r[a][m])
                for (std::size_t b = 0; b < un; ++b)
                    if (r[m][b]) r[a][b] = 1;
    return r;
}

int var_count(const std::vector<Constraint>& list) {
    int n = 0;
    for (const Constraint& c : list) n = std::max({n, c.i + 1, c.j + 1});
    return n;
}

}  // namespace

bool contemporaneous_acyclic(const std::vector<Constraint>& list) {
    const int n = var_count(list);
    const auto r = reachability(n, list);
    for (std::size_t v = 0; v < r.size(); ++v)
        if (r[v][v]) return false;
    return true;
}

void prune_cycles(std::vector<Constraint>& list) {
    const int n = var_count(list);
    for (;;) {
        const auto r = reachability(n, list);
        std::optional<std::size_t> worst;
        for (std::size_t k = 0; k < list.size(); ++k) {
            const Constraint& c = list[k];
            if (c.tau != 0) continue;
            // The edge i -> j lies on a cycle iff j reaches back to i.
            if (!r[static_cast<std::size_t>(c.j)][static_cast<std::size_t>(c.i)]) continue;
            if (!worst) {
                worst = k;
                continue;
            }
            const Constraint& w = list[*worst];
            if (c.p > w.p || (c.p == w.p && std::tie(c.j, c.i) > std::tie(w.j, w.i))) worst = k;
        }
        if (!worst) return;
        list.erase(list.begin() + static_cast<std::ptrdiff_t>(*worst));
    }
}

ConstraintList discover_interventional_serial(const Series& data, const InterventionalConfig& cfg) {
    check(data, cfg);
    const auto keys = grid(static_cast<int>(data.cols()), cfg.tau_max);
    std::vector<std::optional<double>> ps(keys.size());
    if (!data.any_interventional()) return {};
    for (std::size_t k = 0; k < keys.size(); ++k) ps[k] = test_triple(data, keys[k]);
    return bin(keys, ps, cfg);
}

ConstraintList discover_interventional(const Series& data, const InterventionalConfig& cfg) {
    check(data, cfg);
    const auto keys = grid(static_cast<int>(data.cols()), cfg.tau_max);
    std::vector<std::optional<double>> ps(keys.size());
    if (!data.any_interventional()) return {};
    const auto nk = static_cast<std::ptrdiff_t>(keys.size());
#pragma omp parallel for schedule(static) if (nk > 16)
    for (std::ptrdiff_t k = 0; k < nk; ++k)
        ps[static_cast<std::size_t>(k)] = test_triple(data, keys[static_cast<std::size_t>(k)]);
    return bin(keys, ps, cfg);
}

}  // namespace ccl::idisc
