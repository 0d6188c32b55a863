#pragma once
// Independent reference implementations used only by tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "ccl/graph.hpp"

namespace oracle {

// ---------------------------------------------------------------- d-separation

struct Edge {
    int from;
    int to;
};

/// Unrolled DAG as plain node ids (slice * n + var).
struct Unrolled {
    int nodes = 0;
    std::vector<Edge> edges;
};

inline Unrolled unroll(int n, const std::vector<ccl::graph::DirectedLink>& links, int window) {
    Unrolled u;
    u.nodes = n * window;
    for (int s = 0; s < window; ++s)
        for (const auto& l : links)
            if (s - l.lag >= 0) u.edges.push_back({(s - l.lag) * n + l.from, s * n + l.to});
    return u;
}

inline std::vector<std::vector<int>> children(const Unrolled& u) {
    std::vector<std::vector<int>> ch(static_cast<std::size_t>(u.nodes));
    for (const Edge& e : u.edges) ch[static_cast<std::size_t>(e.from)].push_back(e.to);
    return ch;
}

inline bool has_descendant_in(const std::vector<std::vector<int>>& ch, int v, const std::set<int>& S) {
    std::vector<int> stack{v};
    std::set<int> seen;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        if (!seen.insert(u).second) continue;
        if (S.count(u)) return true;
        for (int c : ch[static_cast<std::size_t>(u)]) stack.push_back(c);
    }
    return false;
}

/// True iff no simple path between x and y is open given S.
inline bool dsep_by_paths(const Unrolled& u, int x, int y, const std::set<int>& S) {
    const auto ch = children(u);
    std::vector<std::vector<int>> nbr(static_cast<std::size_t>(u.nodes));
    std::set<std::pair<int, int>> directed;
    for (const Edge& e : u.edges) {
        nbr[static_cast<std::size_t>(e.from)].push_back(e.to);
        nbr[static_cast<std::size_t>(e.to)].push_back(e.from);
        directed.insert({e.from, e.to});
    }
    std::vector<int> path{x};
    std::vector<char> on(static_cast<std::size_t>(u.nodes), 0);
    on[static_cast<std::size_t>(x)] = 1;
    bool open = false;
    std::function<void(int)> walk = [&](int v) {
        if (open) return;
        if (v == y) {
            bool ok = true;
            for (std::size_t k = 1; k + 1 < path.size() && ok; ++k) {
                const int a = path[k - 1], b = path[k], c = path[k + 1];
                const bool collider = directed.count({a, b}) && directed.count({c, b});
                if (collider)
                    ok = has_descendant_in(ch, b, S);
                else
                    ok = !S.count(b);
            }
            open = ok;
            return;
        }
        for (int w : nbr[static_cast<std::size_t>(v)]) {
            if (on[static_cast<std::size_t>(w)]) continue;
            on[static_cast<std::size_t>(w)] = 1;
            path.push_back(w);
            walk(w);
            path.pop_back();
            on[static_cast<std::size_t>(w)] = 0;
        }
    };
    walk(x);
    return !open;
}

// ------------------------------------------------------------ MAG completions

struct MarkPos {
    ccl::graph::LinkKey key;
    bool at_from;
};

inline bool acyclic(int n, const std::vector<std::pair<int, int>>& arcs) {
    std::vector<int> indeg(static_cast<std::size_t>(n), 0);
    for (auto [a, b] : arcs) ++indeg[static_cast<std::size_t>(b)];
    std::vector<int> ready;
    for (int v = 0; v < n; ++v)
        if (!indeg[static_cast<std::size_t>(v)]) ready.push_back(v);
    int seen = 0;
    while (!ready.empty()) {
        const int v = ready.back();
        ready.pop_back();
        ++seen;
        for (auto [a, b] : arcs)
            if (a == v && --indeg[static_cast<std::size_t>(b)] == 0) ready.push_back(b);
    }
    return seen == n;
}

/// Every assignment of the circle marks to {Tail, Arrow} whose contemporaneous
/// directed part is acyclic and that has no contemporaneous tail-tail link,
/// with lagged links keeping an arrow at the later end.
inline std::vector<std::vector<ccl::graph::Link>> filtered_completions(const ccl::graph::TsPag& pag) {
    using ccl::graph::Edgemark;
    const auto links = pag.links();
    std::vector<MarkPos> circles;
    for (const auto& l : links) {
        if (l.mark_from == Edgemark::Circle) circles.push_back({l.key(), true});
        if (l.mark_to == Edgemark::Circle) circles.push_back({l.key(), false});
    }
    std::vector<std::vector<ccl::graph::Link>> out;
    const std::size_t c = circles.size();
    for (std::size_t bits = 0; bits < (std::size_t{1} << c); ++bits) {
        auto g = links;
        std::size_t k = 0;
        for (auto& l : g) {
            if (l.mark_from == Edgemark::Circle) l.mark_from = (bits >> k++) & 1 ? Edgemark::Arrow : Edgemark::Tail;
            if (l.mark_to == Edgemark::Circle) l.mark_to = (bits >> k++) & 1 ? Edgemark::Arrow : Edgemark::Tail;
        }
        bool ok = true;
        std::vector<std::pair<int, int>> arcs;
        for (const auto& l : g) {
            if (l.lag > 0) {
                if (l.mark_to != Edgemark::Arrow) ok = false;
                continue;
            }
            if (l.mark_from == Edgemark::Tail && l.mark_to == Edgemark::Tail) ok = false;
            if (l.mark_from == Edgemark::Tail && l.mark_to == Edgemark::Arrow) arcs.push_back({l.from, l.to});
            if (l.mark_to == Edgemark::Tail && l.mark_from == Edgemark::Arrow) arcs.push_back({l.to, l.from});
        }
        if (ok && acyclic(pag.n_vars(), arcs)) out.push_back(std::move(g));
    }
    return out;
}

// -------------------------------------------------------- partial correlation

/// Sample covariance (1/n) of the given columns.
inline std::vector<std::vector<double>> covariance(const std::vector<std::vector<double>>& cols) {
    const std::size_t d = cols.size(), n = cols[0].size();
    std::vector<double> mean(d, 0.0);
    for (std::size_t a = 0; a < d; ++a) {
        for (double v : cols[a]) mean[a] += v;
        mean[a] /= static_cast<double>(n);
    }
    std::vector<std::vector<double>> c(d, std::vector<double>(d, 0.0));
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) {
            long double s = 0.0;
            for (std::size_t t = 0; t < n; ++t) s += (cols[a][t] - mean[a]) * (cols[b][t] - mean[b]);
            c[a][b] = static_cast<double>(s / n);
        }
    return c;
}

/// rho_{a b . S} via the first-order recursion, S given as indices into cov.
inline double partial_corr(const std::vector<std::vector<double>>& cov, int a, int b, std::vector<int> S) {
    if (S.empty()) return cov[a][b] / std::sqrt(cov[a][a] * cov[b][b]);
    const int z = S.back();
    S.pop_back();
    const double rab = partial_corr(cov, a, b, S);
    const double raz = partial_corr(cov, a, z, S);
    const double rbz = partial_corr(cov, b, z, S);
    return (rab - raz * rbz) / std::sqrt((1.0 - raz * raz) * (1.0 - rbz * rbz));
}

// ------------------------------------------------------------------ normal

inline double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double quantile_by_bisection(double q) {
    double lo = -40.0, hi = 40.0;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (phi(mid) < q ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Kolmogorov-Smirnov distance of a sample to U(0, 1).
inline double ks_uniform(std::vector<double> p) {
    std::sort(p.begin(), p.end());
    const double n = static_cast<double>(p.size());
    double d = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        d = std::max(d, static_cast<double>(k + 1) / n - p[k]);
        d = std::max(d, p[k] - static_cast<double>(k) / n);
    }
    return d;
}

/// Asymptotic KS critical value at level 0.001.
inline double ks_critical_001(std::size_t n) { return 1.9495 / std::sqrt(static_cast<double>(n)); }

// ------------------------------------------------------------ eigenvalues

/// Largest eigenvalue modulus of a real 2x2 matrix.
inline double spectral_radius_2x2(double a, double b, double c, double d) {
    const double tr = a + d, det = a * d - b * c;
    const double disc = tr * tr / 4.0 - det;
    if (disc >= 0.0) return std::max(std::abs(tr / 2.0 + std::sqrt(disc)), std::abs(tr / 2.0 - std::sqrt(disc)));
    return std::sqrt(det);
}

}  // namespace oracle
