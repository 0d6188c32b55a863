#include "ccl/odiscovery.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace ccl::odisc {

using graph::Edgemark;
using graph::LaggedNode;
using graph::LinkKey;
using graph::TsPag;

namespace {

LinkKey pair_key(LaggedNode a, LaggedNode b) {
    if (a.lag == b.lag) return graph::canonical_key(a.var, 0, b.var);
    if (a.lag > b.lag) return {a.var, a.lag - b.lag, b.var};
    return {b.var, b.lag - a.lag, a.var};
}

void note(std::vector<std::string>* log, std::string msg) {
    if (log) log->push_back(std::move(msg));
}

std::string describe(int j, int i, int tau) {
    return "(j=" + std::to_string(j) + ", i=" + std::to_string(i) + ", tau=" + std::to_string(tau) + ")";
}

// Set and freeze one mark unless a different frozen mark is already there.
bool write_frozen(TsPag& g, LaggedNode at, LaggedNode other, Edgemark m) {
    if (g.fixed_at(at, other) && g.mark_at(at, other) != m) return false;
    g.set_mark_at(at, other, m);
    g.freeze_at(at, other);
    return true;
}

}  // namespace

std::optional<double> effect_size(const SepsetStore& store, int i, int j, int tau) {
    auto it = store.min_stat.find(graph::canonical_key(i, tau, j));
    if (it == store.min_stat.end()) return std::nullopt;
    return it->second;
}

TsPag inject_constraints(TsPag pag, const idisc::ConstraintList& constraints, std::vector<std::string>* log) {
    struct Entry {
        std::optional<double> dep;
        std::optional<double> indep;
    };
    // Keyed (i, tau, j): the cause end comes first.
    std::map<std::tuple<int, int, int>, Entry> merged;
    for (const auto& c : constraints.deps) {
        auto& e = merged[{c.i, c.tau, c.j}].dep;
        e = e ? std::min(*e, c.p) : c.p;
    }
    for (const auto& c : constraints.indeps) {
        auto& e = merged[{c.i, c.tau, c.j}].indep;
        e = e ? std::max(*e, c.p) : c.p;
    }
    for (const auto& [key, e] : merged) {
        const auto [i, tau, j] = key;
        if (i < 0 || j < 0 || i >= pag.n_vars() || j >= pag.n_vars() || tau < 0 || tau > pag.tau_max() ||
            (i == j && tau == 0)) {
            note(log, "ignored out-of-range constraint " + describe(j, i, tau));
            continue;
        }
        bool dep = e.dep.has_value();
        bool indep = e.indep.has_value();
        if (dep && indep) {
            const bool dep_wins = *e.dep < *e.indep;
            note(log, "conflicting dep/indep " + describe(j, i, tau) + ": kept " + (dep_wins ? "dep" : "indep"));
            dep = dep_wins;
            indep = !dep_wins;
        }
        if (!pag.has(i, tau, j)) continue;
        const LaggedNode ci{i, tau};
        const LaggedNode ej{j, 0};
        if (dep) {
            const bool ok = write_frozen(pag, ci, ej, Edgemark::Tail) & write_frozen(pag, ej, ci, Edgemark::Arrow);
            if (!ok) note(log, "dep " + describe(j, i, tau) + " clashes with a frozen mark");
        } else if (indep) {
            if (!write_frozen(pag, ci, ej, Edgemark::Arrow))
                note(log, "indep " + describe(j, i, tau) + " clashes with a frozen mark");
        }
    }
    return pag;
}

// ---------------------------------------------------------------------------

MomentTable::MomentTable(const Series& data, int tau_max, bool rowwise_exclusion)
    : n_(static_cast<int>(data.cols())), tau_max_(tau_max) {
    if (tau_max < 0) throw std::invalid_argument("MomentTable: tau_max must be >= 0");
    if (data.do_mask.size() != data.rows() * data.cols())
        throw std::invalid_argument("MomentTable: mask shape mismatch");
    const auto n = data.cols();
    const auto p = static_cast<std::size_t>(tau_max);
    d_ = n * (p + 1);
    if (d_ > 64) throw std::invalid_argument("MomentTable: at most 64 lagged columns are supported");
    if (data.rows() <= p) return;

    const std::size_t rows = data.rows() - p;
    std::vector<double> mean(d_, 0.0);
    for (std::size_t t = p; t < data.rows(); ++t)
        for (std::size_t l = 0; l <= p; ++l)
            for (std::size_t v = 0; v < n; ++v) mean[l * n + v] += data.values(t - l, v);
    for (double& m : mean) m /= static_cast<double>(rows);

    std::map<std::uint64_t, std::size_t> index;
    std::vector<double> row(d_);
    for (std::size_t t = p; t < data.rows(); ++t) {
        std::uint64_t pattern = 0;
        for (std::size_t l = 0; l <= p; ++l) {
            for (std::size_t v = 0; v < n; ++v) {
                const std::size_t c = l * n + v;
                row[c] = data.values(t - l, v) - mean[c];
                if (data.is_do(t - l, v)) pattern |= std::uint64_t{1} << c;
            }
        }
        if (rowwise_exclusion && pattern != 0) continue;
        auto [it, fresh] = index.try_emplace(pattern, groups_.size());
        if (fresh) groups_.push_back({pattern, 0.0, std::vector<double>(d_, 0.0), std::vector<double>(d_ * d_, 0.0)});
        Group& g = groups_[it->second];
        g.count += 1.0;
        for (std::size_t a = 0; a < d_; ++a) {
            g.sum[a] += row[a];
            double* cr = g.cross.data() + a * d_;
            for (std::size_t b = a; b < d_; ++b) cr[b] += row[a] * row[b];
        }
    }
}

std::optional<stats::TestResult> MomentTable::test(std::size_t x, std::size_t y,
                                                   const std::vector<std::size_t>& S) const {
    std::vector<std::size_t> cols{x, y};
    cols.insert(cols.end(), S.begin(), S.end());
    std::uint64_t mask = 0;
    for (std::size_t c : cols) {
        if (c >= d_) throw std::out_of_range("MomentTable::test: column out of range");
        mask |= std::uint64_t{1} << c;
    }
    const std::size_t k = cols.size();
    double count = 0.0;
    std::vector<double> s(k, 0.0);
    std::vector<double> q(k * k, 0.0);
    for (const Group& g : groups_) {
        if (g.pattern & mask) continue;
        count += g.count;
        for (std::size_t a = 0; a < k; ++a) {
            s[a] += g.sum[cols[a]];
            for (std::size_t b = a; b < k; ++b) {
                const std::size_t lo = std::min(cols[a], cols[b]);
                const std::size_t hi = std::max(cols[a], cols[b]);
                q[a * k + b] += g.cross[lo * d_ + hi];
            }
        }
    }
    const auto n = static_cast<std::size_t>(count);
    if (n < 3 || n < S.size() + 3) return std::nullopt;
    stats::Moments m{k, std::vector<double>(k * k)};
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a; b < k; ++b) {
            const double v = q[a * k + b] / count - (s[a] / count) * (s[b] / count);
            m.cov[a * k + b] = v;
            m.cov[b * k + a] = v;
        }
    }
    return stats::partial_corr_from_moments(m, n);
}

// ---------------------------------------------------------------------------

namespace {

struct Directed {
    int src;
    int tau;
    int dst;
};

class Runner {
public:
    Runner(const MomentTable& table, const DiscoveryConfig& cfg) : table_(table), cfg_(cfg) {}

    std::size_t tests = 0;

    void remove_phase(TsPag& g, SepsetStore& store, const std::map<LinkKey, double>& prior) {
        for (int c = 0; c <= cfg_.p_max; ++c) {
            const TsPag snap = g;
            const auto heur = store.min_stat;
            bool any = false;
            for (const graph::Link& l : snap.links()) {
                const LaggedNode X{l.from, l.lag};
                const LaggedNode Y{l.to, 0};
                const auto cands = candidates(snap, X, Y, heur, prior);
                if (cands.size() < static_cast<std::size_t>(c)) continue;
                any = true;
                test_link(g, store, X, Y, cands, static_cast<std::size_t>(c));
            }
            if (!any) break;
        }
    }

private:
    static bool known_non_ancestor(const TsPag& g, LaggedNode z, LaggedNode e) {
        if (z.lag < e.lag) return true;
        return g.adjacent(z, e) && g.mark_at(z, e) == Edgemark::Arrow;
    }

    static bool known_parent(const TsPag& g, LaggedNode z, LaggedNode e) {
        return g.adjacent(z, e) && g.mark_at(z, e) == Edgemark::Tail && g.mark_at(e, z) == Edgemark::Arrow;
    }

    static double score(LaggedNode z, LaggedNode e, const TsPag& g, const std::map<LinkKey, double>& heur,
                        const std::map<LinkKey, double>& prior) {
        if (!g.adjacent(z, e)) return 0.0;
        const LinkKey k = pair_key(z, e);
        if (auto it = heur.find(k); it != heur.end()) return std::abs(it->second);
        if (auto it = prior.find(k); it != prior.end()) return std::abs(it->second);
        return 0.0;
    }

    std::vector<LaggedNode> candidates(const TsPag& g, LaggedNode X, LaggedNode Y,
                                       const std::map<LinkKey, double>& heur,
                                       const std::map<LinkKey, double>& prior) const {
        struct Cand {
            LaggedNode node;
            bool parent;
            double score;
        };
        std::vector<Cand> out;
        for (int lag = 0; lag <= g.tau_max(); ++lag) {
            for (int v = 0; v < g.n_vars(); ++v) {
                const LaggedNode z{v, lag};
                if (z == X || z == Y) continue;
                if (!g.adjacent(z, X) && !g.adjacent(z, Y)) continue;
                if (known_non_ancestor(g, z, X) && known_non_ancestor(g, z, Y)) continue;
                out.push_back({z, known_parent(g, z, X) || known_parent(g, z, Y),
                               std::max(score(z, X, g, heur, prior), score(z, Y, g, heur, prior))});
            }
        }
        std::stable_sort(out.begin(), out.end(), [](const Cand& a, const Cand& b) {
            if (a.parent != b.parent) return a.parent;
            if (a.score != b.score) return a.score > b.score;
            return std::tie(a.node.var, a.node.lag) < std::tie(b.node.var, b.node.lag);
        });
        std::vector<LaggedNode> nodes;
        nodes.reserve(out.size());
        for (const Cand& c : out) nodes.push_back(c.node);
        return nodes;
    }

    void test_link(TsPag& g, SepsetStore& store, LaggedNode X, LaggedNode Y, const std::vector<LaggedNode>& cands,
                   std::size_t c) {
        const LinkKey key = pair_key(X, Y);
        const std::size_t cx = table_.column(X);
        const std::size_t cy = table_.column(Y);
        std::vector<std::size_t> idx(c);
        for (std::size_t a = 0; a < c; ++a) idx[a] = a;
        std::vector<std::size_t> S(c);
        for (;;) {
            for (std::size_t a = 0; a < c; ++a) S[a] = table_.column(cands[idx[a]]);
            if (auto r = table_.test(cx, cy, S)) {
                ++tests;
                auto [it, fresh] = store.min_stat.try_emplace(key, r->statistic);
                if (!fresh && std::abs(r->statistic) < std::abs(it->second)) it->second = r->statistic;
                if (r->p_value > cfg_.alpha_obs) {
                    std::vector<LaggedNode> sep;
                    for (std::size_t a = 0; a < c; ++a) sep.push_back(cands[idx[a]]);
                    std::sort(sep.begin(), sep.end());
                    store.sepsets[key] = std::move(sep);
                    g.remove(X.var, X.lag, Y.var);
                    return;
                }
            }
            // Next combination in lexicographic order of candidate positions.
            std::size_t a = c;
            while (a > 0 && idx[a - 1] == cands.size() - c + (a - 1)) --a;
            if (a == 0) return;
            ++idx[a - 1];
            for (std::size_t b = a; b < c; ++b) idx[b] = idx[b - 1] + 1;
        }
    }

    const MomentTable& table_;
    const DiscoveryConfig& cfg_;
};

std::vector<Directed> harvest(const TsPag& g) {
    std::vector<Directed> out;
    for (const graph::Link& l : g.links()) {
        if (l.mark_from == Edgemark::Tail && l.mark_to == Edgemark::Arrow) out.push_back({l.from, l.lag, l.to});
        if (l.lag == 0 && l.mark_to == Edgemark::Tail && l.mark_from == Edgemark::Arrow)
            out.push_back({l.to, 0, l.from});
    }
    return out;
}

TsPag seeded(const DiscoveryConfig& cfg, int n, const idisc::ConstraintList& constraints,
             const std::vector<Directed>& ancestors) {
    TsPag g = inject_constraints(graph::init_complete_pag(n, cfg.tau_max), constraints);
    for (const Directed& d : ancestors) {
        if (!g.has(d.src, d.tau, d.dst)) continue;
        const LaggedNode s{d.src, d.tau};
        const LaggedNode t{d.dst, 0};
        if (g.fixed_at(s, t) || g.fixed_at(t, s)) continue;
        g.set_mark_at(s, t, Edgemark::Tail);
        g.set_mark_at(t, s, Edgemark::Arrow);
    }
    return g;
}

}  // namespace

DiscoveryResult discover(const Series& data, const idisc::ConstraintList& constraints, const DiscoveryConfig& cfg) {
    if (!(cfg.alpha_obs > 0.0 && cfg.alpha_obs < 1.0)) throw std::invalid_argument("discover: alpha_obs must be in (0, 1)");
    if (cfg.k < 0 || cfg.p_max < 0 || cfg.tau_max < 0) throw std::invalid_argument("discover: negative parameter");
    if (data.cols() == 0) throw std::invalid_argument("discover: no variables");
    const int n = static_cast<int>(data.cols());
    const MomentTable table(data, cfg.tau_max, cfg.rowwise_exclusion);
    Runner run(table, cfg);

    std::vector<Directed> ancestors;
    std::map<LinkKey, double> prior;
    for (int round = 0; round < cfg.k; ++round) {
        TsPag g = seeded(cfg, n, constraints, ancestors);
        SepsetStore store;
        run.remove_phase(g, store, prior);
        g = graph::orient_unshielded_colliders(g, store.sepsets);
        ancestors = harvest(g);
        prior = std::move(store.min_stat);
    }

    DiscoveryResult res;
    res.pag = seeded(cfg, n, constraints, ancestors);
    run.remove_phase(res.pag, res.store, prior);
    res.pag = graph::orient_unshielded_colliders(res.pag, res.store.sepsets);
    for (const graph::Link& l : res.pag.links())
        res.pag.set_effect(l.from, l.lag, l.to, effect_size(res.store, l.from, l.to, l.lag));
    res.tests = run.tests;
    return res;
}

}  // namespace ccl::odisc
