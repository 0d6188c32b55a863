#include "ccl/graph.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace ccl::graph {

LinkKey canonical_key(int src, int tau, int dst) {
    if (tau > 0) return {src, tau, dst};
    return {std::min(src, dst), 0, std::max(src, dst)};
}

TsPag::TsPag(int n_vars, int tau_max) : n_vars_(n_vars), tau_max_(tau_max) {
    if (n_vars < 1) throw std::invalid_argument("TsPag: n_vars must be >= 1");
    if (tau_max < 0) throw std::invalid_argument("TsPag: tau_max must be >= 0");
    const auto n = static_cast<std::size_t>(n_vars);
    slots_.resize(static_cast<std::size_t>(tau_max + 1) * n * n);
}

std::size_t TsPag::index(const LinkKey& k) const {
    const auto n = static_cast<std::size_t>(n_vars_);
    return (static_cast<std::size_t>(k.lag) * n + static_cast<std::size_t>(k.from)) * n +
           static_cast<std::size_t>(k.to);
}

std::optional<TsPag::EndRef> TsPag::locate(LaggedNode at, LaggedNode other) const {
    if (at.var < 0 || at.var >= n_vars_ || other.var < 0 || other.var >= n_vars_) return std::nullopt;
    const int d = at.lag - other.lag;
    if (d > tau_max_ || -d > tau_max_) return std::nullopt;
    if (d > 0) return EndRef{index({at.var, d, other.var}), true};
    if (d < 0) return EndRef{index({other.var, -d, at.var}), false};
    if (at.var == other.var) return std::nullopt;
    const LinkKey k = canonical_key(at.var, 0, other.var);
    return EndRef{index(k), at.var == k.from};
}

TsPag::Slot& TsPag::slot_for(int src, int tau, int dst) {
    auto ref = locate({src, tau}, {dst, 0});
    if (!ref) throw std::out_of_range("TsPag: invalid link address");
    return slots_[ref->slot];
}

const TsPag::Slot& TsPag::slot_for(int src, int tau, int dst) const {
    auto ref = locate({src, tau}, {dst, 0});
    if (!ref) throw std::out_of_range("TsPag: invalid link address");
    return slots_[ref->slot];
}

bool TsPag::has(int src, int tau, int dst) const {
    auto ref = locate({src, tau}, {dst, 0});
    return ref && slots_[ref->slot].present;
}

bool TsPag::adjacent(LaggedNode a, LaggedNode b) const {
    auto ref = locate(a, b);
    return ref && slots_[ref->slot].present;
}

void TsPag::add(int src, int tau, int dst, Edgemark at_src, Edgemark at_dst) {
    auto ref = locate({src, tau}, {dst, 0});
    if (!ref) throw std::out_of_range("TsPag::add: invalid link address");
    Slot& s = slots_[ref->slot];
    s = Slot{};
    s.present = true;
    (ref->at_from ? s.mark_from : s.mark_to) = at_src;
    (ref->at_from ? s.mark_to : s.mark_from) = at_dst;
}

void TsPag::remove(int src, int tau, int dst) { slot_for(src, tau, dst) = Slot{}; }

Edgemark TsPag::mark_at(LaggedNode at, LaggedNode other) const {
    auto ref = locate(at, other);
    if (!ref || !slots_[ref->slot].present) throw std::out_of_range("TsPag::mark_at: no such link");
    const Slot& s = slots_[ref->slot];
    return ref->at_from ? s.mark_from : s.mark_to;
}

void TsPag::set_mark_at(LaggedNode at, LaggedNode other, Edgemark m) {
    auto ref = locate(at, other);
    if (!ref || !slots_[ref->slot].present) throw std::out_of_range("TsPag::set_mark_at: no such link");
    Slot& s = slots_[ref->slot];
    (ref->at_from ? s.mark_from : s.mark_to) = m;
}

bool TsPag::fixed_at(LaggedNode at, LaggedNode other) const {
    auto ref = locate(at, other);
    if (!ref || !slots_[ref->slot].present) return false;
    const Slot& s = slots_[ref->slot];
    return ref->at_from ? s.fixed_from : s.fixed_to;
}

void TsPag::freeze_at(LaggedNode at, LaggedNode other) {
    auto ref = locate(at, other);
    if (!ref || !slots_[ref->slot].present) throw std::out_of_range("TsPag::freeze_at: no such link");
    Slot& s = slots_[ref->slot];
    (ref->at_from ? s.fixed_from : s.fixed_to) = true;
}

std::optional<double> TsPag::effect(int src, int tau, int dst) const {
    const Slot& s = slot_for(src, tau, dst);
    if (!s.present || !s.has_effect) return std::nullopt;
    return s.effect;
}

void TsPag::set_effect(int src, int tau, int dst, std::optional<double> e) {
    Slot& s = slot_for(src, tau, dst);
    if (!s.present) throw std::out_of_range("TsPag::set_effect: no such link");
    s.has_effect = e.has_value();
    s.effect = e.value_or(0.0);
}

std::vector<Link> TsPag::links() const {
    std::vector<Link> out;
    const auto n = static_cast<std::size_t>(n_vars_);
    // Slot order is (lag, from, to); re-sort to (from, lag, to).
    for (int from = 0; from < n_vars_; ++from) {
        for (int lag = 0; lag <= tau_max_; ++lag) {
            for (int to = 0; to < n_vars_; ++to) {
                const Slot& s = slots_[(static_cast<std::size_t>(lag) * n + static_cast<std::size_t>(from)) * n +
                                       static_cast<std::size_t>(to)];
                if (!s.present) continue;
                Link l{from, lag, to, s.mark_from, s.mark_to, std::nullopt};
                if (s.has_effect) l.effect = s.effect;
                out.push_back(l);
            }
        }
    }
    return out;
}

std::size_t TsPag::link_count() const {
    return static_cast<std::size_t>(
        std::count_if(slots_.begin(), slots_.end(), [](const Slot& s) { return s.present; }));
}

std::size_t TsPag::circle_count() const {
    std::size_t c = 0;
    for (const Slot& s : slots_) {
        if (!s.present) continue;
        c += (s.mark_from == Edgemark::Circle) + (s.mark_to == Edgemark::Circle);
    }
    return c;
}

std::vector<std::pair<LinkKey, bool>> TsPag::fixed_marks() const {
    std::vector<std::pair<LinkKey, bool>> out;
    for (const Link& l : links()) {
        const Slot& s = slots_[index(l.key())];
        if (s.fixed_from) out.emplace_back(l.key(), true);
        if (s.fixed_to) out.emplace_back(l.key(), false);
    }
    return out;
}

bool TsPag::operator==(const TsPag& o) const {
    return n_vars_ == o.n_vars_ && tau_max_ == o.tau_max_ && slots_ == o.slots_;
}

TsPag init_complete_pag(int n_vars, int tau_max) {
    TsPag g(n_vars, tau_max);
    for (int i = 0; i < n_vars; ++i) {
        for (int j = i + 1; j < n_vars; ++j) g.add(i, 0, j, Edgemark::Circle, Edgemark::Circle);
    }
    for (int tau = 1; tau <= tau_max; ++tau) {
        for (int i = 0; i < n_vars; ++i) {
            for (int j = 0; j < n_vars; ++j) g.add(i, tau, j, Edgemark::Circle, Edgemark::Arrow);
        }
    }
    return g;
}

namespace {

bool contains(const std::vector<LaggedNode>& set, LaggedNode n) {
    return std::find(set.begin(), set.end(), n) != set.end();
}

// Key of the pair (a, b) with the later node shifted to lag 0.
LinkKey pair_key(LaggedNode a, LaggedNode b) {
    if (a.lag == b.lag) return canonical_key(a.var, 0, b.var);
    if (a.lag > b.lag) return {a.var, a.lag - b.lag, b.var};
    return {b.var, b.lag - a.lag, a.var};
}

}  // namespace

TsPag orient_unshielded_colliders(const TsPag& pag, const SepsetMap& sepsets) {
    TsPag out = pag;
    out.orientation_conflicts = 0;
    const int n = pag.n_vars();
    const int tmax = pag.tau_max();

    // (B, A): put an arrowhead at B on the link A -- B.
    std::set<std::pair<LaggedNode, LaggedNode>> planned;
    std::vector<LaggedNode> nbrs;
    for (int lb = 0; lb <= tmax; ++lb) {
        for (int b = 0; b < n; ++b) {
            const LaggedNode B{b, lb};
            nbrs.clear();
            for (int la = 0; la <= tmax; ++la) {
                for (int a = 0; a < n; ++a) {
                    const LaggedNode A{a, la};
                    if (A != B && pag.adjacent(A, B)) nbrs.push_back(A);
                }
            }
            for (std::size_t x = 0; x < nbrs.size(); ++x) {
                for (std::size_t y = x + 1; y < nbrs.size(); ++y) {
                    const LaggedNode A = nbrs[x];
                    const LaggedNode C = nbrs[y];
                    if (pag.adjacent(A, C)) continue;
                    auto it = sepsets.find(pair_key(A, C));
                    if (it == sepsets.end()) continue;
                    const int shift = std::min(A.lag, C.lag);
                    const LaggedNode Bs{b, lb - shift};
                    if (Bs.lag >= 0 && contains(it->second, Bs)) continue;
                    planned.insert({B, A});
                    planned.insert({B, C});
                }
            }
        }
    }

    // Shifted copies of one triple address the same link end; count each end once.
    std::set<std::pair<LinkKey, bool>> done;
    for (const auto& [B, A] : planned) {
        const LinkKey k = pair_key(A, B);
        const bool b_is_from = (B.lag > A.lag) || (B.lag == A.lag && B.var == k.from);
        if (!done.insert({k, b_is_from}).second) continue;
        const Edgemark cur = out.mark_at(B, A);
        if (cur == Edgemark::Arrow) continue;
        if (cur == Edgemark::Tail || out.fixed_at(B, A)) {
            ++out.orientation_conflicts;
            continue;
        }
        out.set_mark_at(B, A, Edgemark::Arrow);
    }
    return out;
}

namespace {

bool reaches(const std::vector<std::vector<int>>& adj, int from, int target) {
    std::vector<char> seen(adj.size(), 0);
    std::vector<int> stack{from};
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        if (u == target) return true;
        if (seen[static_cast<std::size_t>(u)]) continue;
        seen[static_cast<std::size_t>(u)] = 1;
        for (int v : adj[static_cast<std::size_t>(u)]) stack.push_back(v);
    }
    return false;
}

}  // namespace

bool is_valid_completion(const TsPag& g) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.n_vars()));
    for (const Link& l : g.links()) {
        if (l.mark_from == Edgemark::Circle || l.mark_to == Edgemark::Circle) return false;
        if (l.lag > 0) {
            if (l.mark_to != Edgemark::Arrow) return false;
            continue;
        }
        if (l.mark_from == Edgemark::Tail && l.mark_to == Edgemark::Tail) return false;
        if (l.mark_from == Edgemark::Tail) adj[static_cast<std::size_t>(l.from)].push_back(l.to);
        if (l.mark_to == Edgemark::Tail) adj[static_cast<std::size_t>(l.to)].push_back(l.from);
    }
    // Kahn's algorithm.
    const std::size_t n = adj.size();
    std::vector<int> indeg(n, 0);
    for (const auto& out : adj)
        for (int v : out) ++indeg[static_cast<std::size_t>(v)];
    std::vector<int> queue;
    for (std::size_t v = 0; v < n; ++v)
        if (indeg[v] == 0) queue.push_back(static_cast<int>(v));
    std::size_t visited = 0;
    while (!queue.empty()) {
        const int u = queue.back();
        queue.pop_back();
        ++visited;
        for (int v : adj[static_cast<std::size_t>(u)])
            if (--indeg[static_cast<std::size_t>(v)] == 0) queue.push_back(v);
    }
    return visited == n;
}

std::optional<Mag> Mag::from_pag(TsPag g) {
    if (!is_valid_completion(g)) return std::nullopt;
    return Mag(std::move(g));
}

MagEnumeration enumerate_mags(const TsPag& pag, std::size_t cap) {
    if (cap < 1) throw std::invalid_argument("enumerate_mags: cap must be >= 1");
    MagEnumeration result;
    const int n = pag.n_vars();
    const std::vector<Link> links = pag.links();

    struct Position {
        std::size_t link;
        bool at_from;
    };
    std::vector<Position> positions;
    std::vector<int> open_ends(links.size(), 0);
    for (std::size_t li = 0; li < links.size(); ++li) {
        if (links[li].mark_from == Edgemark::Circle) positions.push_back({li, true}), ++open_ends[li];
        if (links[li].mark_to == Edgemark::Circle) positions.push_back({li, false}), ++open_ends[li];
    }

    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    std::vector<Link> work = links;

    // Check a fully assigned link and, when valid, record its contemporaneous
    // direction. Returns false if the link makes the completion invalid.
    auto commit = [&](const Link& l) -> bool {
        if (l.lag > 0) return l.mark_to == Edgemark::Arrow;
        if (l.mark_from == Edgemark::Tail && l.mark_to == Edgemark::Tail) return false;
        int u = -1, v = -1;
        if (l.mark_from == Edgemark::Tail) u = l.from, v = l.to;
        if (l.mark_to == Edgemark::Tail) u = l.to, v = l.from;
        if (u < 0) return true;
        if (reaches(adj, v, u)) return false;
        adj[static_cast<std::size_t>(u)].push_back(v);
        return true;
    };
    auto uncommit = [&](const Link& l) {
        if (l.lag > 0) return;
        int u = -1;
        if (l.mark_from == Edgemark::Tail) u = l.from;
        if (l.mark_to == Edgemark::Tail) u = l.to;
        if (u >= 0) adj[static_cast<std::size_t>(u)].pop_back();
    };

    for (std::size_t li = 0; li < links.size(); ++li) {
        if (open_ends[li] == 0 && !commit(links[li])) return result;
    }

    auto emit = [&]() {
        TsPag g = pag;
        g.orientation_conflicts = 0;
        for (const Link& l : work) {
            g.set_mark_at({l.from, l.lag}, {l.to, 0}, l.mark_from);
            g.set_mark_at({l.to, 0}, {l.from, l.lag}, l.mark_to);
        }
        auto mag = Mag::from_pag(std::move(g));
        if (!mag) throw std::logic_error("enumerate_mags: emitted an invalid completion");
        result.mags.push_back(std::move(*mag));
    };

    bool stop = false;
    // Depth-first, Tail before Arrow: visits completions in lexicographic order.
    auto dfs = [&](auto&& self, std::size_t depth) -> void {
        if (stop) return;
        if (depth == positions.size()) {
            if (result.mags.size() == cap) {
                result.truncated = true;
                stop = true;
                return;
            }
            emit();
            return;
        }
        const Position p = positions[depth];
        Link& l = work[p.link];
        for (Edgemark m : {Edgemark::Tail, Edgemark::Arrow}) {
            (p.at_from ? l.mark_from : l.mark_to) = m;
            const bool complete = --open_ends[p.link] == 0;
            if (!complete || commit(l)) {
                self(self, depth + 1);
                if (complete) uncommit(l);
            }
            ++open_ends[p.link];
            if (stop) break;
        }
        (p.at_from ? l.mark_from : l.mark_to) = Edgemark::Circle;
    };
    dfs(dfs, 0);
    return result;
}

}  // namespace ccl::graph
