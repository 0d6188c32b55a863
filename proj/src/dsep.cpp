#include <algorithm>
#include <deque>
#include <stdexcept>

#include "ccl/graph.hpp"

namespace ccl::graph {

Dag::Dag(int n_vars, int tau_max, std::vector<DirectedLink> links)
    : n_vars_(n_vars), tau_max_(tau_max), links_(std::move(links)) {
    if (n_vars < 1 || tau_max < 0) throw std::invalid_argument("Dag: bad dimensions");
    std::sort(links_.begin(), links_.end());
    links_.erase(std::unique(links_.begin(), links_.end()), links_.end());
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n_vars));
    for (const DirectedLink& l : links_) {
        if (l.from < 0 || l.from >= n_vars || l.to < 0 || l.to >= n_vars || l.lag < 0 || l.lag > tau_max)
            throw std::invalid_argument("Dag: link out of range");
        if (l.lag == 0) {
            if (l.from == l.to) throw std::invalid_argument("Dag: contemporaneous self-loop");
            adj[static_cast<std::size_t>(l.from)].push_back(l.to);
        }
    }
    // Contemporaneous acyclicity via DFS colouring.
    std::vector<int> colour(static_cast<std::size_t>(n_vars), 0);
    auto visit = [&](auto&& self, int u) -> void {
        colour[static_cast<std::size_t>(u)] = 1;
        for (int v : adj[static_cast<std::size_t>(u)]) {
            if (colour[static_cast<std::size_t>(v)] == 1) throw std::invalid_argument("Dag: contemporaneous cycle");
            if (colour[static_cast<std::size_t>(v)] == 0) self(self, v);
        }
        colour[static_cast<std::size_t>(u)] = 2;
    };
    for (int u = 0; u < n_vars; ++u)
        if (colour[static_cast<std::size_t>(u)] == 0) visit(visit, u);
}

namespace {

struct Unrolled {
    int n;
    int slices;
    std::vector<std::vector<int>> parents;
    std::vector<std::vector<int>> children;

    Unrolled(const Dag& dag, int window) : n(dag.n_vars()), slices(window) {
        const auto total = static_cast<std::size_t>(n * slices);
        parents.resize(total);
        children.resize(total);
        for (int s = 0; s < slices; ++s) {
            for (const DirectedLink& l : dag.links()) {
                if (s - l.lag < 0) continue;
                const int u = id(l.from, s - l.lag);
                const int v = id(l.to, s);
                parents[static_cast<std::size_t>(v)].push_back(u);
                children[static_cast<std::size_t>(u)].push_back(v);
            }
        }
    }
    int id(int var, int slice) const { return slice * n + var; }
};

}  // namespace

bool d_separated(const Dag& dag, UnrolledNode x, UnrolledNode y, std::span<const UnrolledNode> S,
                 int window) {
    if (window == 0) window = 2 * (dag.tau_max() + 1);
    const Unrolled g(dag, window);
    auto valid = [&](UnrolledNode u) {
        return u.var >= 0 && u.var < dag.n_vars() && u.slice >= 0 && u.slice < window;
    };
    if (!valid(x) || !valid(y)) throw std::invalid_argument("d_separated: node outside window");
    if (x == y) throw std::invalid_argument("d_separated: x == y");
    const auto total = static_cast<std::size_t>(g.n * g.slices);
    std::vector<char> in_s(total, 0);
    for (UnrolledNode s : S) {
        if (!valid(s)) throw std::invalid_argument("d_separated: conditioning node outside window");
        if (s == x || s == y) throw std::invalid_argument("d_separated: endpoint in conditioning set");
        in_s[static_cast<std::size_t>(g.id(s.var, s.slice))] = 1;
    }

    // Nodes that are in S or have a descendant in S.
    std::vector<char> anc_s(total, 0);
    std::vector<int> stack;
    for (std::size_t v = 0; v < total; ++v)
        if (in_s[v]) stack.push_back(static_cast<int>(v));
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        if (anc_s[static_cast<std::size_t>(v)]) continue;
        anc_s[static_cast<std::size_t>(v)] = 1;
        for (int p : g.parents[static_cast<std::size_t>(v)]) stack.push_back(p);
    }

    // Reachability over (node, direction): up = entered from a child,
    // down = entered from a parent.
    const int src = g.id(x.var, x.slice);
    const int dst = g.id(y.var, y.slice);
    std::vector<char> seen_up(total, 0), seen_down(total, 0);
    std::deque<std::pair<int, bool>> queue{{src, true}};
    while (!queue.empty()) {
        auto [v, up] = queue.front();
        queue.pop_front();
        const auto vi = static_cast<std::size_t>(v);
        if (up ? seen_up[vi] : seen_down[vi]) continue;
        (up ? seen_up[vi] : seen_down[vi]) = 1;
        if (v == dst) return false;
        if (up && !in_s[vi]) {
            for (int p : g.parents[vi]) queue.emplace_back(p, true);
            for (int c : g.children[vi]) queue.emplace_back(c, false);
        } else if (!up) {
            if (!in_s[vi])
                for (int c : g.children[vi]) queue.emplace_back(c, false);
            if (anc_s[vi])
                for (int p : g.parents[vi]) queue.emplace_back(p, true);
        }
    }
    return true;
}

bool is_ancestor(const Dag& dag, LaggedNode a, LaggedNode b) {
    if (a == b || a.lag < b.lag) return false;
    const int window = a.lag + 1;
    const Unrolled g(dag, window);
    const int src = g.id(a.var, window - 1 - a.lag);
    const int dst = g.id(b.var, window - 1 - b.lag);
    std::vector<char> seen(static_cast<std::size_t>(g.n * g.slices), 0);
    std::vector<int> stack{src};
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        if (v == dst) return true;
        if (seen[static_cast<std::size_t>(v)]) continue;
        seen[static_cast<std::size_t>(v)] = 1;
        for (int c : g.children[static_cast<std::size_t>(v)]) stack.push_back(c);
    }
    return false;
}

}  // namespace ccl::graph
