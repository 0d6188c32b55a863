#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ccl::graph {

enum class Edgemark : std::uint8_t { Tail, Arrow, Circle };

/// Canonical identity of a link: X^from_{t-lag} -- X^to_t. For lag 0 the
/// canonical form has from < to.
struct LinkKey {
    int from = 0;
    int lag = 0;
    int to = 0;
    auto operator<=>(const LinkKey&) const = default;
};

/// Canonical key for the pair (X^src_{t-tau}, X^dst_t).
LinkKey canonical_key(int src, int tau, int dst);

struct Link {
    int from = 0;
    int lag = 0;
    int to = 0;
    Edgemark mark_from = Edgemark::Circle;
    Edgemark mark_to = Edgemark::Circle;
    std::optional<double> effect;

    LinkKey key() const { return {from, lag, to}; }
    bool operator==(const Link&) const = default;
};

/// A variable at a relative time offset: X^var_{t-lag}.
struct LaggedNode {
    int var = 0;
    int lag = 0;
    auto operator<=>(const LaggedNode&) const = default;
};

/// Separating sets of removed links, keyed canonically. Members are expressed
/// relative to the later endpoint of the pair (which sits at lag 0).
using SepsetMap = std::map<LinkKey, std::vector<LaggedNode>>;

/// Time-series partial ancestral graph over the window [t - tau_max, t].
///
/// Stationarity makes a link stand for every time-shifted copy, so a link is
/// addressed either by (src, tau, dst) -- meaning X^src_{t-tau} and X^dst_t --
/// or by a pair of LaggedNodes whose lag difference is at most tau_max.
/// Marks can be frozen; frozen marks are never rewritten by orientation.
class TsPag {
public:
    TsPag() = default;
    TsPag(int n_vars, int tau_max);

    int n_vars() const noexcept { return n_vars_; }
    int tau_max() const noexcept { return tau_max_; }

    bool has(int src, int tau, int dst) const;
    bool adjacent(LaggedNode a, LaggedNode b) const;

    /// Add (or overwrite) the link X^src_{t-tau} -- X^dst_t.
    void add(int src, int tau, int dst, Edgemark at_src, Edgemark at_dst);
    void remove(int src, int tau, int dst);

    Edgemark mark_at(LaggedNode at, LaggedNode other) const;
    void set_mark_at(LaggedNode at, LaggedNode other, Edgemark m);
    bool fixed_at(LaggedNode at, LaggedNode other) const;
    void freeze_at(LaggedNode at, LaggedNode other);

    Edgemark mark_at_source(int src, int tau, int dst) const { return mark_at({src, tau}, {dst, 0}); }
    Edgemark mark_at_target(int src, int tau, int dst) const { return mark_at({dst, 0}, {src, tau}); }

    std::optional<double> effect(int src, int tau, int dst) const;
    void set_effect(int src, int tau, int dst, std::optional<double> e);

    /// All links, sorted by (from, lag, to).
    std::vector<Link> links() const;
    std::size_t link_count() const;
    std::size_t circle_count() const;

    /// Frozen link ends as (key, at_from) pairs, sorted.
    std::vector<std::pair<LinkKey, bool>> fixed_marks() const;

    /// Number of orientations skipped because they hit a tail or frozen mark.
    std::size_t orientation_conflicts = 0;

    bool operator==(const TsPag& o) const;

private:
    struct Slot {
        bool present = false;
        Edgemark mark_from = Edgemark::Circle;
        Edgemark mark_to = Edgemark::Circle;
        bool fixed_from = false;
        bool fixed_to = false;
        bool has_effect = false;
        double effect = 0.0;
        bool operator==(const Slot&) const = default;
    };
    struct EndRef {
        std::size_t slot;
        bool at_from;
    };

    std::size_t index(const LinkKey& k) const;
    std::optional<EndRef> locate(LaggedNode at, LaggedNode other) const;
    Slot& slot_for(int src, int tau, int dst);
    const Slot& slot_for(int src, int tau, int dst) const;

    int n_vars_ = 0;
    int tau_max_ = 0;
    std::vector<Slot> slots_;
};

/// Complete graph under the time constraints: lagged links o-> (self-lags
/// included), contemporaneous links o-o between distinct variables.
TsPag init_complete_pag(int n_vars, int tau_max);

/// Orient every unshielded triple A *-* B *-* C (A, C non-adjacent, B not in
/// sepset(A, C)) as A *-> B <-* C. Frozen and tail marks are left untouched;
/// each such skip increments orientation_conflicts on the result.
TsPag orient_unshielded_colliders(const TsPag& pag, const SepsetMap& sepsets);

/// True when `g` has no circles, no contemporaneous tail-tail link and an
/// acyclic contemporaneous directed subgraph.
bool is_valid_completion(const TsPag& g);

/// A PAG completion with zero circle marks that passed is_valid_completion.
/// The ancestral condition on bidirected links is not enforced.
class Mag {
public:
    static std::optional<Mag> from_pag(TsPag g);
    const TsPag& graph() const noexcept { return g_; }
    bool operator==(const Mag&) const = default;

private:
    explicit Mag(TsPag g) : g_(std::move(g)) {}
    TsPag g_;
};

struct MagEnumeration {
    std::vector<Mag> mags;
    bool truncated = false;
};

inline constexpr std::size_t kDefaultMagCap = 256;

/// Circle completions of `pag` in canonical order (links by (from, lag, to),
/// from-end before to-end, Tail before Arrow), filtered by
/// is_valid_completion, stopping after `cap` results.
MagEnumeration enumerate_mags(const TsPag& pag, std::size_t cap = kDefaultMagCap);

struct DirectedLink {
    int from = 0;
    int lag = 0;
    int to = 0;
    auto operator<=>(const DirectedLink&) const = default;
};

/// Ground-truth time-series DAG (directed links only).
class Dag {
public:
    Dag(int n_vars, int tau_max, std::vector<DirectedLink> links);
    int n_vars() const noexcept { return n_vars_; }
    int tau_max() const noexcept { return tau_max_; }
    const std::vector<DirectedLink>& links() const noexcept { return links_; }

private:
    int n_vars_;
    int tau_max_;
    std::vector<DirectedLink> links_;
};

/// A node of the DAG unrolled over a finite window; slice 0 is the earliest.
struct UnrolledNode {
    int var = 0;
    int slice = 0;
    auto operator<=>(const UnrolledNode&) const = default;
};

/// d-separation of x and y given S in `dag` unrolled over `window` slices
/// (0 selects 2 * (tau_max + 1)).
bool d_separated(const Dag& dag, UnrolledNode x, UnrolledNode y,
                 std::span<const UnrolledNode> S, int window = 0);

/// True if X^a.var_{t-a.lag} is an ancestor of X^b.var_{t-b.lag}.
bool is_ancestor(const Dag& dag, LaggedNode a, LaggedNode b);

// Text format: one link per line, `i <m><m> j @ tau [effect]`, with
// from-end marks {-, <, o} and to-end marks {-, >, o}. A leading
// `# n_vars N tau_max T` header carries the dimensions.
std::string to_text(const TsPag& g);
TsPag parse_text(std::string_view text);

std::string format_double(double v);

}  // namespace ccl::graph
