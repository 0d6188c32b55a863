#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ccl/graph.hpp"
#include "ccl/idiscovery.hpp"
#include "ccl/series.hpp"
#include "ccl/stats.hpp"

namespace ccl::odisc {

struct DiscoveryConfig {
    double alpha_obs = 0.05;
    int tau_max = 1;
    int k = 1;      ///< preliminary rounds
    int p_max = 3;  ///< largest conditioning set
    /// Drop every row that holds an interventional cell instead of excluding
    /// cells per test.
    bool rowwise_exclusion = false;
};

/// Separating sets of removed links plus the minimal-|statistic| signed value
/// of every tested pair.
struct SepsetStore {
    graph::SepsetMap sepsets;
    std::map<graph::LinkKey, double> min_stat;
};

/// Signed statistic of minimal magnitude over all tests of X^i_{t-tau} -- X^j_t.
std::optional<double> effect_size(const SepsetStore& store, int i, int j, int tau);

/// Write dependencies as frozen i -> j and independencies as a frozen arrow
/// at the i-end. Links are never added or removed. A dep and an indep on the
/// same (j, i, tau) are resolved in favour of the smaller p; each such
/// conflict is appended to `log` when given.
graph::TsPag inject_constraints(graph::TsPag pag, const idisc::ConstraintList& constraints,
                                std::vector<std::string>* log = nullptr);

/// Lagged design over rows t in [tau_max, T): column lag * n + var holds
/// X^var_{t-lag}. Rows are grouped by their interventional-cell pattern so
/// the moments of any column subset over the rows where those columns are
/// all observational can be summed without touching the raw data.
class MomentTable {
public:
    MomentTable(const Series& data, int tau_max, bool rowwise_exclusion = false);

    int n_vars() const noexcept { return n_; }
    int tau_max() const noexcept { return tau_max_; }

    /// Column of X^var_{t-lag}.
    std::size_t column(graph::LaggedNode v) const {
        return static_cast<std::size_t>(v.lag) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(v.var);
    }

    /// Partial correlation test of columns (x, y | S) over the rows where
    /// every involved cell is observational. Empty if n < |S| + 3.
    std::optional<stats::TestResult> test(std::size_t x, std::size_t y, const std::vector<std::size_t>& S) const;

    std::size_t group_count() const noexcept { return groups_.size(); }

private:
    struct Group {
        std::uint64_t pattern;
        double count;
        std::vector<double> sum;    // d
        std::vector<double> cross;  // d * d
    };
    int n_ = 0;
    int tau_max_ = 0;
    std::size_t d_ = 0;
    std::vector<Group> groups_;
};

struct DiscoveryResult {
    graph::TsPag pag;
    SepsetStore store;
    std::size_t tests = 0;
};

/// Constraint-seeded skeleton removal and collider orientation over the
/// observational cells of `data`.
DiscoveryResult discover(const Series& data, const idisc::ConstraintList& constraints, const DiscoveryConfig& cfg);

}  // namespace ccl::odisc
