#pragma once

#include <vector>

#include "ccl/series.hpp"

namespace ccl::idisc {

/// X^i_{t-tau} is (dep) or is not (indep) an ancestor of X^j_t.
struct Constraint {
    int j = 0;
    int i = 0;
    int tau = 0;
    double p = 0.0;
    bool operator==(const Constraint&) const = default;
};

struct ConstraintList {
    std::vector<Constraint> deps;
    std::vector<Constraint> indeps;
    bool empty() const noexcept { return deps.empty() && indeps.empty(); }
    bool operator==(const ConstraintList&) const = default;
};

/// Which list the contemporaneous cycle pruning runs on.
enum class PruneList { Deps, Indeps };

struct InterventionalConfig {
    int tau_max = 1;
    double alpha_dep = 0.05;
    double alpha_indep = 0.8;
    PruneList prune = PruneList::Deps;
};

inline constexpr std::size_t kMinUsableSamples = 3;

/// Correlate interventional cells of column i at t - tau with observational
/// cells of column j at t, for every (i, j, tau) except i == j at tau 0.
/// Output lists are sorted by (j, i, tau).
ConstraintList discover_interventional(const Series& data, const InterventionalConfig& cfg);

/// Single-threaded reference of discover_interventional.
ConstraintList discover_interventional_serial(const Series& data, const InterventionalConfig& cfg);

/// Repeatedly drop the highest-p member of a contemporaneous cycle until
/// the tau = 0 constraints (read as edges i -> j) are acyclic.
void prune_cycles(std::vector<Constraint>& list);

/// True if the tau = 0 constraints, read as edges i -> j, contain no cycle.
bool contemporaneous_acyclic(const std::vector<Constraint>& list);

}  // namespace ccl::idisc
