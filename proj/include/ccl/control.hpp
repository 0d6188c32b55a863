#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ccl/graph.hpp"
#include "ccl/scm.hpp"
#include "ccl/series.hpp"

namespace ccl::control {

struct MenuEntry {
    int variable = 0;
    std::vector<double> values;  ///< P05 and P95 of the fitted Gaussian (one value if constant)
    double alternative = 0.0;    ///< fitted median
};

struct InterventionMenu {
    std::vector<MenuEntry> entries;
    bool empty() const noexcept { return entries.empty(); }
};

/// Fit a Gaussian per non-target column and offer its 5th/95th percentiles.
InterventionMenu build_menu(const Series& data, int target);

/// Fitted median of a column (the fallback value under exploration).
double alternative_value(const Series& data, int variable);

/// Noise-free linear SCM from a MAG: every directed link becomes a mechanism
/// with its effect size as coefficient; lag-1 self links become auto terms;
/// bidirected links are dropped. Throws std::invalid_argument when a directed
/// link has no effect size, GenerationError on a contemporaneous cycle.
scm::Scm reconstruct_scm(const graph::Mag& mag, int target);

/// Mean of the target over `horizon` steps under do(variable = value) applied
/// at every step, zero noise, starting from `start` (tau_max rows).
double simulate_outcome(const scm::Stepper& stepper, int target, const scm::Intervention& act,
                        const Matrix& start, int horizon);
double simulate_outcome(const scm::Scm& scm, const scm::Intervention& act, const Matrix& start, int horizon);

enum class ObjectiveMode { SignedMax, Magnitude };

struct PlanConfig {
    int horizon = 20;
    std::size_t mag_cap = graph::kDefaultMagCap;
    ObjectiveMode mode = ObjectiveMode::SignedMax;
    int restarts = 10;              ///< random starts used when no history is given
    std::uint64_t restart_seed = 0;
};

struct Proposal {
    int variable = 0;
    double value_opt = 0.0;
    double value_alt = 0.0;
    double expected_outcome = 0.0;
    std::size_t source_mag = 0;
    std::size_t mag_count = 0;
    bool truncated = false;
};

/// Simulate every (MAG, menu entry, value) and return the best by the
/// objective; ties go to the lower (variable, value, MAG index). Throws
/// NoModelError when the PAG admits no MAG.
Proposal find_optimal(const graph::TsPag& pag, const InterventionMenu& menu, int target, const Matrix& start,
                      const PlanConfig& cfg);

/// Single-threaded reference of find_optimal.
Proposal find_optimal_serial(const graph::TsPag& pag, const InterventionMenu& menu, int target, const Matrix& start,
                             const PlanConfig& cfg);

/// eps0 * decay^step.
double epsilon_at(std::size_t step, double eps0, double decay);

/// value_opt with probability 1 - eps, else value_alt; second is true for
/// the alternative branch.
std::pair<double, bool> select_value(const Proposal& proposal, double eps, Rng& rng);

}  // namespace ccl::control
