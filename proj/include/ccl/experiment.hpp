#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ccl/control.hpp"
#include "ccl/idiscovery.hpp"
#include "ccl/odiscovery.hpp"
#include "ccl/scm.hpp"

namespace ccl::experiment {

enum class Mode { Baseline, Extended, OracleConstraints, ObservationalOnly };

struct EpisodeConfig {
    scm::SamplingConfig scm;
    std::size_t t_init = 50;
    std::size_t t_max = 200;
    double intervention_fraction = 0.25;
    double eps0 = 0.5;
    double decay = 0.99;
    odisc::DiscoveryConfig discovery;
    double alpha_dep = 0.05;
    double alpha_indep = 0.8;
    idisc::PruneList prune = idisc::PruneList::Deps;
    Mode mode = Mode::Extended;
    control::PlanConfig plan;
    std::size_t discovery_stride = 1;
    bool trace = false;  ///< keep the discovered graph text of every discovery
    std::uint64_t seed = 0;

    /// Throws ConfigError naming the offending key.
    void validate() const;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct StepRecord {
    std::size_t t = 0;
    bool acted = false;
    int variable = -1;  ///< observed index, -1 when not acted
    double value = kNaN;
    bool was_alternative = false;
    double eps = 0.0;
    double y_actual = 0.0;
    double y_oracle = 0.0;
    double regret_increment = 0.0;
    /// Field-wise; two unset (NaN) values compare equal.
    bool operator==(const StepRecord& o) const {
        const bool same_value = value == o.value || (std::isnan(value) && std::isnan(o.value));
        return t == o.t && acted == o.acted && variable == o.variable && same_value &&
               was_alternative == o.was_alternative && eps == o.eps && y_actual == o.y_actual &&
               y_oracle == o.y_oracle && regret_increment == o.regret_increment;
    }
};

/// Interventional constraints scored against the true ancestry.
struct Calibration {
    std::size_t dep_true = 0, dep_false = 0;
    std::size_t indep_true = 0, indep_false = 0;
    Calibration& operator+=(const Calibration& o);
    double dep_precision() const;
    double indep_precision() const;
};

struct EpisodeResult {
    std::uint64_t seed = 0;
    std::vector<StepRecord> records;
    double avg_regret = 0.0;
    double optimal_fraction = kNaN;  ///< NaN without acted steps
    std::vector<int> optimal_variables;  ///< observed indices
    Calibration calibration;        ///< pooled over every discovery
    Calibration final_calibration;  ///< last discovery only
    std::size_t discoveries = 0;
    std::vector<std::string> trace;
    Series observed;  ///< final observed data, kept with `trace`
};

/// floor((t + 1) f) > floor(t f).
bool is_action_step(std::size_t t, double fraction);

/// Ground-truth constraints over observed variables: dep iff X^i_{t-tau} is
/// an ancestor of X^j_t in the true DAG, indep otherwise.
idisc::ConstraintList oracle_constraints(const scm::Scm& scm, int tau_max);

/// Best single intervention on the true SCM over a menu of stationary
/// 5th/95th percentiles, simulated noise-free from a zero start.
struct OracleAction {
    int variable = 0;  ///< index into all variables
    double value = 0.0;
    double outcome = 0.0;
    std::vector<int> optimal_variables;  ///< observed indices within 1e-12 of the best
};
OracleAction oracle_action(const scm::Scm& scm, int horizon);

/// The true SCM an episode with `cfg.seed` samples.
scm::Scm episode_scm(const EpisodeConfig& cfg);

EpisodeResult run_episode(const EpisodeConfig& cfg);

/// Episodes for each seed, in order; `jobs` workers.
std::vector<EpisodeResult> run_batch(const EpisodeConfig& base, std::span<const std::uint64_t> seeds, int jobs);

/// Seeds base.seed, base.seed + 1, ...
std::vector<std::uint64_t> episode_seeds(std::uint64_t base, std::size_t count);

struct Aggregate {
    std::size_t episodes = 0;
    double mean_avg_regret = 0.0;
    double q1 = 0.0, median = 0.0, q3 = 0.0, min = 0.0, max = 0.0;
    double mean_optimal_fraction = kNaN;
};

Aggregate aggregate(std::span<const EpisodeResult> results);

struct SweepRow {
    std::string param_value;
    Aggregate agg;
    std::vector<EpisodeResult> episodes;
};

const std::vector<std::string>& sweep_params();

std::vector<SweepRow> sweep(const EpisodeConfig& base, const std::string& param, const std::vector<std::string>& values,
                            std::size_t episodes, int jobs);

std::string to_string(Mode m);
Mode parse_mode(const std::string& s);

}  // namespace ccl::experiment
