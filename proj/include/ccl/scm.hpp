#pragma once

#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ccl/graph.hpp"
#include "ccl/matrix.hpp"
#include "ccl/series.hpp"

namespace ccl {

using Rng = std::mt19937_64;

namespace scm {

/// target <- coeff * X^source_{t-lag}
struct Mechanism {
    int source = 0;
    int lag = 0;
    double coeff = 0.0;
    bool operator==(const Mechanism&) const = default;
};

/// Linear time-series SCM:
///   V^j_t = auto[j] * V^j_{t-1} + sum_m coeff_m * V^{src_m}_{t-lag_m} + noise_std[j] * N(0, 1)
struct Scm {
    int n_total = 0;
    std::vector<double> auto_coeff;
    std::vector<std::vector<Mechanism>> cross;  ///< incoming mechanisms, per target variable
    std::vector<double> noise_std;
    std::vector<int> observed_idx;  ///< ascending
    int target = 0;                 ///< index into all variables; always observed
    int tau_max = 1;                ///< history length the generator expects

    /// Position of `target` inside observed_idx.
    int observed_target() const;
    /// Throws std::invalid_argument on shape or lag inconsistencies.
    void validate() const;

    bool operator==(const Scm&) const = default;
};

struct Intervention {
    int variable = 0;
    double value = 0.0;
};

enum class TargetRule {
    IncomingCross,  ///< target needs >= 1 incoming cross mechanism
    Any,
};

struct SamplingConfig {
    int n_total = 7;
    int n_observed = 5;
    int n_links = 7;
    double frac_contemporaneous = 0.6;
    double auto_min = 0.3, auto_max = 0.6;
    double coeff_min = 0.2, coeff_max = 0.5;
    double noise_min = 0.5, noise_max = 2.0;
    TargetRule target_rule = TargetRule::IncomingCross;
    int max_attempts = 1000;
};

/// Draw an SCM, redrawing on non-stationarity, contemporaneous cycles or a
/// target without incoming cross mechanism. Throws UnsatisfiableConfig.
Scm sample_scm(const SamplingConfig& cfg, Rng& rng);

/// Variables in causal order of the contemporaneous mechanisms. Throws
/// GenerationError on a cycle.
std::vector<int> topological_order(const Scm& scm);

/// Spectral radius of the companion matrix of the reduced VAR.
double spectral_radius(const Scm& scm);

/// Spectral radius < 0.999 and a 500-step noise-free run from all ones
/// decays below 1e-3 (max norm).
bool check_stationarity(const Scm& scm);

/// Stationary covariance of all variables (noise included), n_total x n_total.
Matrix stationary_covariance(const Scm& scm);

/// Precompiled evaluator for one time step.
class Stepper {
public:
    explicit Stepper(const Scm& scm);

    /// Compute the row at time t into `out`. `lagged[l - 1]` is the row at t - l.
    void step(std::span<const std::span<const double>> lagged, const std::optional<Intervention>& act,
              std::span<const double> noise, std::span<double> out) const;

    /// Advance a buffer whose rows [0, t) are filled; writes row t.
    void step(Matrix& buf, std::size_t t, const std::optional<Intervention>& act,
              std::span<const double> noise) const;

    int n_vars() const noexcept { return n_; }
    int tau_max() const noexcept { return tau_max_; }

private:
    struct Term {
        int source;
        int lag;
        double coeff;
    };
    int n_ = 0;
    int tau_max_ = 0;
    std::vector<int> order_;
    std::vector<std::vector<Term>> terms_;  ///< auto term folded in
};

/// Fill `noise` with noise_std[j] * N(0, 1), one draw per variable.
void draw_noise(const Scm& scm, Rng& rng, std::span<double> noise);

/// Generate `t_gen` steps after `start` (tau_max rows). With an intervention,
/// the variable is held at its value with do_mask set on every generated row.
Series generate(const Scm& scm, const std::optional<Intervention>& act, const Matrix& start,
                std::size_t t_gen, Rng& rng);

inline constexpr std::size_t kWarmUpSteps = 50;

/// Final tau_max rows of a 50-step run started from pure noise.
Matrix warm_up_start(const Scm& scm, Rng& rng);

/// Column subset (values and mask) in the order of `observed_idx`.
Series drop_latents(const Series& series, std::span<const int> observed_idx);

/// Ground-truth DAG over all variables (auto terms as lag-1 self links).
graph::Dag to_dag(const Scm& scm);

std::string to_json(const Scm& scm);
Scm from_json(const std::string& text);

}  // namespace scm
}  // namespace ccl
