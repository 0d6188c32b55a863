#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ccl::stats {

struct TestResult {
    double statistic = 0.0;  ///< Pearson / partial correlation in [-1, 1]
    double p_value = 1.0;    ///< two-sided, Fisher z
    bool degenerate = false;  ///< constant (or fully explained) input; statistic 0, p 1
    bool rank_deficient = false;  ///< collinear conditioning columns were dropped
    std::size_t n = 0;
    std::size_t conditioning_used = 0;
};

struct GaussianFit {
    double mu = 0.0;
    double sigma = 0.0;
};

/// Symmetric covariance-like matrix over [x, y, s_0, ..., s_{k-1}], row-major,
/// dimension (k + 2).
struct Moments {
    std::size_t dim = 0;
    std::vector<double> cov;
    double operator()(std::size_t r, std::size_t c) const { return cov[r * dim + c]; }
};

/// Partial correlation of entries 0 and 1 of `m` given entries 2.., with
/// collinear conditioning entries eliminated in order. `n` is the sample size
/// the moments were computed from.
TestResult partial_corr_from_moments(const Moments& m, std::size_t n);

/// Two-sided p-value of correlation `r` via Fisher z with effective sample
/// size `n_eff`: z = atanh(r) * sqrt(n_eff - 3).
double fisher_z_pvalue(double r, double n_eff);

/// Throws std::invalid_argument for n < 3 or length mismatch.
TestResult pearson_test(std::span<const double> x, std::span<const double> y);

/// Residual correlation of x and y after least squares on [1, S]; p-value
/// uses n - |S| as the effective sample size.
TestResult partial_corr_test(std::span<const double> x, std::span<const double> y,
                             const std::vector<std::span<const double>>& S);

/// Mean and population (1/T) standard deviation.
GaussianFit fit_gaussian(std::span<const double> x);

double normal_cdf(double z);
double normal_quantile(double q);

/// mu + sigma * Phi^{-1}(q), 0 < q < 1.
double gaussian_percentile(const GaussianFit& fit, double q);

}  // namespace ccl::stats
