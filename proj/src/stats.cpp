#include "ccl/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ccl::stats {

namespace {

// Relative tolerance below which a (residual) variance counts as zero.
constexpr double kVarianceTol = 1e-12;

}  // namespace

double fisher_z_pvalue(double r, double n_eff) {
    const double df = n_eff - 3.0;
    if (df <= 0.0) return 1.0;
    const double a = std::min(1.0, std::abs(r));
    if (a >= 1.0) return 0.0;
    const double z = std::atanh(a) * std::sqrt(df);
    return std::clamp(std::erfc(z / std::sqrt(2.0)), 0.0, 1.0);
}

TestResult partial_corr_from_moments(const Moments& m, std::size_t n) {
    const std::size_t d = m.dim;
    std::vector<double> a = m.cov;
    auto at = [&](std::size_t r, std::size_t c) -> double& { return a[r * d + c]; };

    TestResult res;
    res.n = n;
    const double var_x0 = at(0, 0);
    const double var_y0 = at(1, 1);

    // Sweep conditioning entries in order; an entry whose residual variance
    // has collapsed is collinear with the earlier ones and is dropped.
    std::vector<char> active(d, 1);
    std::size_t used = 0;
    for (std::size_t s = 2; s < d; ++s) {
        const double pivot = at(s, s);
        if (!(pivot > kVarianceTol * std::max(m(s, s), std::numeric_limits<double>::min()))) {
            active[s] = 0;
            res.rank_deficient = true;
            continue;
        }
        ++used;
        for (std::size_t r = 0; r < d; ++r) {
            if (r == s || !active[r] || (r >= 2 && r < s)) continue;
            const double f = at(r, s) / pivot;
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < d; ++c) {
                if (c == s || !active[c] || (c >= 2 && c < s)) continue;
                at(r, c) -= f * at(s, c);
            }
        }
    }
    res.conditioning_used = used;

    const double vx = at(0, 0);
    const double vy = at(1, 1);
    if (!(var_x0 > 0.0) || !(var_y0 > 0.0) || !(vx > kVarianceTol * var_x0) || !(vy > kVarianceTol * var_y0)) {
        res.degenerate = true;
        res.statistic = 0.0;
        res.p_value = 1.0;
        return res;
    }
    res.statistic = std::clamp(at(0, 1) / std::sqrt(vx * vy), -1.0, 1.0);
    res.p_value = fisher_z_pvalue(res.statistic, static_cast<double>(n) - static_cast<double>(used));
    return res;
}

namespace {

Moments moments_of(const std::vector<std::span<const double>>& cols) {
    const std::size_t d = cols.size();
    const std::size_t n = cols.front().size();
    std::vector<double> mean(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        double s = 0.0;
        for (double v : cols[k]) s += v;
        mean[k] = s / static_cast<double>(n);
    }
    Moments m{d, std::vector<double>(d * d, 0.0)};
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = r; c < d; ++c) {
            double s = 0.0;
            for (std::size_t t = 0; t < n; ++t) s += (cols[r][t] - mean[r]) * (cols[c][t] - mean[c]);
            s /= static_cast<double>(n);
            m.cov[r * d + c] = s;
            m.cov[c * d + r] = s;
        }
    }
    return m;
}

}  // namespace

TestResult pearson_test(std::span<const double> x, std::span<const double> y) {
    return partial_corr_test(x, y, {});
}

TestResult partial_corr_test(std::span<const double> x, std::span<const double> y,
                             const std::vector<std::span<const double>>& S) {
    const std::size_t n = x.size();
    if (y.size() != n) throw std::invalid_argument("partial_corr_test: length mismatch");
    for (const auto& s : S)
        if (s.size() != n) throw std::invalid_argument("partial_corr_test: length mismatch");
    if (n < 3) throw std::invalid_argument("partial_corr_test: need at least 3 samples");
    if (n < S.size() + 3) throw std::invalid_argument("partial_corr_test: need n >= |S| + 3");
    std::vector<std::span<const double>> cols{x, y};
    cols.insert(cols.end(), S.begin(), S.end());
    return partial_corr_from_moments(moments_of(cols), n);
}

GaussianFit fit_gaussian(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("fit_gaussian: empty sample");
    double s = 0.0;
    for (double v : x) s += v;
    const double mu = s / static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mu) * (v - mu);
    return {mu, std::sqrt(ss / static_cast<double>(x.size()))};
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double q) {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("normal_quantile: q must be in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), q);
}

double gaussian_percentile(const GaussianFit& fit, double q) {
    const double z = normal_quantile(q);
    if (fit.sigma == 0.0) return fit.mu;
    return fit.mu + fit.sigma * z;
}

}  // namespace ccl::stats
