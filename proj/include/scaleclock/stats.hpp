#pragma once

// Monte Carlo summaries and distribution comparisons.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "errors.hpp"

namespace scaleclock {

struct McEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;

    double se() const { return stderr_; }
    /// |value − target| ≤ k·SE
    bool within(double target, double k = 3.0) const { return std::abs(value - target) <= k * stderr_; }
};

/// Pairwise summation keeps the result independent of accumulation order.
inline double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

inline McEstimate mean_estimate(const std::vector<double>& xs) {
    require(!xs.empty(), ErrorKind::precondition, "mean of an empty sample");
    McEstimate e;
    e.n = xs.size();
    e.value = pairwise_sum(xs.data(), xs.size()) / static_cast<double>(e.n);
    std::vector<double> sq(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - e.value) * (xs[i] - e.value);
    const double var = e.n > 1 ? pairwise_sum(sq.data(), sq.size()) / static_cast<double>(e.n - 1) : 0.0;
    e.stderr_ = std::sqrt(var / static_cast<double>(e.n));
    return e;
}

/// Ratio of two independent means with a delta-method standard error.
inline McEstimate ratio_estimate(const McEstimate& num, const McEstimate& den) {
    if (!(den.value > 3 * den.stderr_) || den.value <= 0)
        fail(ErrorKind::numerical, "unstable ratio: denominator is consistent with 0");
    McEstimate r;
    r.value = num.value / den.value;
    const double a = num.stderr_ / den.value, b = num.value * den.stderr_ / (den.value * den.value);
    r.stderr_ = std::sqrt(a * a + b * b);
    r.n = std::min(num.n, den.n);
    return r;
}

/// mean(num)/mean(den) for paired draws, delta-method SE with the covariance.
inline McEstimate paired_ratio_estimate(const std::vector<double>& num, const std::vector<double>& den) {
    require(num.size() == den.size() && num.size() > 1, ErrorKind::precondition,
            "paired ratio needs two samples of equal size");
    const McEstimate a = mean_estimate(num), b = mean_estimate(den);
    if (!(b.value > 3 * b.stderr_) || b.value <= 0)
        fail(ErrorKind::numerical, "unstable ratio: denominator is consistent with 0");
    const double r = a.value / b.value;
    std::vector<double> resid(num.size());
    for (std::size_t i = 0; i < num.size(); ++i) resid[i] = num[i] - r * den[i];
    const McEstimate e = mean_estimate(resid);
    return {r, e.stderr_ / b.value, num.size()};
}

inline double quantile(std::vector<double> xs, double p) {
    require(!xs.empty(), ErrorKind::precondition, "quantile of an empty sample");
    std::sort(xs.begin(), xs.end());
    const double h = p * static_cast<double>(xs.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(h));
    if (i + 1 >= xs.size()) return xs.back();
    return xs[i] + (h - static_cast<double>(i)) * (xs[i + 1] - xs[i]);
}

inline double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

/// c(α) of the Kolmogorov distribution, P[K > c(α)] = α.
inline double kolmogorov_critical(double level) {
    require(level > 0 && level < 1, ErrorKind::parameter, "KS level must be in (0,1)");
    return std::sqrt(-0.5 * std::log(level / 2));
}

/// P[K > t] for the Kolmogorov limit law.
inline double kolmogorov_survival(double t) {
    if (t <= 0) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * t * t);
        s += (k % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-17) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

struct LawComparison {
    double ks = 0.0;
    double wasserstein1 = 0.0;
    double critical = 0.0;  ///< KS critical value at the level
    double ks_se = 0.0;     ///< standard deviation of KS under the null
    bool pass = false;
};

/// Two-sample KS and empirical W1; pass iff KS is below the asymptotic critical value.
inline LawComparison compare_laws(std::vector<double> a, std::vector<double> b, double level = 0.01) {
    require(!a.empty() && !b.empty(), ErrorKind::precondition, "compare_laws needs two non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
    LawComparison out;
    std::size_t i = 0, j = 0;
    double prev = std::min(a[0], b[0]), fa = 0, fb = 0, w1 = 0;
    while (i < a.size() || j < b.size()) {
        const double x = j >= b.size() || (i < a.size() && a[i] <= b[j]) ? a[i] : b[j];
        w1 += std::abs(fa - fb) * (x - prev);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        fa = static_cast<double>(i) / n;
        fb = static_cast<double>(j) / m;
        out.ks = std::max(out.ks, std::abs(fa - fb));
        prev = x;
    }
    out.wasserstein1 = w1;
    const double scale = std::sqrt((n + m) / (n * m));
    out.critical = kolmogorov_critical(level) * scale;
    // the Kolmogorov law has standard deviation 0.2603
    out.ks_se = 0.2603 * scale;
    out.pass = out.ks < out.critical;
    return out;
}

struct OneSampleKs {
    double ks = 0.0;
    double critical = 0.0;
    bool pass = false;
};

inline OneSampleKs ks_against(std::vector<double> xs, const std::function<double(double)>& cdf,
                              double level = 0.01) {
    require(!xs.empty(), ErrorKind::precondition, "ks_against needs a sample");
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    OneSampleKs out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        out.ks = std::max({out.ks, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    out.critical = kolmogorov_critical(level) / std::sqrt(n);
    out.pass = out.ks < out.critical;
    return out;
}

}  // namespace scaleclock
