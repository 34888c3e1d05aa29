#pragma once

// Kummer's confluent hypergeometric function M(a,b,z) for real z >= 0,
// regularized incomplete gamma functions and a few log-domain helpers.

#include <cmath>
#include <limits>

#include "errors.hpp"

namespace scaleclock::special {

namespace detail {

inline bool near_nonpositive_integer(double a) {
    const double r = std::round(a);
    return r <= 0 && std::abs(a - r) < 1e-12;
}

/// Power series for M(a,b,z); for a > 0, b > 0, z >= 0 every term is positive.
inline double kummer_series(double a, double b, double z) {
    double term = 1.0, sum = 1.0;
    for (int k = 0; k < 20000; ++k) {
        term *= (a + k) * z / ((b + k) * (k + 1));
        sum += term;
        if (term == 0.0 || std::abs(term) < 1e-17 * std::abs(sum)) return sum;
    }
    fail(ErrorKind::numerical, "Kummer series did not converge");
}

/// log of the leading large-z expansion factor sum_k (b-a)_k (1-a)_k / (k! z^k).
inline double kummer_asymptotic_log_sum(double a, double b, double z) {
    double term = 1.0, sum = 1.0;
    for (int k = 0; k < 200; ++k) {
        const double next = term * (b - a + k) * (1 - a + k) / ((k + 1) * z);
        if (k > 0 && std::abs(next) > std::abs(term)) break;  // past the smallest term
        term = next;
        sum += term;
        if (term == 0.0 || std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return std::log(sum);
}

}  // namespace detail

/// Argument above which the large-z expansion is used.
inline constexpr double kKummerAsymptoticThreshold = 30.0;

inline bool kummer_uses_asymptotic(double a, double z) {
    if (detail::near_nonpositive_integer(a)) return false;
    // For tiny positive a the subleading z^{-a} branch is not negligible at
    // moderate z; the all-positive series stays accurate there.
    if (a > 0 && a < 1e-2) return z > 600.0;
    return z > kKummerAsymptoticThreshold;
}

/// log M(a,b,z); requires M(a,b,z) > 0.
inline double log_kummer_m(double a, double b, double z) {
    require(z >= 0 && b > 0, ErrorKind::range, "Kummer M needs z >= 0 and b > 0");
    if (!kummer_uses_asymptotic(a, z)) {
        const double m = detail::kummer_series(a, b, z);
        require(m > 0, ErrorKind::range, "Kummer M is not positive at the requested arguments");
        return std::log(m);
    }
    require(a > 0, ErrorKind::range, "Kummer M is not positive at the requested arguments");
    return std::lgamma(b) - std::lgamma(a) + z + (a - b) * std::log(z) +
           detail::kummer_asymptotic_log_sum(a, b, z);
}

inline double kummer_m(double a, double b, double z) {
    if (!kummer_uses_asymptotic(a, z)) return detail::kummer_series(a, b, z);
    return std::exp(log_kummer_m(a, b, z));
}

/// M(a+1,b+1,z)/M(a,b,z), the ratio behind M' = (a/b) M(a+1,b+1,z).
inline double kummer_shift_ratio(double a, double b, double z) {
    if (!kummer_uses_asymptotic(a, z) || !kummer_uses_asymptotic(a + 1, z))
        return std::exp(log_kummer_m(a + 1, b + 1, z) - log_kummer_m(a, b, z));
    // both asymptotic: the exponentials and z-powers cancel
    const double lr = std::lgamma(b + 1) - std::lgamma(a + 1) - std::lgamma(b) + std::lgamma(a) +
                      detail::kummer_asymptotic_log_sum(a + 1, b + 1, z) -
                      detail::kummer_asymptotic_log_sum(a, b, z);
    return std::exp(lr);
}

// ---------------------------------------------------------------------------
// Regularized incomplete gamma

namespace detail {

inline double gamma_p_series(double a, double x) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 100000; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

/// P(a,x) = γ(a,x)/Γ(a).
inline double gamma_p(double a, double x) {
    require(a > 0 && x >= 0, ErrorKind::range, "incomplete gamma needs a > 0, x >= 0");
    if (x == 0) return 0.0;
    if (x == std::numeric_limits<double>::infinity()) return 1.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_fraction(a, x);
}

/// Q(a,x) = Γ(a,x)/Γ(a).
inline double gamma_q(double a, double x) {
    require(a > 0 && x >= 0, ErrorKind::range, "incomplete gamma needs a > 0, x >= 0");
    if (x == 0) return 1.0;
    if (x == std::numeric_limits<double>::infinity()) return 0.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_fraction(a, x);
}

// ---------------------------------------------------------------------------
// log-domain helpers

/// log erfc(z), accurate far into the tail where erfc underflows.
inline double log_erfc(double z) {
    if (z < 20.0) return std::log(std::erfc(z));
    const double iz2 = 1.0 / (2.0 * z * z);
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 30; ++k) {
        const double next = -term * (2 * k - 1) * iz2;
        if (std::abs(next) > std::abs(term)) break;
        term = next;
        sum += term;
    }
    return -z * z - std::log(z * std::sqrt(M_PI)) + std::log(sum);
}

/// sinh(t)/t with a series near 0.
inline double sinhc(double t) {
    const double a = std::abs(t);
    if (a < 1e-4) return 1.0 + t * t / 6.0;
    return std::sinh(t) / t;
}

/// log(sinh(t)/t) for t >= 0 without overflow.
inline double log_sinhc(double t) {
    const double a = std::abs(t);
    if (a < 20.0) return std::log(sinhc(a));
    return a - std::log(2.0 * a) + std::log1p(-std::exp(-2.0 * a));
}

/// t·coth(t) with a series near 0.
inline double t_coth(double t) {
    const double a = std::abs(t);
    if (a < 1e-4) return 1.0 + a * a / 3.0;
    if (a > 20.0) return a;
    return a / std::tanh(a);
}

}  // namespace scaleclock::special
