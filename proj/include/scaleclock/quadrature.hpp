#pragma once

// Adaptive Gauss-Kronrod quadrature (plain and log-domain), divergence-aware
// improper integration on doubling schedules, and small interpolation tables.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include "errors.hpp"

namespace scaleclock {

using RealFn = std::function<double(double)>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// log(e^a + e^b) without overflow.
inline double log_add(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    if (a == kInf || b == kInf) return kInf;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

namespace detail {

// QUADPACK qk21 abscissae and weights; Gauss nodes are the odd entries.
inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208067811050, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

inline std::string fmt_interval(double a, double b) {
    std::ostringstream os;
    os.precision(6);
    os << "[" << a << ", " << b << "]";
    return os.str();
}

}  // namespace detail

struct Quadrature {
    double value = 0.0;
    double error = 0.0;
};

template <class F>
Quadrature gk21(F& f, double a, double b) {
    using namespace detail;
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double rk = fc * kWgk[10];
    double rg = 0.0;
    for (int j = 0; j < 10; ++j) {
        const double dx = h * kXgk[j];
        const double s = f(c - dx) + f(c + dx);
        rk += kWgk[j] * s;
        if (j % 2 == 1) rg += kWg[j / 2] * s;
    }
    return {rk * h, std::abs((rk - rg) * h)};
}

/// Globally adaptive GK21 on [a, b]. Throws on non-finite panel values.
template <class F>
Quadrature integrate(F&& f, double a, double b, double rtol = 1e-10, double atol = 0.0,
                     std::size_t max_panels = 4000) {
    if (a == b) return {};
    if (b < a) {
        auto q = integrate(f, b, a, rtol, atol, max_panels);
        return {-q.value, q.error};
    }
    struct Seg {
        double a, b, v, e;
        bool operator<(const Seg& o) const { return e < o.e; }
    };
    std::priority_queue<Seg> heap;
    auto push = [&](double lo, double hi) {
        const Quadrature q = gk21(f, lo, hi);
        if (!std::isfinite(q.value))
            fail(ErrorKind::evaluation, "non-finite integrand on " + detail::fmt_interval(lo, hi));
        heap.push({lo, hi, q.value, q.error});
        return q;
    };
    Quadrature first = push(a, b);
    double total = first.value, err = first.error;
    while (err > std::max(atol, rtol * std::abs(total)) && heap.size() < max_panels) {
        const Seg s = heap.top();
        heap.pop();
        const double m = 0.5 * (s.a + s.b);
        if (m <= s.a || m >= s.b) {
            heap.push(s);
            break;
        }
        const Quadrature l = push(s.a, m), r = push(m, s.b);
        total += l.value + r.value - s.v;
        err += l.error + r.error - s.e;
    }
    double sum = 0.0, esum = 0.0;
    while (!heap.empty()) {
        sum += heap.top().v;
        esum += heap.top().e;
        heap.pop();
    }
    return {sum, esum};
}

struct LogQuadrature {
    double log_value = -kInf;
    double rel_error = 0.0;
};

/// One GK21 panel for the integrand exp(g(x)).
template <class G>
LogQuadrature log_gk21(G& g, double a, double b) {
    using namespace detail;
    std::array<double, 21> lv{};
    std::array<double, 21> xs{};
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    for (int j = 0; j < 10; ++j) {
        xs[2 * j] = c - h * kXgk[j];
        xs[2 * j + 1] = c + h * kXgk[j];
    }
    xs[20] = c;
    double m = -kInf;
    for (int i = 0; i < 21; ++i) {
        lv[i] = g(xs[i]);
        if (std::isnan(lv[i])) {
            std::ostringstream os;
            os << "NaN log-integrand at x = " << xs[i];
            fail(ErrorKind::evaluation, os.str());
        }
        m = std::max(m, lv[i]);
    }
    if (m == -kInf) return {-kInf, 0.0};
    if (m == kInf) return {kInf, 0.0};
    double rk = kWgk[10] * std::exp(lv[20] - m), rg = 0.0;
    for (int j = 0; j < 10; ++j) {
        const double s = std::exp(lv[2 * j] - m) + std::exp(lv[2 * j + 1] - m);
        rk += kWgk[j] * s;
        if (j % 2 == 1) rg += kWg[j / 2] * s;
    }
    const double d = std::abs(rk - rg) / rk;
    return {m + std::log(rk * h), std::min(d, std::pow(200.0 * d, 1.5))};
}

/// log ∫_a^b exp(g(x)) dx by globally adaptive GK21 with relative tolerance.
template <class G>
LogQuadrature log_integrate(G&& g, double a, double b, double rtol = 1e-10,
                            std::size_t max_panels = 2000) {
    if (!(b > a)) return {-kInf, 0.0};
    struct Seg {
        double a, b, lv, rel;
    };
    std::vector<Seg> segs;
    auto make = [&](double lo, double hi) {
        const LogQuadrature q = log_gk21(g, lo, hi);
        return Seg{lo, hi, q.log_value, q.rel_error};
    };
    segs.push_back(make(a, b));
    for (;;) {
        double lt = -kInf;
        for (const Seg& s : segs) {
            if (s.lv == kInf) return {kInf, 0.0};
            lt = log_add(lt, s.lv);
        }
        if (lt == -kInf) return {-kInf, 0.0};
        double rel = 0.0, worst = -kInf;
        std::size_t iw = 0;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            const double w = segs[i].rel * std::exp(segs[i].lv - lt);
            rel += w;
            if (w > worst && segs[i].b - segs[i].a > 1e-14 * std::abs(segs[i].b)) {
                worst = w;
                iw = i;
            }
        }
        if (rel <= rtol || segs.size() >= max_panels || worst == -kInf) return {lt, rel};
        const Seg s = segs[iw];
        const double m = 0.5 * (s.a + s.b);
        segs[iw] = make(s.a, m);
        segs.push_back(make(m, s.b));
    }
}

// ---------------------------------------------------------------------------
// Improper integrals with divergence detection

enum class IntegralStatus { finite, divergent };

struct IntegralOutcome {
    IntegralStatus status = IntegralStatus::finite;
    double value = kNaN;      ///< present iff finite
    double log_value = kNaN;  ///< log of value (−inf for a zero integral), +inf if divergent
    double error = 0.0;       ///< absolute error estimate of value
    std::vector<double> evidence;  ///< partial integrals after each doubling

    bool finite() const { return status == IntegralStatus::finite; }
    bool divergent() const { return status == IntegralStatus::divergent; }
};

struct DivergencePolicy {
    double threshold = 1e12;
    int doublings = 40;
    double stabilization = 1e-6;
    double rtol = 1e-10;
};

enum class Toward { infinity, zero };

/// ∫ exp(g) over [a,∞) (Toward::infinity) or (0,a] (Toward::zero), evaluated on
/// dyadic pieces. Geometric decay of the pieces is extrapolated, which settles
/// power tails that would not stabilize within the schedule otherwise.
template <class G>
IntegralOutcome improper_log_integral(G&& g, double a, const DivergencePolicy& policy = {},
                                      Toward dir = Toward::infinity) {
    require(a > 0 && std::isfinite(a), ErrorKind::precondition,
            "improper integral needs a finite positive anchor");
    IntegralOutcome out;
    const double log_d = std::log(policy.threshold);
    double lt = -kInf, prev_lest = kNaN, lp_prev = kNaN, prev_q = kNaN;
    int flat = 0;
    std::vector<double> lps, rels;
    auto diverge = [&]() {
        out.status = IntegralStatus::divergent;
        out.value = kNaN;
        out.log_value = kInf;
        return out;
    };
    auto finish = [&](double lest, double change) {
        out.status = IntegralStatus::finite;
        out.log_value = lest;
        out.value = std::exp(lest);
        double qerr = 0.0;
        if (lt > -kInf)
            for (std::size_t i = 0; i < lps.size(); ++i) qerr += rels[i] * std::exp(lps[i] - lt);
        out.error = out.value * (qerr + 4 * std::numeric_limits<double>::epsilon()) + change;
        return out;
    };
    for (int k = 1; k <= policy.doublings; ++k) {
        double lo, hi;
        if (dir == Toward::infinity) {
            lo = std::ldexp(a, k - 1);
            hi = std::ldexp(a, k);
        } else {
            lo = std::ldexp(a, -k);
            hi = std::ldexp(a, -k + 1);
        }
        const LogQuadrature piece = log_integrate(g, lo, hi, policy.rtol);
        const double lp = piece.log_value;
        if (lp == kInf) {
            out.evidence.push_back(kInf);
            return diverge();
        }
        lps.push_back(lp);
        rels.push_back(piece.rel_error);
        lt = log_add(lt, lp);
        out.evidence.push_back(std::exp(lt));
        if (lt > log_d) return diverge();

        if (lp == -kInf && k >= 2) return finish(lt, 0.0);

        double lest = lt;
        bool extrapolated = false;
        if (k >= 2 && lp > -kInf && lp_prev > -kInf) {
            const double q = std::exp(lp - lp_prev);
            // pieces that stop decaying can only sum to infinity
            flat = q >= 0.999 ? flat + 1 : 0;
            if (flat >= 6) return diverge();
            if (k >= 3 && q < 1.0 && std::isfinite(prev_q) && std::abs(q - prev_q) <= 0.1 * (1.0 - q)) {
                lest = log_add(lt, lp + std::log(q / (1.0 - q)));
                extrapolated = true;
            }
            prev_q = q;
        }
        if (k >= 3 && std::isfinite(prev_lest) && lest > -kInf) {
            const double change = std::abs(std::expm1(prev_lest - lest));
            const bool small_piece = std::exp(lp - lt) <= policy.stabilization;
            if (change <= policy.stabilization && (extrapolated || small_piece))
                return finish(lest, change * std::exp(lest));
        }
        prev_lest = lest;
        lp_prev = lp;
    }
    return diverge();
}

/// Plain-valued wrapper: f must be non-negative.
template <class F>
IntegralOutcome improper_integral(F&& f, double a, const DivergencePolicy& policy = {},
                                  Toward dir = Toward::infinity) {
    auto g = [&](double x) {
        const double v = f(x);
        if (std::isnan(v)) {
            std::ostringstream os;
            os << "NaN integrand at x = " << x;
            fail(ErrorKind::evaluation, os.str());
        }
        if (v < 0) {
            std::ostringstream os;
            os << "negative integrand sample f(" << x << ") = " << v;
            fail(ErrorKind::precondition, os.str());
        }
        return v == 0 ? -kInf : std::log(v);
    };
    return improper_log_integral(g, a, policy, dir);
}

// ---------------------------------------------------------------------------
// Interpolation tables

/// Cubic Hermite interpolation on a uniform grid from values and derivatives.
class HermiteTable {
public:
    HermiteTable() = default;
    HermiteTable(double lo, double h, std::vector<double> values, std::vector<double> derivs)
        : lo_(lo), h_(h), v_(std::move(values)), d_(std::move(derivs)) {}

    bool empty() const { return v_.empty(); }
    double lo() const { return lo_; }
    double hi() const { return lo_ + h_ * static_cast<double>(v_.size() - 1); }
    double step() const { return h_; }
    bool contains(double x) const { return !v_.empty() && x >= lo_ && x <= hi(); }
    const std::vector<double>& values() const { return v_; }

    double operator()(double x) const {
        std::size_t i;
        double t;
        locate(x, i, t);
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * v_[i] + (t3 - 2 * t2 + t) * h_ * d_[i] +
               (-2 * t3 + 3 * t2) * v_[i + 1] + (t3 - t2) * h_ * d_[i + 1];
    }

    double derivative(double x) const {
        std::size_t i;
        double t;
        locate(x, i, t);
        const double t2 = t * t;
        return ((6 * t2 - 6 * t) * v_[i] + (-6 * t2 + 6 * t) * v_[i + 1]) / h_ +
               (3 * t2 - 4 * t + 1) * d_[i] + (3 * t2 - 2 * t) * d_[i + 1];
    }

private:
    void locate(double x, std::size_t& i, double& t) const {
        const double u = (x - lo_) / h_;
        const auto n = v_.size() - 1;
        double fl = std::floor(u);
        if (fl < 0) fl = 0;
        if (fl > static_cast<double>(n - 1)) fl = static_cast<double>(n - 1);
        i = static_cast<std::size_t>(fl);
        t = u - fl;
    }

    double lo_ = 0, h_ = 1;
    std::vector<double> v_, d_;
};

/// Cumulative integral table F(x) = ∫_lo^x f on a uniform grid, GK21 per cell.
inline HermiteTable cumulative_table(const RealFn& f, double lo, double hi, std::size_t cells,
                                     double rtol = 1e-12) {
    const double h = (hi - lo) / static_cast<double>(cells);
    std::vector<double> v(cells + 1), d(cells + 1);
    double acc = 0.0;
    for (std::size_t i = 0; i <= cells; ++i) {
        const double x = lo + h * static_cast<double>(i);
        if (i > 0) acc += integrate(f, x - h, x, rtol).value;
        v[i] = acc;
        d[i] = f(x);
    }
    return HermiteTable(lo, h, std::move(v), std::move(d));
}

/// Values-only cubic interpolation on a uniform grid with an exact fallback
/// outside the tabulated interior. Used to speed up per-step path evaluations.
class FastFn {
public:
    FastFn() = default;
    FastFn(RealFn exact, double lo, double hi, std::size_t cells) : exact_(std::move(exact)), lo_(lo) {
        h_ = (hi - lo) / static_cast<double>(cells);
        inv_h_ = 1.0 / h_;
        v_.resize(cells + 1);
        for (std::size_t i = 0; i <= cells; ++i) v_[i] = exact_(lo + h_ * static_cast<double>(i));
        lo_in_ = lo + h_;
        hi_in_ = hi - 2 * h_;
    }
    explicit FastFn(RealFn exact) : exact_(std::move(exact)) {}

    double operator()(double x) const {
        if (v_.empty() || !(x >= lo_in_ && x < hi_in_)) return exact_(x);
        const double u = (x - lo_) * inv_h_;
        const auto i = static_cast<std::size_t>(u);
        const double t = u - static_cast<double>(i);
        const double p0 = v_[i - 1], p1 = v_[i], p2 = v_[i + 1], p3 = v_[i + 2];
        // cubic Lagrange through the four neighbouring nodes
        const double tm = t - 1.0, tp = t + 1.0, t2 = t - 2.0;
        return (-t * tm * t2 * p0 + 3.0 * tp * tm * t2 * p1 - 3.0 * tp * t * t2 * p2 + tp * t * tm * p3) /
               6.0;
    }

    const RealFn& exact() const { return exact_; }

private:
    RealFn exact_;
    double lo_ = 0, h_ = 1, inv_h_ = 1, lo_in_ = 0, hi_in_ = 0;
    std::vector<double> v_;
};

}  // namespace scaleclock
