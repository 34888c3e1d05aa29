#pragma once

// Density-based measures and scale functions on (0, ∞).

#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "errors.hpp"
#include "quadrature.hpp"

namespace scaleclock {

namespace detail {

inline RealFn log_of(const RealFn& f) {
    return [f](double x) {
        const double v = f(x);
        return v > 0 ? std::log(v) : (v == 0 ? -kInf : kNaN);
    };
}

inline RealFn exp_of(const RealFn& g) {
    return [g](double x) { return std::exp(g(x)); };
}

inline void check_finite(double v, double x, const char* what) {
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os << what << " is not finite at x = " << x;
        fail(ErrorKind::evaluation, os.str());
    }
}

}  // namespace detail

/// Absolutely continuous measure m(dx) = density(x) dx on (0, ∞).
class Measure1D {
public:
    Measure1D() = default;

    /// Either function may be empty; the other is derived from it.
    Measure1D(RealFn density, RealFn log_density) {
        require(static_cast<bool>(density) || static_cast<bool>(log_density), ErrorKind::parameter,
                "measure needs a density");
        density_ = density ? std::move(density) : detail::exp_of(log_density);
        log_density_ = log_density ? std::move(log_density) : detail::log_of(density_);
    }

    /// Closed-form m(0, x).
    Measure1D& with_cumulative(RealFn cumulative) {
        cumulative_ = std::move(cumulative);
        return *this;
    }
    /// Closed-form log m(x, ∞).
    Measure1D& with_log_tail(RealFn log_tail) {
        log_tail_ = std::move(log_tail);
        return *this;
    }

    double density(double x) const { return density_(x); }
    double log_density(double x) const { return log_density_(x); }
    const RealFn& density_fn() const { return density_; }
    const RealFn& log_density_fn() const { return log_density_; }
    bool has_cumulative() const { return static_cast<bool>(cumulative_); }
    bool has_log_tail() const { return static_cast<bool>(log_tail_); }

    /// m(a, b) for 0 <= a <= b <= ∞; +inf when an infinite tail diverges.
    double mass(double a, double b, double rtol = 1e-9) const {
        require(a >= 0 && a <= b, ErrorKind::precondition, "mass(a,b) needs 0 <= a <= b");
        if (a == b) return 0.0;
        if (b == kInf) {
            const double lt = log_tail(a > 0 ? a : 0.0);
            return std::exp(lt);
        }
        if (cumulative_) return (*cumulative_)(b) - (*cumulative_)(a);
        auto f = [this](double x) {
            const double v = density_(x);
            detail::check_finite(v, x, "speed density");
            return v;
        };
        return integrate(f, a, b, rtol).value;
    }

    /// m(a, ∞) as an improper integral with divergence detection.
    IntegralOutcome tail(double a, const DivergencePolicy& policy = {}) const {
        if (log_tail_) {
            IntegralOutcome out;
            const double lt = (*log_tail_)(a);
            if (lt == kInf) {
                out.status = IntegralStatus::divergent;
                out.log_value = kInf;
            } else {
                out.log_value = lt;
                out.value = std::exp(lt);
            }
            return out;
        }
        const double anchor = a > 0 ? a : 1.0;
        IntegralOutcome out = improper_log_integral(log_density_, anchor, policy);
        if (a == 0 && out.finite()) {
            const double head = mass(0.0, 1.0);
            out.value += head;
            out.log_value = std::log(out.value);
        }
        return out;
    }

    /// log m(a, ∞); +inf when divergent.
    double log_tail(double a) const {
        if (log_tail_) return (*log_tail_)(a);
        const IntegralOutcome o = tail(a);
        return o.finite() ? o.log_value : kInf;
    }

private:
    RealFn density_, log_density_;
    std::optional<RealFn> cumulative_, log_tail_;
};

/// Strictly increasing scale function with s(anchor) = 0 (anchor is 0 for
/// base diffusions). Right-derivative and value may be given in closed form;
/// missing pieces are derived numerically.
class ScaleFn {
public:
    struct Parts {
        RealFn slope;       ///< s'(x)
        RealFn log_slope;   ///< log s'(x)
        RealFn dlog_slope;  ///< d/dx log s'(x)
        RealFn value;       ///< s(x)
        RealFn log_value;   ///< log s(x) for x > anchor
        RealFn inverse;     ///< s^{-1}(ξ)
    };

    ScaleFn() : ScaleFn(natural()) {}

    ScaleFn(Parts parts, double anchor = 0.0, bool natural = false)
        : p_(std::move(parts)), anchor_(anchor), natural_(natural) {
        require(static_cast<bool>(p_.slope) || static_cast<bool>(p_.log_slope), ErrorKind::parameter,
                "scale function needs a derivative");
        if (!p_.slope) p_.slope = detail::exp_of(p_.log_slope);
        if (!p_.log_slope) p_.log_slope = detail::log_of(p_.slope);
    }

    static ScaleFn natural() {
        Parts p;
        p.slope = [](double) { return 1.0; };
        p.log_slope = [](double) { return 0.0; };
        p.dlog_slope = [](double) { return 0.0; };
        p.value = [](double x) { return x; };
        p.log_value = [](double x) { return std::log(x); };
        p.inverse = [](double xi) { return xi; };
        return ScaleFn(std::move(p), 0.0, true);
    }

    /// Tabulate s on [anchor, hi] for fast evaluation where no closed form exists.
    ScaleFn& with_table(double hi, std::size_t cells) {
        if (!p_.value) {
            auto t = std::make_shared<HermiteTable>(cumulative_table(p_.slope, anchor_, hi, cells));
            table_ = t;
        }
        return *this;
    }

    bool is_natural() const { return natural_; }
    double anchor() const { return anchor_; }

    double slope(double x) const { return p_.slope(x); }
    double log_slope(double x) const { return p_.log_slope(x); }

    double dlog_slope(double x) const {
        if (p_.dlog_slope) return p_.dlog_slope(x);
        const double h = 1e-5 * std::max(1.0, std::abs(x));
        return (p_.log_slope(x + h) - p_.log_slope(x - h)) / (2 * h);
    }

    double value(double x) const {
        if (p_.value) return p_.value(x);
        if (x == anchor_) return 0.0;
        if (table_ && table_->contains(x)) return (*table_)(x);
        if (table_ && x > table_->hi())
            return (*table_)(table_->hi()) + integrate(p_.slope, table_->hi(), x, 1e-12).value;
        return integrate(p_.slope, anchor_, x, 1e-12).value;
    }

    double log_value(double x) const {
        if (p_.log_value) return p_.log_value(x);
        return std::log(value(x));
    }

    double inverse(double xi) const {
        if (p_.inverse) return p_.inverse(xi);
        if (xi == 0.0) return anchor_;
        // bracket then safeguarded Newton
        double lo = anchor_, hi = anchor_ + 1.0;
        if (xi < 0) {
            hi = anchor_;
            lo = anchor_ - 1.0;
            while (value(lo) > xi) lo = anchor_ - 2 * (anchor_ - lo);
        } else {
            int guard = 0;
            while (value(hi) < xi) {
                hi = anchor_ + 2 * (hi - anchor_);
                require(++guard < 200, ErrorKind::numerical, "scale inverse: cannot bracket value");
            }
        }
        double x = 0.5 * (lo + hi);
        for (int it = 0; it < 200; ++it) {
            const double f = value(x) - xi;
            if (f > 0) hi = x; else lo = x;
            const double d = slope(x);
            double nx = x - f / d;
            if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
            if (std::abs(nx - x) <= 1e-15 * std::max(1.0, std::abs(x))) return nx;
            x = nx;
        }
        return x;
    }

    const Parts& parts() const { return p_; }

private:
    Parts p_;
    double anchor_ = 0.0;
    bool natural_ = false;
    std::shared_ptr<const HermiteTable> table_;
};

}  // namespace scaleclock
