#pragma once

// Eigenfunctions ψ_λ of d/dm d⁺/ds, the bottom of the spectrum λ₀, Laplace
// transforms of hitting times and quasi-stationary densities.

#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "diffusion.hpp"
#include "errors.hpp"
#include "quadrature.hpp"
#include "special.hpp"

namespace scaleclock {

enum class EigenSource { solver, closed_form };

/// ψ_λ with ψ_λ(0) = 0 and right-derivative s'(0) at 0, evaluated in x.
class EigenFn {
public:
    struct Parts {
        RealFn value;     ///< ψ(x)
        RealFn log_value; ///< log ψ(x), x > 0
        RealFn slope;     ///< dψ/dx
        RealFn dlog;      ///< ψ_x/ψ, x > 0
    };

    EigenFn(double lambda, EigenSource source, Parts parts, RealFn log_scale_slope, double l_max,
            std::vector<double> grid = {})
        : lambda_(lambda), source_(source), p_(std::move(parts)), log_s_(std::move(log_scale_slope)),
          l_max_(l_max), grid_(std::move(grid)) {}

    double lambda() const { return lambda_; }
    EigenSource source() const { return source_; }
    double l_max() const { return l_max_; }
    const std::vector<double>& grid() const { return grid_; }

    double value(double x) const {
        check_range(x);
        return p_.value(x);
    }
    /// log ψ(x); solver-based functions extrapolate log-linearly past L_max.
    double log_value(double x) const {
        if (x <= 0) return -kInf;
        return p_.log_value(x);
    }
    double slope(double x) const {
        check_range(x);
        return p_.slope(x);
    }
    /// Right-derivative with respect to the scale, ψ⁺ = ψ_x / s'.
    double right_derivative(double x) const { return slope(x) / std::exp(log_s_(x)); }
    double log_derivative(double x) const { return p_.dlog(x); }
    /// log ψ⁺(x) computed without forming ψ or s' separately.
    double log_right_derivative(double x) const {
        if (x <= 0) return std::log(right_derivative(0.0));
        return p_.log_value(x) + std::log(p_.dlog(x)) - log_s_(x);
    }

private:
    void check_range(double x) const {
        if (source_ == EigenSource::solver && x > l_max_ * (1 + 1e-12)) {
            std::ostringstream os;
            os << "psi evaluated at x = " << x << " beyond the solver range L_max = " << l_max_;
            fail(ErrorKind::range, os.str());
        }
    }

    double lambda_;
    EigenSource source_;
    Parts p_;
    RealFn log_s_;
    double l_max_;
    std::vector<double> grid_;
};

// ---------------------------------------------------------------------------
// Closed forms

inline EigenFn closed_form_psi(const DiffusionSpec& spec, double lambda) {
    require(spec.builtin.has_value(), ErrorKind::precondition, "closed_form_psi needs a builtin spec");
    const double c = spec.builtin->c;
    const RealFn log_s = [s = spec.scale](double x) { return s.log_slope(x); };
    EigenFn::Parts p;
    if (spec.builtin->kind == BuiltinKind::bm_drift) {
        const double k2 = c * c + 2 * lambda;
        if (k2 < -1e-12 * c * c) {
            std::ostringstream os;
            os << "psi_lambda for bm_drift needs lambda >= -c^2/2, got " << lambda;
            fail(ErrorKind::range, os.str());
        }
        const double k = std::sqrt(std::max(k2, 0.0));
        p.value = [c, k](double x) { return std::exp(c * x) * x * special::sinhc(k * x); };
        p.log_value = [c, k](double x) { return c * x + std::log(x) + special::log_sinhc(k * x); };
        p.slope = [c, k](double x) {
            return std::exp(c * x) * (c * x * special::sinhc(k * x) + std::cosh(k * x));
        };
        p.dlog = [c, k](double x) { return c + special::t_coth(k * x) / x; };
    } else {
        if (lambda < -c * (1 + 1e-12)) {
            std::ostringstream os;
            os << "psi_lambda for ou needs lambda >= -c, got " << lambda;
            fail(ErrorKind::range, os.str());
        }
        const double a = std::max(lambda / (2 * c) + 0.5, 0.0);
        const double b = 1.5;
        p.value = [a, b, c](double x) { return x * special::kummer_m(a, b, c * x * x); };
        p.log_value = [a, b, c](double x) { return std::log(x) + special::log_kummer_m(a, b, c * x * x); };
        p.dlog = [a, b, c](double x) {
            if (a == 0.0) return 1.0 / x;
            return 1.0 / x + 2 * c * x * (a / b) * special::kummer_shift_ratio(a, b, c * x * x);
        };
        p.slope = [a, b, c](double x) {
            const double z = c * x * x;
            const double m = special::kummer_m(a, b, z);
            if (a == 0.0 || x == 0.0) return m;
            return m + 2 * z * (a / b) * special::kummer_m(a + 1, b + 1, z);
        };
    }
    return EigenFn(lambda, EigenSource::closed_form, std::move(p), log_s, kInf);
}

// ---------------------------------------------------------------------------
// ODE solver: u' = w, w' = (log s')' w + λ s' m' u, u(0) = 0, w(0) = s'(0)

namespace detail {

// The state is carried in long double: ψ_{−λ₀} is the subdominant solution and
// rounding in the state excites the growing one.
using Wide = long double;

struct PsiRhs {
    const DiffusionSpec& spec;
    double lambda;
    void operator()(Wide x, Wide u, Wide w, Wide& du, Wide& dw) const {
        const double xd = static_cast<double>(x);
        du = w;
        dw = Wide(spec.scale.dlog_slope(xd)) * w + Wide(lambda) * Wide(std::exp(spec.log_slope_speed(xd))) * u;
    }
};

inline void rk4_step(const PsiRhs& f, Wide x, Wide h, Wide& u, Wide& w) {
    Wide k1u, k1w, k2u, k2w, k3u, k3w, k4u, k4w;
    f(x, u, w, k1u, k1w);
    f(x + h / 2, u + h / 2 * k1u, w + h / 2 * k1w, k2u, k2w);
    f(x + h / 2, u + h / 2 * k2u, w + h / 2 * k2w, k3u, k3w);
    f(x + h, u + h * k3u, w + h * k3w, k4u, k4w);
    u += h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
    w += h / 6 * (k1w + 2 * k2w + 2 * k3w + k4w);
}

}  // namespace detail

inline EigenFn solve_psi(const DiffusionSpec& spec, double lambda, double l_max, std::size_t n_grid = 20000) {
    require(n_grid >= 100, ErrorKind::parameter, "solve_psi needs n_grid >= 100");
    require(l_max > 0 && std::isfinite(l_max), ErrorKind::parameter, "solve_psi needs L_max > 0");
    const detail::Wide h = detail::Wide(l_max) / static_cast<detail::Wide>(n_grid);
    std::vector<double> xs(n_grid + 1), u(n_grid + 1), w(n_grid + 1), wp(n_grid + 1);
    const detail::PsiRhs rhs{spec, lambda};
    detail::Wide uu = 0, ww = spec.scale.slope(0.0);
    for (std::size_t i = 0; i <= n_grid; ++i) {
        const detail::Wide x = h * static_cast<detail::Wide>(i);
        xs[i] = static_cast<double>(x);
        u[i] = static_cast<double>(uu);
        w[i] = static_cast<double>(ww);
        detail::Wide du, dw;
        rhs(x, uu, ww, du, dw);
        wp[i] = static_cast<double>(dw);
        if (!std::isfinite(u[i]) || !std::isfinite(w[i]) || !std::isfinite(wp[i])) {
            std::ostringstream os;
            os << "psi_" << lambda << " overflows at x = " << xs[i] << "; use a smaller L_max";
            fail(ErrorKind::range, os.str());
        }
        if (i < n_grid) detail::rk4_step(rhs, x, h, uu, ww);
    }
    auto tu = std::make_shared<HermiteTable>(0.0, static_cast<double>(h), u, w);
    auto tw = std::make_shared<HermiteTable>(0.0, static_cast<double>(h), w, wp);
    const double l_log = std::log(u.back());
    const double l_dlog = w.back() / u.back();
    EigenFn::Parts p;
    p.value = [tu](double x) { return (*tu)(x); };
    p.slope = [tw](double x) { return (*tw)(x); };
    p.log_value = [tu, l_max, l_log, l_dlog](double x) {
        if (x <= l_max) return std::log((*tu)(x));
        return l_log + l_dlog * (x - l_max);
    };
    p.dlog = [tu, tw, l_max, l_dlog](double x) {
        if (x <= l_max) return (*tw)(x) / (*tu)(x);
        return l_dlog;
    };
    const RealFn log_s = [s = spec.scale](double x) { return s.log_slope(x); };
    return EigenFn(lambda, EigenSource::solver, std::move(p), log_s, l_max, std::move(xs));
}

/// Closed form for builtins, ODE solution on [0, extent] otherwise.
inline EigenFn psi_for(const DiffusionSpec& spec, double lambda) {
    if (spec.builtin) return closed_form_psi(spec, lambda);
    const auto n = static_cast<std::size_t>(std::max(20000.0, 2000.0 * spec.extent));
    return solve_psi(spec, lambda, spec.extent, n);
}

// ---------------------------------------------------------------------------
// λ₀

struct Lambda0Estimate {
    double value = kNaN;
    double lo = kNaN, hi = kNaN;
    double l_max = kNaN;
    /// bracket obtained with 2·L_max and whether it overlaps the first one
    double lo_2l = kNaN, hi_2l = kNaN;
    bool horizon_stable = false;
};

/// Does ψ_{−λ} stay strictly positive on (0, L]? Rescaled RK4 in x.
inline bool psi_stays_positive(const DiffusionSpec& spec, double lambda, double l_max) {
    const detail::PsiRhs rhs{spec, -lambda};
    detail::Wide u = 0, w = spec.scale.slope(0.0), x = 0;
    while (x < l_max) {
        const double xd = static_cast<double>(x);
        const double rate =
            std::abs(spec.scale.dlog_slope(xd)) + std::sqrt(std::abs(lambda) * std::exp(spec.log_slope_speed(xd)));
        const detail::Wide h = std::min(detail::Wide(std::min(0.05, 0.1 / std::max(rate, 1e-12))), detail::Wide(l_max) - x);
        detail::rk4_step(rhs, x, h, u, w);
        x += h;
        if (!(u > 0)) return false;
        const detail::Wide size = std::abs(u) + std::abs(w);
        if (size > 1e200L || size < 1e-200L) {
            u /= size;
            w /= size;
        }
    }
    return true;
}

inline Lambda0Estimate estimate_lambda0(const DiffusionSpec& spec, double tol = 1e-4, double l_max = 0.0) {
    require(tol > 0, ErrorKind::parameter, "lambda0 tolerance must be positive");
    if (l_max <= 0) l_max = spec.lambda0_horizon;
    const PositivityEvidence ev = lambda0_positivity_check(to_natural_scale(spec).spec);
    if (!ev.holds) fail(ErrorKind::precondition, "lambda0 positivity check fails: " + ev.reason);

    double hi0 = 1.0;
    while (psi_stays_positive(spec, hi0, l_max)) {
        hi0 *= 2;
        if (hi0 > 1e6) fail(ErrorKind::range, "psi_{-lambda} positive up to the search bound 1e6; increase the bound");
    }
    auto bisect = [&](double L, double& lo, double& hi) {
        lo = 0.0;
        hi = hi0;
        while (hi - lo > 0.5 * tol) {
            const double mid = 0.5 * (lo + hi);
            (psi_stays_positive(spec, mid, L) ? lo : hi) = mid;
        }
    };
    Lambda0Estimate est;
    est.l_max = l_max;
    bisect(l_max, est.lo, est.hi);
    est.value = 0.5 * (est.lo + est.hi);
    bisect(2 * l_max, est.lo_2l, est.hi_2l);
    est.horizon_stable = est.lo_2l < est.hi && est.lo < est.hi_2l;
    return est;
}

/// λ₀ from the analytic value for builtins, by bisection otherwise.
inline double lambda0_of(const DiffusionSpec& spec) {
    if (auto l = builtin_lambda0(spec)) return *l;
    return estimate_lambda0(spec).value;
}

// ---------------------------------------------------------------------------
// Laplace transforms

/// E_x[e^{−βT₀}] = ψ_β(x) ∫_x^∞ ds(y)/ψ_β(y)², β > −λ₀.
inline double laplace_T0(const DiffusionSpec& spec, double beta, double x) {
    require(x > 0, ErrorKind::parameter, "laplace_T0 needs x > 0");
    const double l0 = lambda0_of(spec);
    if (!(beta > -l0)) {
        std::ostringstream os;
        os << "laplace_T0 needs beta > -lambda0 = " << -l0 << ", got " << beta;
        fail(ErrorKind::range, os.str());
    }
    const EigenFn psi = psi_for(spec, beta);
    auto g = [&](double y) { return spec.scale.log_slope(y) - 2 * psi.log_value(y); };
    const IntegralOutcome tail = improper_log_integral(g, x);
    if (tail.divergent()) {
        if (beta >= 0) fail(ErrorKind::numerical, "tail integral for laplace_T0 diverged (solver failure)");
        fail(ErrorKind::range, "tail integral for laplace_T0 diverged");
    }
    return std::exp(psi.log_value(x) + tail.log_value);
}

/// E_x^[ψ_{−λ}][e^{−βT_y}] = ψ_{β−λ}(x)ψ_{−λ}(y) / (ψ_{−λ}(x)ψ_{β−λ}(y)).
inline double laplace_hit_htransform(const DiffusionSpec& spec, double lambda, double beta, double x, double y) {
    require(beta >= 0, ErrorKind::parameter, "beta must be >= 0");
    require(x >= 0 && y >= x, ErrorKind::parameter, "need 0 <= x <= y");
    const double l0 = lambda0_of(spec);
    require(lambda > 0 && lambda <= l0 * (1 + 1e-12), ErrorKind::range, "lambda must lie in (0, lambda0]");
    if (beta - lambda < -l0 * (1 + 1e-12)) fail(ErrorKind::range, "beta - lambda < -lambda0");
    if (beta == 0 || x == y) return 1.0;
    const EigenFn num = psi_for(spec, beta - lambda);
    const EigenFn den = psi_for(spec, -lambda);
    const double at_x = x == 0 ? 0.0 : num.log_value(x) - den.log_value(x);
    return std::exp(at_x + den.log_value(y) - num.log_value(y));
}

// ---------------------------------------------------------------------------
// Quasi-stationary densities

struct QsdDensity {
    double lambda;
    RealFn density;      ///< λψ_{−λ}(x) m'(x), Lebesgue density
    RealFn log_density;
    RealFn log_survival; ///< log ν_λ(x, ∞) = log ψ⁺_{−λ}(x)
    double mass;
};

inline QsdDensity qsd_density(const DiffusionSpec& spec, double lambda) {
    const double l0 = lambda0_of(spec);
    require(lambda > 0 && lambda <= l0 * (1 + 1e-9), ErrorKind::range, "qsd needs lambda in (0, lambda0]");
    auto psi = std::make_shared<EigenFn>(psi_for(spec, -lambda));
    const Measure1D m = spec.speed;
    QsdDensity q;
    q.lambda = lambda;
    q.log_density = [psi, m, lambda](double x) {
        if (x <= 0) return -kInf;
        return std::log(lambda) + psi->log_value(x) + m.log_density(x);
    };
    const RealFn ld = q.log_density;
    q.density = [ld](double x) { return std::exp(ld(x)); };
    q.log_survival = [psi](double x) { return x <= 0 ? 0.0 : psi->log_right_derivative(x); };
    const double head = integrate(q.density, 0.0, 1.0, 1e-12).value;
    const IntegralOutcome tail = improper_log_integral(ld, 1.0);
    if (tail.divergent()) fail(ErrorKind::numerical, "qsd density is not integrable");
    q.mass = head + tail.value;
    if (std::abs(q.mass - 1.0) > 1e-4) {
        std::ostringstream os;
        os << "qsd normalization check failed: mass = " << q.mass;
        fail(ErrorKind::numerical, os.str());
    }
    return q;
}

}  // namespace scaleclock
