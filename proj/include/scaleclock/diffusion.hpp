#pragma once

// Diffusion specifications on [0, ∞) with generator d/dm d⁺/ds, the two
// worked examples, Feller boundary classification and natural-scale change.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "measures.hpp"
#include "quadrature.hpp"
#include "special.hpp"

namespace scaleclock {

/// dX = b(X) dt + σ(X) dB.
struct SdeForm {
    RealFn drift;
    RealFn sigma;
};

enum class BuiltinKind { bm_drift, ou };

struct Builtin {
    BuiltinKind kind;
    double c;
};

struct DiffusionSpec {
    ScaleFn scale;
    Measure1D speed;
    std::optional<SdeForm> sde;
    std::optional<RealFn> killing;  ///< non-negative rate per time
    std::string label;
    std::optional<Builtin> builtin;
    double extent = 20.0;           ///< working range in x for tables and grids
    double lambda0_horizon = 20.0;  ///< default L_max for the λ₀ bisection

    /// log(s'(x) m'(x)).
    double log_slope_speed(double x) const { return scale.log_slope(x) + speed.log_density(x); }
};

inline std::string fmt_param(double c) {
    std::ostringstream os;
    os << c;
    return os.str();
}

/// Checks σ² m' s' = 2, constancy of s'·exp(∫2b/σ²) and k >= 0 on a grid.
inline void validate_spec(const DiffusionSpec& spec, double lo = 0.01, double hi = 10.0,
                          std::size_t n = 200, double tol = 1e-6) {
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) grid[i] = lo + (hi - lo) * static_cast<double>(i) / n;
    if (spec.sde) {
        const auto& sde = *spec.sde;
        double acc = 0.0;
        const double ls0 = spec.scale.log_slope(grid[0]);
        for (std::size_t i = 0; i <= n; ++i) {
            const double x = grid[i];
            const double sig = sde.sigma(x);
            const double prod = std::exp(2 * std::log(sig) + spec.log_slope_speed(x) - std::log(2.0));
            if (!(std::abs(prod - 1.0) <= tol)) {
                std::ostringstream os;
                os << "sde inconsistent with (scale, speed): sigma^2 m' s' / 2 = " << prod << " at x = " << x;
                fail(ErrorKind::parameter, os.str());
            }
            if (i > 0) {
                auto f = [&](double y) {
                    const double s = sde.sigma(y);
                    return 2 * sde.drift(y) / (s * s);
                };
                acc += integrate(f, grid[i - 1], x, 1e-12).value;
                const double ls = spec.scale.log_slope(x);
                const double dev = ls - ls0 + acc;
                if (!(std::abs(dev) <= tol * (1.0 + std::abs(ls - ls0)))) {
                    std::ostringstream os;
                    os << "sde drift inconsistent with scale: log s'(x) + int 2b/sigma^2 drifts by " << dev
                       << " at x = " << x;
                    fail(ErrorKind::parameter, os.str());
                }
            }
        }
    }
    if (spec.killing) {
        for (double x : grid) {
            const double k = (*spec.killing)(x);
            if (!(k >= 0)) {
                std::ostringstream os;
                os << "killing rate negative or undefined at x = " << x;
                fail(ErrorKind::parameter, os.str());
            }
        }
    }
}

/// Brownian motion with drift −c: dm = 2e^{−2cx}dx, ds = e^{2cx}dx.
inline DiffusionSpec make_bm_drift(double c) {
    require(c > 0 && std::isfinite(c), ErrorKind::parameter, "bm_drift needs c > 0");
    ScaleFn::Parts sp;
    sp.slope = [c](double x) { return std::exp(2 * c * x); };
    sp.log_slope = [c](double x) { return 2 * c * x; };
    sp.dlog_slope = [c](double) { return 2 * c; };
    sp.value = [c](double x) { return std::expm1(2 * c * x) / (2 * c); };
    sp.log_value = [c](double x) {
        const double t = 2 * c * x;
        if (t < 30) return std::log(std::expm1(t) / (2 * c));
        return t - std::log(2 * c) + std::log1p(-std::exp(-t));
    };
    sp.inverse = [c](double xi) { return std::log1p(2 * c * xi) / (2 * c); };

    DiffusionSpec spec;
    spec.scale = ScaleFn(std::move(sp));
    spec.speed = Measure1D([c](double x) { return 2 * std::exp(-2 * c * x); },
                           [c](double x) { return std::log(2.0) - 2 * c * x; });
    spec.speed.with_cumulative([c](double x) { return -std::expm1(-2 * c * x) / c; })
        .with_log_tail([c](double x) { return -2 * c * x - std::log(c); });
    spec.sde = SdeForm{[c](double) { return -c; }, [](double) { return 1.0; }};
    spec.label = "bm_drift(" + fmt_param(c) + ")";
    spec.builtin = Builtin{BuiltinKind::bm_drift, c};
    spec.extent = 30.0 / std::min(c, 1.0);
    spec.lambda0_horizon = 1e4;
    return spec;
}

namespace detail {

/// log ∫₀^x e^{cu²} du for c x² large, from the Dawson-function expansion.
inline double ou_log_scale_asymptotic(double c, double x) {
    const double y2 = c * x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double next = term * (2 * k - 1) / (2 * y2);
        if (next > term) break;
        term = next;
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return y2 - std::log(2 * c * x) + std::log(sum);
}

}  // namespace detail

/// Ornstein-Uhlenbeck process dX = dB − cX dt: dm = 2e^{−cx²}dx, ds = e^{cx²}dx.
inline DiffusionSpec make_ou(double c) {
    require(c > 0 && std::isfinite(c), ErrorKind::parameter, "ou needs c > 0");
    const double rc = std::sqrt(c);
    // s has no elementary antiderivative: tabulate up to c x² = 40 and use the
    // asymptotic expansion beyond
    const double x_switch = std::sqrt(40.0 / c);
    auto table = std::make_shared<HermiteTable>(
        cumulative_table([c](double x) { return std::exp(c * x * x); }, 0.0, x_switch,
                         static_cast<std::size_t>(std::ceil(x_switch * 2000)), 1e-13));
    ScaleFn::Parts sp;
    sp.slope = [c](double x) { return std::exp(c * x * x); };
    sp.log_slope = [c](double x) { return c * x * x; };
    sp.dlog_slope = [c](double x) { return 2 * c * x; };
    sp.value = [c, table, x_switch](double x) {
        if (x <= x_switch) return (*table)(x);
        return std::exp(detail::ou_log_scale_asymptotic(c, x));
    };
    sp.log_value = [c, table, x_switch](double x) {
        if (x <= x_switch) return std::log((*table)(x));
        return detail::ou_log_scale_asymptotic(c, x);
    };

    DiffusionSpec spec;
    spec.scale = ScaleFn(std::move(sp));
    spec.speed = Measure1D([c](double x) { return 2 * std::exp(-c * x * x); },
                           [c](double x) { return std::log(2.0) - c * x * x; });
    spec.speed.with_cumulative([rc](double x) { return std::sqrt(M_PI) / rc * std::erf(rc * x); })
        .with_log_tail([rc](double x) { return std::log(std::sqrt(M_PI) / rc) + special::log_erfc(rc * x); });
    spec.sde = SdeForm{[c](double x) { return -c * x; }, [](double) { return 1.0; }};
    spec.label = "ou(" + fmt_param(c) + ")";
    spec.builtin = Builtin{BuiltinKind::ou, c};
    spec.extent = 10.0 / rc;
    spec.lambda0_horizon = 10.0 / rc;
    return spec;
}

/// Analytic bottom of the spectrum for the builtins.
inline std::optional<double> builtin_lambda0(const DiffusionSpec& spec) {
    if (!spec.builtin) return std::nullopt;
    const double c = spec.builtin->c;
    return spec.builtin->kind == BuiltinKind::bm_drift ? c * c / 2 : c;
}

// ---------------------------------------------------------------------------
// Feller classification

enum class Boundary { zero, infinity };
enum class BoundaryKind { regular, exit, entrance, natural };

inline const char* to_string(BoundaryKind k) {
    switch (k) {
        case BoundaryKind::regular: return "regular";
        case BoundaryKind::exit: return "exit";
        case BoundaryKind::entrance: return "entrance";
        case BoundaryKind::natural: return "natural";
    }
    return "?";
}

struct BoundaryClass {
    BoundaryKind kind;
    IntegralOutcome I;
    IntegralOutcome J;
};

inline BoundaryKind feller_kind(bool i_finite, bool j_finite) {
    if (i_finite) return j_finite ? BoundaryKind::regular : BoundaryKind::entrance;
    return j_finite ? BoundaryKind::exit : BoundaryKind::natural;
}

namespace detail {

/// ∫ dA(x) B(boundary, x) near the boundary, both given as log densities.
/// closed_inner, when set, is log B(boundary, x) in closed form.
inline IntegralOutcome feller_integral(const RealFn& log_outer, const RealFn& log_inner, Boundary which,
                                       double c_ref, const DivergencePolicy& policy,
                                       const RealFn& closed_inner = {}) {
    const Toward dir = which == Boundary::zero ? Toward::zero : Toward::infinity;
    // nested quadrature: the outer tolerance must sit well above the inner noise
    DivergencePolicy outer_policy = policy;
    outer_policy.rtol = std::max(policy.rtol, 1e-8);
    DivergencePolicy inner_policy = policy;
    inner_policy.threshold = kInf;
    inner_policy.rtol = std::min(policy.rtol, 1e-12);
    IntegralOutcome divergent;
    divergent.status = IntegralStatus::divergent;
    divergent.log_value = kInf;
    if (closed_inner) {
        if (!(closed_inner(c_ref) < kInf)) return divergent;
        auto integrand = [&](double x) { return log_outer(x) + closed_inner(x); };
        return improper_log_integral(integrand, c_ref, outer_policy, dir);
    }
    // the inner integral is monotone in x, so its finiteness is decided once at c_ref
    const IntegralOutcome at_ref = improper_log_integral(log_inner, c_ref, policy, dir);
    if (at_ref.divergent()) {
        divergent.evidence = at_ref.evidence;
        return divergent;
    }
    // inner tails are cached at dyadic anchors c_ref·2^k, so each evaluation
    // is one finite integral plus a cached tail
    std::map<int, double> tails;
    auto log_tail_at = [&](int k) {
        if (auto it = tails.find(k); it != tails.end()) return it->second;
        const IntegralOutcome in = improper_log_integral(log_inner, std::ldexp(c_ref, k), inner_policy, dir);
        return tails[k] = in.divergent() ? kInf : in.log_value;
    };
    auto integrand = [&](double x) {
        const double q = std::log2(x / c_ref);
        int k = dir == Toward::infinity ? static_cast<int>(std::ceil(q)) : static_cast<int>(std::floor(q));
        double a = std::ldexp(c_ref, k);
        if (dir == Toward::infinity && a < x) a = std::ldexp(c_ref, ++k);
        if (dir == Toward::zero && a > x) a = std::ldexp(c_ref, --k);
        const double tail = log_tail_at(k);
        if (!(tail < kInf)) return kInf;
        const double head = a == x ? -kInf
                                   : log_integrate(log_inner, std::min(a, x), std::max(a, x), inner_policy.rtol).log_value;
        return log_outer(x) + log_add(head, tail);
    };
    return improper_log_integral(integrand, c_ref, outer_policy, dir);
}

}  // namespace detail

/// Feller's I and J at the requested boundary with divergence detection.
inline BoundaryClass classify_boundary(const DiffusionSpec& spec, Boundary which, double c_ref = 1.0,
                                       const DivergencePolicy& policy = {}) {
    require(c_ref > 0 && std::isfinite(c_ref), ErrorKind::parameter, "c_ref must be interior");
    const RealFn log_s = [&spec](double x) { return spec.scale.log_slope(x); };
    const RealFn log_m = [&spec](double x) { return spec.speed.log_density(x); };
    // closed forms of m(Δ, x) and s(Δ, x) where the spec carries them
    RealFn m_closed, s_closed;
    if (which == Boundary::zero) {
        if (spec.speed.has_cumulative()) m_closed = [&spec](double x) { return std::log(spec.speed.mass(0.0, x)); };
        const auto& sp = spec.scale.parts();
        if (spec.scale.anchor() == 0.0 && (sp.value || sp.log_value))
            s_closed = [&spec](double x) { return spec.scale.log_value(x); };
    } else if (spec.speed.has_log_tail()) {
        m_closed = [&spec](double x) { return spec.speed.log_tail(x); };
    }
    // I = ∫ ds(x) m(Δ, x),  J = ∫ dm(x) s(Δ, x)
    BoundaryClass out{};
    out.I = detail::feller_integral(log_s, log_m, which, c_ref, policy, m_closed);
    out.J = detail::feller_integral(log_m, log_s, which, c_ref, policy, s_closed);
    out.kind = feller_kind(out.I.finite(), out.J.finite());
    return out;
}

// ---------------------------------------------------------------------------
// Natural scale

struct NaturalScaleMap {
    DiffusionSpec spec;
    RealFn forward;  ///< x ↦ s(x)
    RealFn inverse;  ///< ξ ↦ s^{-1}(ξ)
};

inline NaturalScaleMap to_natural_scale(const DiffusionSpec& spec) {
    if (spec.scale.is_natural()) {
        return {spec, [](double x) { return x; }, [](double xi) { return xi; }};
    }
    require(spec.scale.anchor() == 0.0, ErrorKind::numerical,
            "natural-scale map needs a scale anchored at 0");
    const ScaleFn s = spec.scale;
    const Measure1D m = spec.speed;
    NaturalScaleMap out;
    out.forward = [s](double x) { return s.value(x); };
    out.inverse = [s](double xi) { return s.inverse(xi); };
    DiffusionSpec n;
    n.scale = ScaleFn::natural();
    n.speed = Measure1D({}, [s, m](double xi) {
        const double x = s.inverse(xi);
        return m.log_density(x) - s.log_slope(x);
    });
    if (m.has_cumulative()) n.speed.with_cumulative([s, m](double xi) { return m.mass(0.0, s.inverse(xi)); });
    n.speed.with_log_tail([s, m](double xi) { return m.log_tail(s.inverse(xi)); });
    if (spec.sde) {
        const SdeForm sde = *spec.sde;
        n.sde = SdeForm{[](double) { return 0.0; },
                        [s, sde](double xi) {
                            const double x = s.inverse(xi);
                            return s.slope(x) * sde.sigma(x);
                        }};
    }
    if (spec.killing) {
        const RealFn k = *spec.killing;
        n.killing = [s, k](double xi) { return k(s.inverse(xi)); };
    }
    n.label = spec.label + " [natural scale]";
    n.extent = s.value(std::min(spec.extent, 5.0));
    n.lambda0_horizon = spec.lambda0_horizon;
    out.spec = std::move(n);
    return out;
}

struct PositivityEvidence {
    bool holds = false;
    IntegralOutcome m_tail;            ///< m(1, ∞)
    std::vector<double> grid_values;   ///< ξ m(ξ, ∞) at ξ = 2^k
    double sup = kNaN;
    std::string reason;
};

/// m(1,∞) < ∞ and sup_k 2^k m(2^k, ∞) < ∞ for a natural-scale spec.
inline PositivityEvidence lambda0_positivity_check(const DiffusionSpec& spec, const DivergencePolicy& policy = {}) {
    require(spec.scale.is_natural(), ErrorKind::precondition,
            "lambda0_positivity_check expects a natural-scale spec (apply to_natural_scale first)");
    PositivityEvidence ev;
    ev.m_tail = spec.speed.tail(1.0, policy);
    if (ev.m_tail.divergent()) {
        ev.reason = "m(1, inf) diverges";
        return ev;
    }
    const int K = policy.doublings;
    double sup = 0.0;
    for (int k = 0; k <= K; ++k) {
        const double xi = std::ldexp(1.0, k);
        const double lv = k * std::log(2.0) + spec.speed.log_tail(xi);
        const double v = std::exp(lv);
        ev.grid_values.push_back(v);
        if (!std::isfinite(v)) {
            ev.reason = "x m(x, inf) not finite on the doubling grid";
            return ev;
        }
        sup = std::max(sup, v);
    }
    ev.sup = sup;
    const auto q = static_cast<std::size_t>(3 * K / 4);
    double early = 0.0, late = 0.0;
    for (std::size_t k = 0; k < ev.grid_values.size(); ++k)
        (k < q ? early : late) = std::max(k < q ? early : late, ev.grid_values[k]);
    if (sup > policy.threshold) {
        ev.reason = "x m(x, inf) exceeds the divergence threshold";
        return ev;
    }
    if (late > early * (1.0 + 1e-2)) {
        ev.reason = "x m(x, inf) still growing at the end of the doubling grid";
        return ev;
    }
    ev.holds = true;
    return ev;
}

}  // namespace scaleclock
