#pragma once

// Concave functions ρ ∈ 𝒞₁/𝒞₂ with Lρ = −φ, the wide-sense h-transform, the
// renewal transform Φ and the perturbation constructions.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "diffusion.hpp"
#include "eigen.hpp"
#include "errors.hpp"
#include "quadrature.hpp"

namespace scaleclock {

enum class ConcaveClass { c1, c2 };

inline const char* to_string(ConcaveClass c) { return c == ConcaveClass::c1 ? "C1" : "C2"; }

/// ρ(x) = ∫₀^x ds(y) ∫_y^∞ φ dm, carried in log form. ρ⁺ is the derivative
/// with respect to the scale; ρ_x = ρ⁺ s'.
class ConcaveFn {
public:
    struct Parts {
        RealFn log_rho;       ///< log ρ(x), x > 0
        RealFn log_rho_plus;  ///< log ρ⁺(x)
        RealFn log_phi;       ///< log φ(x), −inf where φ vanishes
        RealFn dlog;          ///< optional ρ_x/ρ
        RealFn kill;          ///< optional φ/ρ
    };

    ConcaveFn(Parts parts, RealFn log_scale_slope, ConcaveClass cls, std::optional<double> c2_bound,
              std::string label)
        : p_(std::move(parts)), log_s_(std::move(log_scale_slope)), cls_(cls), bound_(c2_bound),
          label_(std::move(label)) {}

    double rho(double x) const { return x <= 0 ? 0.0 : std::exp(p_.log_rho(x)); }
    double log_rho(double x) const { return x <= 0 ? -kInf : p_.log_rho(x); }
    double rho_plus(double x) const { return std::exp(p_.log_rho_plus(x)); }
    double log_rho_plus(double x) const { return p_.log_rho_plus(x); }
    double rho_x(double x) const { return std::exp(p_.log_rho_plus(x) + log_s_(x)); }
    double phi(double x) const { return std::exp(p_.log_phi(x)); }
    double log_phi(double x) const { return p_.log_phi(x); }
    /// ρ_x/ρ, the extra drift of the h-diffusion divided by σ².
    double log_derivative(double x) const {
        if (p_.dlog) return p_.dlog(x);
        return std::exp(p_.log_rho_plus(x) + log_s_(x) - p_.log_rho(x));
    }
    /// φ/ρ = −Lρ/ρ.
    double killing_rate(double x) const {
        if (p_.kill) return p_.kill(x);
        return std::exp(p_.log_phi(x) - p_.log_rho(x));
    }

    ConcaveClass cls() const { return cls_; }
    std::optional<double> c2_bound() const { return bound_; }
    const std::string& label() const { return label_; }
    const Parts& parts() const { return p_; }

private:
    Parts p_;
    RealFn log_s_;
    ConcaveClass cls_;
    std::optional<double> bound_;
    std::string label_;
};

namespace detail {

/// Log-domain tables of F̄(x) = ∫_x^∞ φ dm, G(x) = ∫₀^x s φ dm and
/// ρ = s F̄ + G. Uniform in x on [0, hi], uniform in log x on [hi, hi·2^octaves],
/// continued linearly in log x beyond.
class Potential {
public:
    Potential(const DiffusionSpec& spec, RealFn log_phi, double hi, std::size_t cells = 0, int octaves = 6,
              std::size_t cells_per_octave = 400)
        : scale_(spec.scale), speed_(spec.speed), log_phi_(std::move(log_phi)), hi_(hi) {
        if (cells == 0) cells = static_cast<std::size_t>(std::max(2000.0, std::ceil(200.0 * hi)));
        const double h = hi / static_cast<double>(cells);
        const double du = std::log(2.0) / static_cast<double>(cells_per_octave);
        const std::size_t nfar = static_cast<std::size_t>(octaves) * cells_per_octave;
        far_ = hi * std::exp(du * static_cast<double>(nfar));
        const RealFn g = [this](double y) { return log_phi_(y) + speed_.log_density(y); };

        const std::size_t n = cells + 1 + nfar;
        std::vector<double> xs(n);
        for (std::size_t i = 0; i <= cells; ++i) xs[i] = h * static_cast<double>(i);
        for (std::size_t j = 1; j <= nfar; ++j) xs[cells + j] = hi * std::exp(du * static_cast<double>(j));
        xs[cells] = hi;

        const IntegralOutcome tail = improper_log_integral(g, xs.back());
        if (tail.divergent()) fail(ErrorKind::class_error, "phi is not m-integrable");
        if (tail.log_value == -kInf)
            fail(ErrorKind::precondition, "phi vanishes beyond x = " + fmt_param(xs.back()) + " (bounded support)");
        std::vector<double> lf(n), lg(n, -kInf);
        lf[n - 1] = tail.log_value;
        for (std::size_t i = n - 1; i-- > 0;) lf[i] = log_add(lf[i + 1], log_integrate(g, xs[i], xs[i + 1], 1e-12).log_value);
        auto gs = [this, &g](double y) { return scale_.log_value(y) + g(y); };
        for (std::size_t i = 1; i < n; ++i) lg[i] = log_add(lg[i - 1], log_integrate(gs, xs[i - 1], xs[i], 1e-12).log_value);

        std::vector<double> dlf(n), r(n), dr(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double gi = g(xs[i]);
            dlf[i] = gi == -kInf ? 0.0 : -std::exp(gi - lf[i]);
            if (i == 0) {
                r[0] = lf[0];
                dr[0] = 0.5 * dlf[0];
                continue;
            }
            const double ls = scale_.log_value(xs[i]);
            const double lr = log_add(ls + lf[i], lg[i]);
            r[i] = lr - ls;
            // d/dx log(ρ/s) = −s' G / (s ρ)
            dr[i] = lg[i] == -kInf ? 0.0 : -std::exp(scale_.log_slope(xs[i]) + lg[i] - ls - lr);
        }
        auto slice = [](const std::vector<double>& v, std::size_t a, std::size_t b) {
            return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(a), v.begin() + static_cast<std::ptrdiff_t>(b));
        };
        lf_ = HermiteTable(0.0, h, slice(lf, 0, cells + 1), slice(dlf, 0, cells + 1));
        r_ = HermiteTable(0.0, h, slice(r, 0, cells + 1), slice(dr, 0, cells + 1));
        // far segment in u = log x, derivatives scaled by x
        std::vector<double> dlfu(nfar + 1), dru(nfar + 1);
        for (std::size_t j = 0; j <= nfar; ++j) {
            dlfu[j] = dlf[cells + j] * xs[cells + j];
            dru[j] = dr[cells + j] * xs[cells + j];
        }
        lf_far_ = HermiteTable(std::log(hi), du, slice(lf, cells, n), dlfu);
        r_far_ = HermiteTable(std::log(hi), du, slice(r, cells, n), dru);
        total_ = lf[0];
    }

    double hi() const { return hi_; }
    /// log ∫₀^∞ φ dm
    double log_total() const { return total_; }

    double log_tail(double x) const {
        if (x <= hi_) return lf_(std::max(x, 0.0));
        if (x <= far_) return lf_far_(std::log(x));
        return lf_far_(std::log(far_)) + lf_far_.derivative(std::log(far_)) * (std::log(x) - std::log(far_));
    }

    double log_rho(double x) const {
        if (x <= 0) return -kInf;
        if (x <= hi_) return r_(x) + scale_.log_value(x);
        const double u = std::min(std::log(x), std::log(far_));
        return r_far_(u) + r_far_.derivative(u) * (std::log(x) - u) + scale_.log_value(x);
    }

private:
    ScaleFn scale_;
    Measure1D speed_;
    RealFn log_phi_;
    double hi_, far_ = 0;
    double total_ = -kInf;
    HermiteTable lf_, r_, lf_far_, r_far_;
};

/// C2 iff φ/ρ stays bounded on the doubling grid toward 0 and on a linear grid
/// up to hi, with no growth over the final quarter at either end.
inline std::pair<ConcaveClass, double> decide_class(const ConcaveFn& rho, double hi, double threshold = 1e12) {
    std::vector<double> near0;
    for (int k = 0; k >= -20; --k) near0.push_back(rho.killing_rate(std::ldexp(1.0, k)));
    std::vector<double> far;
    for (int i = 1; i <= 400; ++i) far.push_back(rho.killing_rate(hi * i / 400.0));
    double sup = 0.0;
    for (double v : near0) sup = std::max(sup, v);
    for (double v : far) sup = std::max(sup, v);
    if (!(sup <= threshold)) return {ConcaveClass::c1, kInf};
    auto growing = [](const std::vector<double>& v) {
        const auto q = 3 * v.size() / 4;
        const double early = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(q));
        const double late = *std::max_element(v.begin() + static_cast<std::ptrdiff_t>(q), v.end());
        return late > early * 1.01 && v.back() > v[q] * 1.01;
    };
    if (growing(near0) || growing(far)) return {ConcaveClass::c1, kInf};
    return {ConcaveClass::c2, sup};
}

inline RealFn log_scale_slope_of(const DiffusionSpec& spec) {
    return [s = spec.scale](double x) { return s.log_slope(x); };
}

}  // namespace detail

/// ρ(∞) = ∫ s φ dm; ρ ∈ 𝒞₁ needs it to diverge.
inline bool rho_unbounded(const DiffusionSpec& spec, const RealFn& log_phi) {
    auto g = [&](double y) { return spec.scale.log_value(y) + log_phi(y) + spec.speed.log_density(y); };
    return improper_log_integral(g, 1.0).divergent();
}

/// ρ = ∫₀^x ds ∫_y^∞ φ dm for a non-negative, m-integrable φ given in log form.
inline ConcaveFn build_from_phi_log(const DiffusionSpec& spec, RealFn log_phi, std::string label = "rho[phi]",
                                    double hi = 0.0) {
    if (hi <= 0) hi = spec.extent;
    for (double x : {1e-6, 0.5, 1.0, 0.5 * hi, hi}) {
        const double v = log_phi(x);
        if (std::isnan(v)) {
            std::ostringstream os;
            os << "phi undefined at x = " << x;
            fail(ErrorKind::evaluation, os.str());
        }
    }
    if (improper_log_integral([&](double y) { return log_phi(y) + spec.speed.log_density(y); }, 1.0).divergent())
        fail(ErrorKind::class_error, "phi is not m-integrable");
    if (!rho_unbounded(spec, log_phi)) fail(ErrorKind::class_error, "rho is bounded (not in C1): int s phi dm < inf");
    auto pot = std::make_shared<detail::Potential>(spec, log_phi, hi);
    ConcaveFn::Parts p;
    p.log_rho = [pot](double x) { return pot->log_rho(x); };
    p.log_rho_plus = [pot](double x) { return pot->log_tail(x); };
    p.log_phi = log_phi;
    ConcaveFn tmp(p, detail::log_scale_slope_of(spec), ConcaveClass::c1, std::nullopt, label);
    const auto [cls, sup] = detail::decide_class(tmp, hi);
    return ConcaveFn(std::move(p), detail::log_scale_slope_of(spec), cls,
                     cls == ConcaveClass::c2 ? std::optional<double>(sup) : std::nullopt, std::move(label));
}

inline ConcaveFn build_from_phi(const DiffusionSpec& spec, const RealFn& phi, std::string label = "rho[phi]",
                                double hi = 0.0) {
    RealFn log_phi = [phi](double x) {
        const double v = phi(x);
        if (v < 0) {
            std::ostringstream os;
            os << "phi negative at x = " << x;
            fail(ErrorKind::class_error, os.str());
        }
        if (std::isinf(v)) {
            std::ostringstream os;
            os << "phi overflows at x = " << x << "; supply log phi instead";
            fail(ErrorKind::evaluation, os.str());
        }
        return v == 0 ? -kInf : std::log(v);
    };
    return build_from_phi_log(spec, std::move(log_phi), std::move(label), hi);
}

/// ρ = ψ_{−λ}, φ = λψ_{−λ}, killing rate ≡ λ.
inline ConcaveFn from_eigen(const DiffusionSpec& spec, double lambda) {
    require(lambda > 0, ErrorKind::range, "from_eigen needs lambda > 0");
    const double l0 = lambda0_of(spec);
    if (lambda > l0 * (1 + 1e-9)) {
        std::ostringstream os;
        os << "from_eigen needs lambda <= lambda0 = " << l0 << ", got " << lambda;
        fail(ErrorKind::range, os.str());
    }
    auto psi = std::make_shared<EigenFn>(psi_for(spec, -lambda));
    ConcaveFn::Parts p;
    p.log_rho = [psi](double x) { return psi->log_value(x); };
    p.log_rho_plus = [psi](double x) { return psi->log_right_derivative(x); };
    const double ll = std::log(lambda);
    p.log_phi = [psi, ll](double x) { return ll + psi->log_value(x); };
    p.dlog = [psi](double x) { return psi->log_derivative(x); };
    p.kill = [lambda](double) { return lambda; };
    std::ostringstream os;
    os << "psi_{-" << lambda << "}";
    return ConcaveFn(std::move(p), detail::log_scale_slope_of(spec), ConcaveClass::c2, lambda, os.str());
}

// ---------------------------------------------------------------------------
// h-transform

struct HTransformed {
    DiffusionSpec base;
    ConcaveFn rho;
    DiffusionSpec spec;   ///< dm^[ρ] = ρ² dm, ds^[ρ] = ρ^{-2} ds
    RealFn killing_rate;  ///< φ/ρ
};

inline HTransformed h_transform(const DiffusionSpec& spec, const ConcaveFn& rho) {
    DiffusionSpec h;
    ScaleFn::Parts sp;
    const ScaleFn s = spec.scale;
    sp.log_slope = [s, rho](double x) { return s.log_slope(x) - 2 * rho.log_rho(x); };
    sp.dlog_slope = [s, rho](double x) { return s.dlog_slope(x) - 2 * rho.log_derivative(x); };
    h.scale = ScaleFn(std::move(sp), 1.0);
    const Measure1D m = spec.speed;
    h.speed = Measure1D({}, [m, rho](double x) { return m.log_density(x) + 2 * rho.log_rho(x); });
    if (spec.sde) {
        const SdeForm sde = *spec.sde;
        h.sde = SdeForm{[sde, rho](double x) {
                            const double sig = sde.sigma(x);
                            return sde.drift(x) + sig * sig * rho.log_derivative(x);
                        },
                        sde.sigma};
    }
    h.label = "h[" + rho.label() + "](" + spec.label + ")";
    h.extent = spec.extent;
    h.lambda0_horizon = spec.lambda0_horizon;
    return HTransformed{spec, rho, std::move(h), [rho](double x) { return rho.killing_rate(x); }};
}

// ---------------------------------------------------------------------------
// Renewal transform

struct RenewalTransform {
    double mean_T0;      ///< E_μ T₀ = ∫ ρ_u dm
    ConcaveFn rho;       ///< density of Φμ with respect to dm
    double mass;         ///< ∫ ρ dm, 1 up to quadrature error
};

/// log ∫₀^∞ exp(g) dx split at 1.
inline double log_integral_half_line(const RealFn& g) {
    const double head = log_integrate(g, 0.0, 1.0, 1e-12).log_value;
    const IntegralOutcome tail = improper_log_integral(g, 1.0);
    if (tail.divergent()) return kInf;
    return log_add(head, tail.log_value);
}

/// Φμ for μ = f dm given as log f, via ρ_u = ∫₀^x ds ∫_y^∞ f dm.
inline RenewalTransform renewal_transform(const DiffusionSpec& spec, const RealFn& log_f, double hi = 0.0) {
    if (hi <= 0) hi = spec.extent;
    const double lmass = log_integral_half_line([&](double x) { return log_f(x) + spec.speed.log_density(x); });
    if (!(std::abs(std::expm1(lmass)) <= 1e-6)) {
        std::ostringstream os;
        os << "renewal transform needs a probability density, mass = " << std::exp(lmass);
        fail(ErrorKind::precondition, os.str());
    }
    auto pot = std::make_shared<detail::Potential>(spec, log_f, hi);
    const double lE = log_integral_half_line([&](double x) { return pot->log_rho(x) + spec.speed.log_density(x); });
    if (lE == kInf) fail(ErrorKind::precondition, "renewal transform undefined: E_mu T0 diverges");
    ConcaveFn::Parts p;
    p.log_rho = [pot, lE](double x) { return pot->log_rho(x) - lE; };
    p.log_rho_plus = [pot, lE](double x) { return pot->log_tail(x) - lE; };
    p.log_phi = [log_f, lE](double x) { return log_f(x) - lE; };
    const bool unbounded = rho_unbounded(spec, log_f);
    ConcaveFn tmp(p, detail::log_scale_slope_of(spec), ConcaveClass::c1, std::nullopt, "Phi mu");
    auto [cls, sup] = unbounded ? detail::decide_class(tmp, hi) : std::pair{ConcaveClass::c1, kInf};
    ConcaveFn rho(std::move(p), detail::log_scale_slope_of(spec), cls,
                  cls == ConcaveClass::c2 ? std::optional<double>(sup) : std::nullopt, "Phi mu");
    const double lm = log_integral_half_line([&](double x) { return rho.log_rho(x) + spec.speed.log_density(x); });
    return RenewalTransform{std::exp(lE), std::move(rho), std::exp(lm)};
}

// ---------------------------------------------------------------------------
// Perturbation of ψ_{−λ} below x = 1

/// μ = C ψ̃ dm with ψ̃ = ψ(1)s(x)/s(1) on [0,1] and ψ elsewhere, and ρ = density of Φμ.
struct PerturbedPsi {
    ConcaveFn rho;
    double lambda, C, mean_T0, A, c0;
    RealFn mu_log_density;       ///< log(Cψ̃), density with respect to dm
    RealFn mu_log_survival;      ///< log μ(x, ∞)
    RealFn phi_mu_log_survival;  ///< log Φμ(x, ∞)
    double witness_x, witness_gap;  ///< a point where φ/ρ differs from λ
};

inline PerturbedPsi perturbed_psi_construction(const DiffusionSpec& spec, double lambda) {
    const double l0 = lambda0_of(spec);
    if (!(lambda > 0 && lambda < l0 * (1 - 1e-9))) {
        std::ostringstream os;
        os << "perturbed_psi needs 0 < lambda < lambda0 = " << l0 << ", got " << lambda;
        fail(ErrorKind::range, os.str());
    }
    auto psi = std::make_shared<EigenFn>(psi_for(spec, -lambda));
    const ScaleFn s = spec.scale;
    const Measure1D m = spec.speed;
    const double s1 = s.value(1.0), p1 = psi->value(1.0), pp1 = psi->right_derivative(1.0);
    const double k = p1 / s1;  // ψ̃ = k s on [0,1]
    auto H = std::make_shared<HermiteTable>(
        cumulative_table([s, m](double x) { return s.value(x) * m.density(x); }, 0.0, 1.0, 2000, 1e-13));
    auto K = std::make_shared<HermiteTable>(cumulative_table(
        [s, m](double x) {
            const double v = s.value(x);
            return v * v * m.density(x);
        },
        0.0, 1.0, 2000, 1e-13));
    const double H1 = (*H)(1.0);
    const double C = 1.0 / (k * H1 + pp1 / lambda);
    // F̄(y) = μ(y, ∞) and ρ_u = s F̄ + G below the cut
    auto fbar_low = [=](double y) { return C * (k * (H1 - (*H)(y)) + pp1 / lambda); };
    auto rho_u_low = [=](double y) { return s.value(y) * fbar_low(y) + C * k * (*K)(y); };
    const double ru1 = rho_u_low(1.0);
    const double c0 = p1 - lambda * ru1 / C;
    const double head = integrate([=](double y) { return rho_u_low(y) * m.density(y); }, 0.0, 1.0, 1e-12).value;
    const double m1 = m.mass(1.0, kInf);
    const double E = head + (ru1 - C / lambda * p1) * m1 + C / lambda * pp1 / lambda;
    const double A = C / (lambda * E);
    const double lA = std::log(A), lE = std::log(E), lC = std::log(C), lk = std::log(k);

    ConcaveFn::Parts p;
    p.log_rho = [=](double x) {
        if (x <= 0) return -kInf;
        if (x < 1.0) return std::log(rho_u_low(x)) - lE;
        const double lp = psi->log_value(x);
        return lA + lp + std::log1p(-c0 * std::exp(-lp));
    };
    p.log_rho_plus = [=](double x) {
        if (x < 1.0) return std::log(fbar_low(x)) - lE;
        return lA + psi->log_right_derivative(x);
    };
    p.log_phi = [=](double x) {
        if (x <= 0) return -kInf;
        if (x < 1.0) return lC + lk + s.log_value(x) - lE;
        return lC + psi->log_value(x) - lE;
    };
    p.dlog = [=](double x) {
        if (x < 1.0) return s.slope(x) * fbar_low(x) / rho_u_low(x);
        return psi->log_derivative(x) / (1.0 - c0 * std::exp(-psi->log_value(x)));
    };
    p.kill = [=](double x) {
        if (x < 1.0) return C * k * s.value(x) / rho_u_low(x);
        return lambda / (1.0 - c0 * std::exp(-psi->log_value(x)));
    };
    std::ostringstream label;
    label << "perturbed_psi(" << lambda << ")";
    ConcaveFn tmp(p, detail::log_scale_slope_of(spec), ConcaveClass::c2, std::nullopt, label.str());
    const auto [cls, sup] = detail::decide_class(tmp, spec.extent);
    if (cls != ConcaveClass::c2) fail(ErrorKind::numerical, "perturbed_psi: killing rate not bounded on the grid");

    double wx = kNaN, wgap = 0.0;
    for (int i = 1; i <= 100; ++i) {
        const double x = 0.05 * i;
        const double gap = std::abs(tmp.killing_rate(x) - lambda);
        if (gap > wgap) {
            wgap = gap;
            wx = x;
        }
    }
    if (!(wgap > 1e-3)) fail(ErrorKind::numerical, "perturbed_psi: no grid point separates phi/rho from lambda");

    auto Q = std::make_shared<HermiteTable>(
        cumulative_table([=](double y) { return rho_u_low(y) / E * m.density(y); }, 0.0, 1.0, 2000, 1e-13));
    PerturbedPsi out{ConcaveFn(std::move(p), detail::log_scale_slope_of(spec), ConcaveClass::c2, sup, label.str()),
                     lambda, C, E, A, c0, {}, {}, {}, wx, wgap};
    out.mu_log_density = [=](double x) {
        if (x <= 0) return -kInf;
        if (x < 1.0) return lC + lk + s.log_value(x);
        return lC + psi->log_value(x);
    };
    out.mu_log_survival = [=](double x) {
        if (x < 1.0) return std::log(fbar_low(std::max(x, 0.0)));
        return lC + psi->log_right_derivative(x) - std::log(lambda);
    };
    out.phi_mu_log_survival = [=](double x) {
        if (x < 1.0) return std::log1p(-(*Q)(std::max(x, 0.0)));
        const double lpp = psi->log_right_derivative(x) - std::log(lambda);
        const double lmt = m.log_tail(x);
        return lA + lpp + std::log1p(-c0 * std::exp(lmt - lpp));
    };
    return out;
}

inline ConcaveFn perturbed_psi(const DiffusionSpec& spec, double lambda) {
    return perturbed_psi_construction(spec, lambda).rho;
}

// ---------------------------------------------------------------------------
// Small tail perturbation β = ψ + εg with φ_β = λψ(1 + εe^{−x})

struct TailPerturbation {
    ConcaveFn alpha, beta;
    RealFn delta;  ///< |φ_α/α − φ_β/β| = λε|g − e^{−x}ψ|/β
    double epsilon;
};

inline TailPerturbation tail_perturbation(const DiffusionSpec& spec, double lambda, double epsilon,
                                          double hi = 0.0) {
    if (hi <= 0) hi = spec.extent;
    require(epsilon > 0, ErrorKind::parameter, "tail perturbation needs epsilon > 0");
    const ConcaveFn alpha = from_eigen(spec, lambda);
    auto psi = std::make_shared<EigenFn>(psi_for(spec, -lambda));
    const double ll = std::log(lambda), le = std::log(epsilon);
    auto pot = std::make_shared<detail::Potential>(
        spec, [psi, ll](double x) { return ll + psi->log_value(x) - x; }, hi);
    const ScaleFn s = spec.scale;
    ConcaveFn::Parts p;
    p.log_rho = [=](double x) { return log_add(psi->log_value(x), le + pot->log_rho(x)); };
    p.log_rho_plus = [=](double x) { return log_add(psi->log_right_derivative(x), le + pot->log_tail(x)); };
    p.log_phi = [=](double x) { return ll + psi->log_value(x) + std::log1p(epsilon * std::exp(-x)); };
    p.dlog = [=](double x) {
        const double lb = log_add(psi->log_value(x), le + pot->log_rho(x));
        return std::exp(s.log_slope(x) + log_add(psi->log_right_derivative(x), le + pot->log_tail(x)) - lb);
    };
    p.kill = [=](double x) {
        const double lb = log_add(psi->log_value(x), le + pot->log_rho(x));
        return lambda * std::exp(psi->log_value(x) - lb) * (1 + epsilon * std::exp(-x));
    };
    std::ostringstream label;
    label << "tail_perturbation(" << lambda << "," << epsilon << ")";
    ConcaveFn tmp(p, detail::log_scale_slope_of(spec), ConcaveClass::c2, std::nullopt, label.str());
    const auto [cls, sup] = detail::decide_class(tmp, spec.extent);
    ConcaveFn beta(std::move(p), detail::log_scale_slope_of(spec), cls,
                   cls == ConcaveClass::c2 ? std::optional<double>(sup) : std::nullopt, label.str());
    RealFn delta = [=](double x) {
        if (x <= 0) return lambda * epsilon * std::abs(std::exp(pot->log_tail(0.0)) - 1.0) / (1 + epsilon * std::exp(pot->log_tail(0.0)));
        const double lp = psi->log_value(x), lg = pot->log_rho(x);
        const double lb = log_add(lp, le + lg);
        return lambda * epsilon * std::abs(std::exp(lg - lb) - std::exp(-x + lp - lb));
    };
    return TailPerturbation{alpha, std::move(beta), std::move(delta), epsilon};
}

// ---------------------------------------------------------------------------
// Theorem-level checks on pairs

struct AbsContinuityReport {
    bool eq34_ok = false;
    bool transient_ok = false;   ///< s^[α](1,∞), s^[β](1,∞) < ∞
    IntegralOutcome eq29_alpha, eq29_beta;
    bool eq29_ok = false;
    double eq33_value = kNaN;
    double eq33_swapped = kNaN;  ///< the same functional with α and β exchanged
    double c_limit = kNaN;       ///< β/α at the far end of the grid
    bool all_ok = false;
};

namespace detail {

/// log s^[ρ](x, ∞) = log ∫_x^∞ ds/ρ².
inline double log_h_scale_tail(const DiffusionSpec& spec, const ConcaveFn& rho, double x) {
    auto g = [&](double y) { return spec.scale.log_slope(y) - 2 * rho.log_rho(y); };
    const IntegralOutcome o = improper_log_integral(g, x);
    return o.finite() ? o.log_value : kInf;
}

}  // namespace detail

/// Checks |Lα/α − Lβ/β| ≤ δ, the two finiteness conditions and the
/// Khas'minskii-type bound ∫ α²δ dm s^[α](x,∞) < 1. δ defaults to the gap itself.
inline AbsContinuityReport abs_continuity_conditions(const DiffusionSpec& spec, const ConcaveFn& alpha,
                                                     const ConcaveFn& beta, RealFn delta = {}) {
    AbsContinuityReport rep;
    const RealFn gap = [&](double x) { return std::abs(alpha.killing_rate(x) - beta.killing_rate(x)); };
    if (!delta) delta = gap;
    rep.eq34_ok = true;
    for (int i = 1; i <= 400; ++i) {
        const double x = spec.extent * i / 400.0;
        if (gap(x) > delta(x) * (1 + 1e-8) + 1e-12) rep.eq34_ok = false;
    }
    for (int k = -20; k < 0; ++k) {
        const double x = std::ldexp(1.0, k);
        if (gap(x) > delta(x) * (1 + 1e-8) + 1e-12) rep.eq34_ok = false;
    }
    rep.transient_ok = detail::log_h_scale_tail(spec, alpha, 1.0) < kInf &&
                       detail::log_h_scale_tail(spec, beta, 1.0) < kInf;
    auto log_delta = [&](double x) {
        const double d = delta(x);
        return d > 0 ? std::log(d) : -kInf;
    };
    auto eq29 = [&](const ConcaveFn& inner) {
        auto g = [&](double x) {
            const double ld = log_delta(x);
            if (ld == -kInf) return -kInf;
            return alpha.log_rho(x) + beta.log_rho(x) + ld + spec.speed.log_density(x) +
                   detail::log_h_scale_tail(spec, inner, x);
        };
        return improper_log_integral(g, 1.0);
    };
    rep.eq29_alpha = eq29(alpha);
    rep.eq29_beta = eq29(beta);
    rep.eq29_ok = rep.eq29_alpha.finite() && rep.eq29_beta.finite();
    auto eq33 = [&](const ConcaveFn& a) {
        auto g = [&](double x) {
            const double ld = log_delta(x);
            if (ld == -kInf) return -kInf;
            return 2 * a.log_rho(x) + ld + spec.speed.log_density(x) + detail::log_h_scale_tail(spec, a, x);
        };
        return std::exp(log_integral_half_line(g));
    };
    rep.eq33_value = eq33(alpha);
    rep.eq33_swapped = eq33(beta);
    rep.c_limit = std::exp(beta.log_rho(spec.extent) - alpha.log_rho(spec.extent));
    rep.all_ok = rep.eq34_ok && rep.transient_ok && rep.eq29_ok && rep.eq33_value < 1;
    return rep;
}

struct KillingWitness {
    double x, gap;
};

/// A grid point where the killing rates of α and β differ by more than tol.
inline std::optional<KillingWitness> distinct_killing_rates(const ConcaveFn& a, const ConcaveFn& b,
                                                            const std::vector<double>& grid, double tol = 1e-6) {
    std::optional<KillingWitness> best;
    for (double x : grid) {
        const double g = std::abs(a.killing_rate(x) - b.killing_rate(x));
        if (g > tol && (!best || g > best->gap)) best = KillingWitness{x, g};
    }
    return best;
}

struct ConcaveChecks {
    bool rho0_zero = false;
    bool rho_plus_nonincreasing = false;
    bool ratio_nonincreasing = false;  ///< ρ/s
    bool unbounded = false;
    bool all() const { return rho0_zero && rho_plus_nonincreasing && ratio_nonincreasing && unbounded; }
};

inline ConcaveChecks check_concave(const DiffusionSpec& spec, const ConcaveFn& rho, double hi = 0.0) {
    if (hi <= 0) hi = spec.extent;
    ConcaveChecks c;
    c.rho0_zero = rho.rho(0.0) == 0.0 && std::isfinite(rho.rho_plus(0.0)) && rho.rho_plus(0.0) > 0;
    c.rho_plus_nonincreasing = c.ratio_nonincreasing = true;
    double prev_plus = kInf, prev_ratio = kInf;
    for (int i = 1; i <= 400; ++i) {
        const double x = hi * i / 400.0;
        const double lp = rho.log_rho_plus(x);
        const double lr = rho.log_rho(x) - spec.scale.log_value(x);
        if (lp > prev_plus + 1e-9) c.rho_plus_nonincreasing = false;
        if (lr > prev_ratio + 1e-9) c.ratio_nonincreasing = false;
        prev_plus = lp;
        prev_ratio = lr;
    }
    c.unbounded = rho_unbounded(spec, rho.parts().log_phi);
    return c;
}

}  // namespace scaleclock
