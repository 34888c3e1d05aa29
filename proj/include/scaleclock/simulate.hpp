#pragma once

// Path simulation for base and h-transformed diffusions: absorption at 0,
// level hits, the functional A_t = ∫(Lρ/ρ)(X_s)ds, M^[ρ] and the clock S_r.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "concave.hpp"
#include "diffusion.hpp"
#include "rng.hpp"

namespace scaleclock {

enum class SchemeKind { euler_maruyama, birth_death_chain };

struct SimScheme {
    SchemeKind kind = SchemeKind::euler_maruyama;
    double step = 1e-3;  ///< time step, or grid mesh in x for the chain
    double horizon = 1e3;
    bool bridge_correction = true;
    int coarsen = 1;  ///< Gaussian draws summed per step; couples a run to one at step/coarsen

    void validate() const {
        require(step > 0 && std::isfinite(step), ErrorKind::parameter, "scheme.step must be > 0");
        require(horizon > 0, ErrorKind::parameter, "scheme.horizon must be > 0");
        require(coarsen >= 1, ErrorKind::parameter, "scheme.coarsen must be >= 1");
    }
};

enum class Termination { absorption, clock, horizon, hit };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::absorption: return "absorption";
        case Termination::clock: return "clock";
        case Termination::horizon: return "horizon";
        case Termination::hit: return "hit";
    }
    return "?";
}

struct ClockStop {
    std::size_t functional = 0;  ///< which accumulated functional belongs to ρ
    RealFn log_rho;
    std::vector<double> levels;  ///< r values
};

struct Stops {
    bool absorb_at_0 = true;
    std::vector<double> hit_levels;
    bool stop_at_hits = false;  ///< stop once every level is hit and every observation is taken
    std::optional<ClockStop> clock;
    bool stop_at_clock = false;  ///< stop once every clock level is crossed and every observation is taken
    std::vector<double> observe;  ///< snapshot times
    double horizon = 0;           ///< 0 → scheme horizon
    bool record = false;          ///< keep the trajectory
};

struct Snapshot {
    double t, x;
    std::vector<double> A;
};

struct PathResult {
    double x0 = 0;
    std::vector<double> times, states;
    std::vector<std::vector<double>> functional;  ///< A_t per functional along the trajectory
    std::optional<double> T0;
    std::vector<std::pair<double, double>> hits;             ///< (y, T_y)
    std::vector<std::pair<double, double>> clock_crossings;  ///< (r, S_r)
    Termination terminated_by = Termination::horizon;
    double t_end = 0, x_end = 0;
    std::vector<double> A_end;
    std::vector<Snapshot> snapshots;

    std::optional<double> hit_time(double y) const {
        for (const auto& [l, t] : hits)
            if (l == y) return t;
        return std::nullopt;
    }
    std::optional<double> clock_time(double r) const {
        for (const auto& [l, t] : clock_crossings)
            if (l == r) return t;
        return std::nullopt;
    }
    const Snapshot* snapshot(double t) const {
        for (const Snapshot& s : snapshots)
            if (std::abs(s.t - t) <= 1e-12 * std::max(1.0, t)) return &s;
        return nullptr;
    }
};

/// Drift and volatility of the simulated SDE. With `entrance` the drift gains
/// σ²/x, integrated drift-implicitly so the state stays positive.
struct Dynamics {
    RealFn drift;
    RealFn sigma;
    bool entrance = false;
};

class PathEngine {
public:
    PathEngine(Dynamics dyn, SimScheme scheme, Stops stops, std::vector<RealFn> rates = {})
        : dyn_(std::move(dyn)), scheme_(scheme), stops_(std::move(stops)), rates_(std::move(rates)) {
        scheme_.validate();
        std::sort(stops_.hit_levels.begin(), stops_.hit_levels.end());
        std::sort(stops_.observe.begin(), stops_.observe.end());
        if (stops_.clock) {
            std::sort(stops_.clock->levels.begin(), stops_.clock->levels.end());
            require(stops_.clock->functional < rates_.size(), ErrorKind::parameter,
                    "clock refers to a functional that is not attached");
        }
        if (stops_.horizon <= 0) stops_.horizon = scheme_.horizon;
    }

    const Stops& stops() const { return stops_; }
    const SimScheme& scheme() const { return scheme_; }

    PathResult run(double x0, const RngStream& rng) const {
        require(x0 >= 0 && std::isfinite(x0), ErrorKind::parameter, "x0 must be >= 0");
        const double h = scheme_.step, sh = std::sqrt(h);
        const std::size_t nf = rates_.size();
        PathResult out;
        out.x0 = x0;
        out.A_end.assign(nf, 0.0);
        std::vector<double> A(nf, 0.0), rate_x(nf);
        auto eng = rng.engine(0);
        auto aux = rng.engine(1);
        std::normal_distribution<double> normal;
        std::uniform_real_distribution<double> unif;

        double x = x0;
        const double tail_obs = stops_.observe.empty() ? 0.0 : stops_.observe.back();
        std::size_t next_hit = 0, next_clock = 0, next_obs = 0;
        const auto& levels = stops_.hit_levels;
        auto clock_value = [&](double xv, const std::vector<double>& Av) {
            return stops_.clock->log_rho(xv) - Av[stops_.clock->functional];
        };
        auto record = [&](double t) {
            if (!stops_.record) return;
            out.times.push_back(t);
            out.states.push_back(x);
            if (out.functional.size() != nf) out.functional.assign(nf, {});
            for (std::size_t k = 0; k < nf; ++k) out.functional[k].push_back(A[k]);
        };
        auto snapshot_through = [&](double t_hi, double t_lo, double x_lo, double x_hi,
                                    const std::vector<double>& A_lo) {
            while (next_obs < stops_.observe.size() && stops_.observe[next_obs] <= t_hi + 1e-9 * h) {
                const double to = stops_.observe[next_obs];
                double th = t_hi > t_lo ? (to - t_lo) / (t_hi - t_lo) : 1.0;
                th = std::clamp(th, 0.0, 1.0);
                if (th > 1 - 1e-9) th = 1.0;
                Snapshot s{to, x_lo + th * (x_hi - x_lo), A_lo};
                for (std::size_t k = 0; k < nf; ++k) s.A[k] = A_lo[k] + th * (A[k] - A_lo[k]);
                out.snapshots.push_back(std::move(s));
                ++next_obs;
            }
        };
        auto done_waiting = [&](double t) { return t >= tail_obs - 1e-9 * h; };

        // time 0
        while (next_hit < levels.size() && levels[next_hit] <= x0) out.hits.emplace_back(levels[next_hit++], 0.0);
        if (stops_.clock) {
            const double l0 = clock_value(x0, A);
            while (next_clock < stops_.clock->levels.size() && std::log(stops_.clock->levels[next_clock]) <= l0)
                out.clock_crossings.emplace_back(stops_.clock->levels[next_clock++], 0.0);
        }
        for (std::size_t k = 0; k < nf; ++k) rate_x[k] = x > 0 || dyn_.entrance ? rates_[k](x) : 0.0;
        record(0.0);
        snapshot_through(0.0, 0.0, x, x, A);

        auto finish = [&](double t, Termination why) {
            out.terminated_by = why;
            out.t_end = t;
            out.x_end = x;
            out.A_end = A;
            // observations after absorption see the stopped state
            if (why == Termination::absorption)
                while (next_obs < stops_.observe.size()) {
                    out.snapshots.push_back(Snapshot{stops_.observe[next_obs], 0.0, A});
                    ++next_obs;
                }
            return out;
        };
        auto stop_now = [&](double t) -> std::optional<Termination> {
            if (!done_waiting(t)) return std::nullopt;
            if (stops_.stop_at_hits && !levels.empty() && next_hit == levels.size()) return Termination::hit;
            if (stops_.stop_at_clock && stops_.clock && next_clock == stops_.clock->levels.size())
                return Termination::clock;
            return std::nullopt;
        };

        if (x0 == 0 && !dyn_.entrance && stops_.absorb_at_0) {
            out.T0 = 0.0;
            return finish(0.0, Termination::absorption);
        }
        if (auto s = stop_now(0.0)) return finish(0.0, *s);

        const auto max_steps = static_cast<std::uint64_t>(std::ceil(stops_.horizon / h - 1e-9));
        std::vector<double> A_prev(nf), rate_new(nf);
        double l_now = stops_.clock ? clock_value(x, A) : 0.0;
        std::vector<double> log_levels;
        if (stops_.clock)
            for (double r : stops_.clock->levels) log_levels.push_back(std::log(r));
        for (std::uint64_t n = 0; n < max_steps; ++n) {
            const double t = static_cast<double>(n) * h, t1 = static_cast<double>(n + 1) * h;
            double z = 0.0;
            for (int k = 0; k < scheme_.coarsen; ++k) z += normal(eng);
            if (scheme_.coarsen > 1) z /= std::sqrt(static_cast<double>(scheme_.coarsen));
            const double sig = dyn_.sigma(x);
            double xn;
            if (dyn_.entrance) {
                const double w = x + dyn_.drift(x) * h + sig * sh * z;
                xn = 0.5 * (w + std::sqrt(w * w + 4 * h * sig * sig));
            } else {
                xn = x + dyn_.drift(x) * h + sig * sh * z;
            }
            if (!std::isfinite(xn)) {
                std::ostringstream os;
                os << "non-finite state after step at t = " << t << " from x = " << x << "; reduce scheme.step";
                fail(ErrorKind::numerical, os.str());
            }
            std::copy(A.begin(), A.end(), A_prev.begin());
            // absorption
            if (!dyn_.entrance && stops_.absorb_at_0) {
                double theta = -1;
                if (xn <= 0) {
                    theta = x / (x - xn);
                } else if (scheme_.bridge_correction) {
                    const double e = 2 * x * xn / (sig * sig * h);
                    if (e < 40 && unif(aux) < std::exp(-e)) theta = x / (x + xn);
                }
                if (theta >= 0) {
                    const double tau = t + theta * h;
                    for (std::size_t k = 0; k < nf; ++k) A[k] += theta * h * rate_x[k];
                    snapshot_through(tau, t, x, x, A_prev);
                    x = 0.0;
                    out.T0 = tau;
                    record(tau);
                    return finish(tau, Termination::absorption);
                }
            }
            for (std::size_t k = 0; k < nf; ++k) {
                rate_new[k] = rates_[k](xn);
                A[k] += 0.5 * h * (rate_x[k] + rate_new[k]);
            }
            // level hits
            while (next_hit < levels.size()) {
                const double y = levels[next_hit];
                double theta = -1;
                if (xn >= y) {
                    theta = (y - x) / (xn - x);
                } else if (scheme_.bridge_correction) {
                    const double p = std::exp(-2 * (y - x) * (y - xn) / (sig * sig * h));
                    if (unif(aux) < p) theta = (y - x) / ((y - x) + (y - xn));
                }
                if (theta < 0) break;
                out.hits.emplace_back(y, t + theta * h);
                ++next_hit;
            }
            // clock, log-linear in M between steps
            if (stops_.clock && next_clock < stops_.clock->levels.size()) {
                const double l0 = l_now, l1 = clock_value(xn, A);
                l_now = l1;
                // local volatility of log M from the secant slope of log ρ over the step
                double v2 = 0;
                if (scheme_.bridge_correction && xn != x) {
                    const double dA = A[stops_.clock->functional] - A_prev[stops_.clock->functional];
                    const double slope = (l1 - l0 + dA) / (xn - x);
                    v2 = sig * sig * slope * slope;
                }
                while (next_clock < log_levels.size()) {
                    const double target = log_levels[next_clock];
                    double theta;
                    if (l1 >= target) {
                        theta = l1 > l0 ? std::clamp((target - l0) / (l1 - l0), 0.0, 1.0) : 1.0;
                    } else {
                        const double e = 2 * (target - l0) * (target - l1) / (v2 * h);
                        if (!(v2 > 0) || e > 40 || !(unif(aux) < std::exp(-e))) break;
                        theta = (target - l0) / ((target - l0) + (target - l1));
                    }
                    out.clock_crossings.emplace_back(stops_.clock->levels[next_clock], t + theta * h);
                    ++next_clock;
                }
            }
            const double xprev = x;
            x = xn;
            std::copy(rate_new.begin(), rate_new.end(), rate_x.begin());
            if (next_obs < stops_.observe.size()) snapshot_through(t1, t, xprev, xn, A_prev);
            record(t1);
            if (auto s = stop_now(t1)) return finish(t1, *s);
        }
        return finish(static_cast<double>(max_steps) * h, Termination::horizon);
    }

private:
    Dynamics dyn_;
    SimScheme scheme_;
    Stops stops_;
    std::vector<RealFn> rates_;
};

namespace detail {

inline double table_top(double extent, const Stops& stops) {
    double hi = extent;
    for (double y : stops.hit_levels) hi = std::max(hi, 1.1 * y);
    return hi;
}

inline RealFn fast(RealFn f, double hi) {
    const auto cells = static_cast<std::size_t>(std::max(2000.0, 100.0 * hi));
    auto t = std::make_shared<FastFn>(std::move(f), 0.01, hi, cells);
    return [t](double x) { return (*t)(x); };
}

}  // namespace detail

/// Lρ/ρ = −φ/ρ, the rate of the functional A for ρ.
inline RealFn functional_rate(const ConcaveFn& rho) {
    return [rho](double x) { return -rho.killing_rate(x); };
}

inline PathEngine base_engine(const DiffusionSpec& spec, const SimScheme& scheme, Stops stops,
                              std::vector<RealFn> rates = {}, bool tabulate = true) {
    if (!spec.sde) fail(ErrorKind::scheme, "euler_maruyama needs an SDE form (drift, sigma) for " + spec.label);
    const double hi = detail::table_top(spec.extent, stops);
    Dynamics d{spec.sde->drift, spec.sde->sigma, false};
    if (tabulate) {
        for (auto& r : rates) r = detail::fast(r, hi);
        if (stops.clock) {
            const RealFn lr = stops.clock->log_rho;
            // log ρ tabulated as log(ρ/x) + log x, which stays smooth at 0
            stops.clock->log_rho = detail::fast(
                [lr](double x) {
                    const double y = std::max(x, 1e-9);
                    return lr(y) - std::log(y);
                },
                hi);
            const RealFn t = stops.clock->log_rho;
            stops.clock->log_rho = [t, lr](double x) { return x < 1e-3 ? lr(x) : t(x) + std::log(x); };
        }
    }
    return PathEngine(std::move(d), scheme, std::move(stops), std::move(rates));
}

/// Engine for P^[ρ]: drift b + σ²ρ_x/ρ, with the σ²/x part treated implicitly.
inline PathEngine h_engine(const HTransformed& h, const SimScheme& scheme, Stops stops,
                           std::vector<RealFn> rates = {}, bool tabulate = true) {
    if (!h.base.sde) fail(ErrorKind::scheme, "h-diffusion simulation needs an SDE form for " + h.base.label);
    const SdeForm sde = *h.base.sde;
    const ConcaveFn rho = h.rho;
    RealFn regular = [sde, rho](double x) {
        const double y = std::max(x, 1e-4);
        const double sig = sde.sigma(y);
        return sde.drift(y) + sig * sig * (rho.log_derivative(y) - 1.0 / y);
    };
    const double hi = detail::table_top(h.base.extent, stops);
    if (tabulate) {
        regular = detail::fast(regular, hi);
        for (auto& r : rates) r = detail::fast(r, hi);
    }
    stops.absorb_at_0 = false;
    return PathEngine(Dynamics{regular, sde.sigma, true}, scheme, std::move(stops), std::move(rates));
}

inline PathResult simulate_path(const DiffusionSpec& spec, double x0, const SimScheme& scheme, const Stops& stops,
                                const RngStream& rng, std::vector<RealFn> rates = {});

inline PathResult simulate_htransform(const HTransformed& h, double x0, const SimScheme& scheme, const Stops& stops,
                                      const RngStream& rng, std::vector<RealFn> rates = {}) {
    require(scheme.kind == SchemeKind::euler_maruyama, ErrorKind::scheme, "h-diffusions use euler_maruyama");
    return h_engine(h, scheme, stops, std::move(rates), false).run(x0, rng);
}

/// M_t = (ρ(X_t)/ρ(X₀)) e^{−A_t}, zero from T₀ on.
inline double martingale_value(const PathResult& path, const ConcaveFn& rho, double t, std::size_t functional = 0) {
    if (t == 0) return 1.0;
    if (path.T0 && *path.T0 <= t) return 0.0;
    if (const Snapshot* s = path.snapshot(t)) {
        require(functional < s->A.size(), ErrorKind::precondition, "path carries no functional for this rho");
        return std::exp(rho.log_rho(s->x) - rho.log_rho(path.x0) - s->A[functional]);
    }
    if (path.times.empty() || t > path.times.back() + 1e-12) {
        std::ostringstream os;
        os << "t = " << t << " is beyond the stored trajectory";
        fail(ErrorKind::range, os.str());
    }
    require(functional < path.functional.size(), ErrorKind::precondition, "path carries no functional for this rho");
    const auto it = std::lower_bound(path.times.begin(), path.times.end(), t - 1e-12);
    const auto i = static_cast<std::size_t>(it - path.times.begin());
    return std::exp(rho.log_rho(path.states[i]) - rho.log_rho(path.x0) - path.functional[functional][i]);
}

/// S_r from a stored trajectory by log-linear interpolation of M.
inline std::optional<double> exit_clock(const PathResult& path, const ConcaveFn& rho, double r,
                                        std::size_t functional = 0) {
    if (r <= rho.rho(path.x0)) return 0.0;
    require(!path.times.empty() && functional < path.functional.size(), ErrorKind::precondition,
            "exit_clock needs a recorded trajectory with the functional for rho");
    const double target = std::log(r);
    double prev = kNaN;
    for (std::size_t i = 0; i < path.times.size(); ++i) {
        if (path.states[i] <= 0) return std::nullopt;
        const double l = rho.log_rho(path.states[i]) - path.functional[functional][i];
        if (l >= target) {
            if (i == 0 || !std::isfinite(prev)) return path.times[i];
            const double th = (target - prev) / (l - prev);
            return path.times[i - 1] + th * (path.times[i] - path.times[i - 1]);
        }
        prev = l;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Birth–death chain on a grid in x

class BirthDeathChain {
public:
    BirthDeathChain(const DiffusionSpec& spec, double mesh, double l_max = 0.0) : mesh_(mesh) {
        require(mesh > 0, ErrorKind::parameter, "chain mesh must be > 0");
        if (l_max <= 0) l_max = spec.extent;
        const auto n = static_cast<std::size_t>(std::ceil(l_max / mesh));
        require(n >= 2, ErrorKind::parameter, "chain grid needs at least three nodes");
        x_.resize(n + 1);
        s_.resize(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            x_[i] = mesh * static_cast<double>(i);
            s_[i] = spec.scale.value(x_[i]);
        }
        up_.assign(n + 1, 0.0);
        hold_.assign(n + 1, 0.0);
        for (std::size_t i = 1; i < n; ++i) {
            const double dm = s_[i] - s_[i - 1], dp = s_[i + 1] - s_[i];
            const double p = (1 / dp) / (1 / dp + 1 / dm);
            if (!(p > 1e-12 && p < 1 - 1e-12)) {
                std::ostringstream os;
                os << "chain grid too coarse: degenerate up-probability " << p << " at x = " << x_[i];
                fail(ErrorKind::parameter, os.str());
            }
            up_[i] = p;
            // expected exit time of (x_{i−1}, x_{i+1}) from x_i, Green function against dm
            const double sl = s_[i - 1], sr = s_[i + 1], si = s_[i], span = sr - sl;
            auto left = [&](double y) { return (spec.scale.value(y) - sl) * (sr - si) / span * spec.speed.density(y); };
            auto right = [&](double y) { return (si - sl) * (sr - spec.scale.value(y)) / span * spec.speed.density(y); };
            hold_[i] = integrate(left, x_[i - 1], x_[i], 1e-10).value + integrate(right, x_[i], x_[i + 1], 1e-10).value;
        }
        // reflecting top node
        up_[n] = 0.0;
        hold_[n] = hold_[n - 1];
    }

    std::size_t size() const { return x_.size(); }
    double x(std::size_t i) const { return x_[i]; }
    double up(std::size_t i) const { return up_[i]; }
    double mean_holding(std::size_t i) const { return hold_[i]; }
    double mesh() const { return mesh_; }

    std::size_t index_of(double x) const {
        const auto i = static_cast<std::size_t>(std::llround(x / mesh_));
        require(i < x_.size(), ErrorKind::range, "state outside the chain grid");
        return i;
    }

    /// E_x[e^{−βT₀}] for the continuous-time chain with exponential holding.
    double laplace_T0(double beta, double x) const {
        const std::size_t n = x_.size() - 1;
        // u_i (1 + β τ_i) − p_i u_{i+1} − q_i u_{i−1} = 0, u_0 = 1, u_n reflecting
        std::vector<double> a(n + 1), b(n + 1), c(n + 1), d(n + 1, 0.0);
        for (std::size_t i = 1; i <= n; ++i) {
            b[i] = 1 + beta * hold_[i];
            a[i] = i == n ? -1.0 : -(1 - up_[i]);
            c[i] = i == n ? 0.0 : -up_[i];
        }
        d[1] = -a[1];  // u_0 = 1 moved to the right side
        a[1] = 0;
        return thomas(a, b, c, d)[index_of(x)];
    }

    /// P_x[T_y < T₀] for the chain.
    double hit_probability(double x, double y) const {
        const std::size_t iy = index_of(y), ix = index_of(x);
        if (ix >= iy) return 1.0;
        if (ix == 0) return 0.0;
        std::vector<double> a(iy), b(iy, 1.0), c(iy), d(iy, 0.0);
        for (std::size_t i = 1; i < iy; ++i) {
            a[i] = -(1 - up_[i]);
            c[i] = -up_[i];
        }
        d[iy - 1] = up_[iy - 1];
        c[iy - 1] = 0;
        a[1] = 0;
        return thomas(a, b, c, d)[ix];
    }

    /// Monte Carlo path of the chain with the same stop semantics as PathEngine.
    PathResult run(double x0, const Stops& stops_in, double horizon, const RngStream& rng,
                   const std::vector<RealFn>& rates = {}) const {
        Stops stops = stops_in;
        std::sort(stops.hit_levels.begin(), stops.hit_levels.end());
        std::sort(stops.observe.begin(), stops.observe.end());
        if (stops.horizon <= 0) stops.horizon = horizon;
        auto eng = rng.engine(0);
        std::uniform_real_distribution<double> unif;
        std::exponential_distribution<double> expo;
        const std::size_t nf = rates.size();
        PathResult out;
        out.x0 = x0;
        std::vector<double> A(nf, 0.0);
        std::size_t i = index_of(x0), next_hit = 0, next_obs = 0;
        double t = 0.0;
        const auto& levels = stops.hit_levels;
        auto rec = [&] {
            if (!stops.record) return;
            out.times.push_back(t);
            out.states.push_back(x_[i]);
            if (out.functional.size() != nf) out.functional.assign(nf, {});
            for (std::size_t k = 0; k < nf; ++k) out.functional[k].push_back(A[k]);
        };
        auto end = [&](Termination why) {
            while (next_obs < stops.observe.size())
                out.snapshots.push_back(Snapshot{stops.observe[next_obs++], x_[i], A});
            out.terminated_by = why;
            out.t_end = t;
            out.x_end = x_[i];
            out.A_end = A;
            return out;
        };
        rec();
        for (;;) {
            while (next_hit < levels.size() && x_[i] >= levels[next_hit]) out.hits.emplace_back(levels[next_hit++], t);
            if (i == 0 && stops.absorb_at_0) {
                out.T0 = t;
                return end(Termination::absorption);
            }
            if (stops.stop_at_hits && !levels.empty() && next_hit == levels.size() &&
                (stops.observe.empty() || t >= stops.observe.back()))
                return end(Termination::hit);
            const double hold = hold_[i] * expo(eng);
            const double tn = std::min(t + hold, stops.horizon);
            while (next_obs < stops.observe.size() && stops.observe[next_obs] <= tn) {
                Snapshot s{stops.observe[next_obs], x_[i], A};
                for (std::size_t k = 0; k < nf; ++k) s.A[k] += (stops.observe[next_obs] - t) * rates[k](x_[i]);
                out.snapshots.push_back(std::move(s));
                ++next_obs;
            }
            for (std::size_t k = 0; k < nf; ++k) A[k] += (tn - t) * rates[k](x_[i]);
            t = tn;
            if (t >= stops.horizon) return end(Termination::horizon);
            i = unif(eng) < up_[i] ? i + 1 : i - 1;
            rec();
        }
    }

private:
    static std::vector<double> thomas(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                                      std::vector<double> d) {
        // rows 1..n−1 of a tridiagonal system; index 0 unused
        const std::size_t n = b.size();
        for (std::size_t i = 2; i < n; ++i) {
            const double w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        std::vector<double> u(n, 0.0);
        u[0] = 1.0;
        u[n - 1] = d[n - 1] / b[n - 1];
        for (std::size_t i = n - 1; i-- > 1;) u[i] = (d[i] - c[i] * u[i + 1]) / b[i];
        return u;
    }

    double mesh_;
    std::vector<double> x_, s_, up_, hold_;
};

inline PathResult simulate_path(const DiffusionSpec& spec, double x0, const SimScheme& scheme, const Stops& stops,
                                const RngStream& rng, std::vector<RealFn> rates) {
    scheme.validate();
    if (scheme.kind == SchemeKind::birth_death_chain) {
        const BirthDeathChain chain(spec, scheme.step);
        return chain.run(x0, stops, scheme.horizon, rng, rates);
    }
    return base_engine(spec, scheme, stops, std::move(rates), false).run(x0, rng);
}

}  // namespace scaleclock
