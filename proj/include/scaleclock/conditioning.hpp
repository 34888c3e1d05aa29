#pragma once

// Conditioning to avoid zero with the clock S_r: rejection sampling under
// P_x given {T₀ > S_r} (or {T₀ > S_r > s}) against direct sampling of P^[ρ].

#include <cmath>
#include <sstream>
#include <vector>

#include "simulate.hpp"
#include "stats.hpp"

namespace scaleclock {

/// exit: {T₀ > S_r}; exit_after_s: {T₀ > S_r > s}.
enum class ConditionVariant { exit, exit_after_s };

inline ConditionVariant default_variant(const ConcaveFn& rho) {
    return rho.cls() == ConcaveClass::c2 ? ConditionVariant::exit : ConditionVariant::exit_after_s;
}

struct McOptions {
    std::uint64_t seed = 1;
    unsigned threads = 1;
    SimScheme scheme;
};

struct ConditionedSample {
    std::vector<double> values;  ///< X_s on the conditioning event, in proposal order
    std::size_t accepted = 0;
    std::size_t proposed = 0;
    std::size_t exits = 0;           ///< proposals with T₀ > S_r
    std::size_t clock_before_s = 0;  ///< exits with S_r ≤ s
    std::size_t censored = 0;        ///< neither absorbed nor exited by the horizon
    double r = 0, s = 0;
    double theoretical_exit = 0;  ///< ρ(x)/r

    /// P̂[T₀ > S_r] with its binomial standard error.
    McEstimate exit_rate() const {
        const double n = static_cast<double>(proposed), p = static_cast<double>(exits) / n;
        return {p, std::sqrt(p * (1 - p) / n), proposed};
    }
};

struct ConditionOptions : McOptions {
    ConditionVariant variant = ConditionVariant::exit;
    std::size_t max_proposals = 20'000'000;
};

namespace detail {

struct Proposal {
    bool exit = false, before_s = false, censored = false;
    double xs = 0;
};

}  // namespace detail

inline ConditionedSample sample_conditioned(const DiffusionSpec& spec, const ConcaveFn& rho, double x, double r,
                                            double s, std::size_t n_target, const ConditionOptions& opt = {}) {
    require(x > 0, ErrorKind::parameter, "conditioning needs x > 0");
    require(s >= 0, ErrorKind::parameter, "observation time s must be >= 0");
    require(n_target >= 1, ErrorKind::parameter, "n_target must be >= 1");
    const double rx = rho.rho(x);
    if (!(rx < r)) {
        std::ostringstream os;
        os << "clock level r = " << r << " must exceed rho(x) = " << rx;
        fail(ErrorKind::parameter, os.str());
    }
    Stops st;
    st.clock = ClockStop{0, [rho](double y) { return rho.log_rho(y); }, {r}};
    st.stop_at_clock = true;
    st.observe = {s};
    const PathEngine eng = base_engine(spec, opt.scheme, st, {functional_rate(rho)});

    ConditionedSample out;
    out.r = r;
    out.s = s;
    out.theoretical_exit = rx / r;
    const double rate = rx / r;
    std::size_t batch = static_cast<std::size_t>(std::ceil(1.1 * static_cast<double>(n_target) / rate)) + 64;
    while (out.accepted < n_target && out.proposed < opt.max_proposals) {
        batch = std::min(batch, opt.max_proposals - out.proposed);
        const std::size_t base = out.proposed;
        const auto props = parallel_map<detail::Proposal>(batch, opt.threads, [&](std::size_t i) {
            const PathResult p = eng.run(x, {opt.seed, base + i});
            detail::Proposal q;
            const auto sr = p.clock_time(r);
            q.exit = sr.has_value();
            q.before_s = q.exit && *sr <= s;
            q.censored = p.terminated_by == Termination::horizon;
            const Snapshot* snap = p.snapshot(s);
            q.xs = snap ? snap->x : kNaN;
            return q;
        });
        for (const auto& q : props) {
            out.exits += q.exit;
            out.clock_before_s += q.before_s;
            out.censored += q.censored;
            const bool ok = opt.variant == ConditionVariant::exit ? q.exit : q.exit && !q.before_s;
            if (ok) {
                require(std::isfinite(q.xs), ErrorKind::numerical, "accepted path has no observation at s");
                out.values.push_back(q.xs);
            }
        }
        out.proposed += batch;
        out.accepted = out.values.size();
        // top up the shortfall at the observed rate
        const double seen = std::max<double>(1.0, static_cast<double>(out.accepted)) / static_cast<double>(out.proposed);
        batch = static_cast<std::size_t>(
                    std::ceil(1.2 * static_cast<double>(n_target - std::min(n_target, out.accepted)) / seen)) + 64;
    }
    if (out.accepted == 0) {
        std::ostringstream os;
        os << "no accepted path in " << out.proposed << " proposals; rho(x)/r = " << rate;
        fail(ErrorKind::budget, os.str());
    }
    return out;
}

struct ExitProbability {
    double x = 0;
    std::vector<double> r;
    std::vector<McEstimate> estimate;  ///< P̂[T₀ > S_r] per level
    std::vector<double> theory;        ///< ρ(x)/r
    std::size_t censored = 0;
};

/// P̂_x[T₀ > S_r] for several clock levels from one set of paths.
inline ExitProbability exit_probability(const DiffusionSpec& spec, const ConcaveFn& rho, double x,
                                        std::vector<double> levels, std::size_t n, const McOptions& opt = {}) {
    require(x > 0, ErrorKind::parameter, "exit probability needs x > 0");
    require(!levels.empty() && n > 1, ErrorKind::parameter, "exit probability needs levels and n > 1");
    std::sort(levels.begin(), levels.end());
    const double rx = rho.rho(x);
    for (double r : levels)
        if (!(r > rx)) fail(ErrorKind::parameter, "clock level r must exceed rho(x)");
    Stops st;
    st.clock = ClockStop{0, [rho](double y) { return rho.log_rho(y); }, levels};
    st.stop_at_clock = true;
    const PathEngine eng = base_engine(spec, opt.scheme, st, {functional_rate(rho)});
    struct Row {
        std::vector<char> exit;
        bool censored;
    };
    const auto rows = parallel_map<Row>(n, opt.threads, [&](std::size_t i) {
        const PathResult p = eng.run(x, {opt.seed, i});
        Row row{std::vector<char>(levels.size()), p.terminated_by == Termination::horizon};
        for (std::size_t k = 0; k < levels.size(); ++k) row.exit[k] = p.clock_time(levels[k]).has_value();
        return row;
    });
    ExitProbability out;
    out.x = x;
    out.r = levels;
    for (const Row& row : rows) out.censored += row.censored;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        std::vector<double> ind(n);
        for (std::size_t i = 0; i < n; ++i) ind[i] = rows[i].exit[k];
        out.estimate.push_back(mean_estimate(ind));
        out.theory.push_back(rx / levels[k]);
    }
    return out;
}

/// n draws of X_s under P^[ρ]_x.
inline std::vector<double> sample_htransformed_marginal(const HTransformed& h, double x, double s, std::size_t n,
                                                        const McOptions& opt = {}) {
    require(x >= 0, ErrorKind::parameter, "x must be >= 0");
    require(s > 0, ErrorKind::parameter, "s must be > 0");
    Stops st;
    st.observe = {s};
    SimScheme scheme = opt.scheme;
    scheme.horizon = s;
    const PathEngine eng = h_engine(h, scheme, st);
    return parallel_map<double>(n, opt.threads, [&](std::size_t i) {
        const PathResult p = eng.run(x, {opt.seed, i});
        return p.snapshots.at(0).x;
    });
}

/// Largest gap between the two samples' masses over the cells cut by the
/// quantiles of `reference`: a finite family of bounded functionals g.
inline double quantile_cell_gap(const std::vector<double>& sample, std::vector<double> reference, int cells = 10) {
    require(!sample.empty() && !reference.empty(), ErrorKind::precondition, "quantile_cell_gap needs samples");
    std::sort(reference.begin(), reference.end());
    std::vector<double> cuts;
    for (int k = 1; k < cells; ++k) cuts.push_back(quantile(reference, static_cast<double>(k) / cells));
    auto masses = [&](const std::vector<double>& v) {
        std::vector<double> m(cells, 0.0);
        for (double y : v) {
            const auto k = std::upper_bound(cuts.begin(), cuts.end(), y) - cuts.begin();
            m[static_cast<std::size_t>(k)] += 1.0 / static_cast<double>(v.size());
        }
        return m;
    };
    const auto a = masses(sample), b = masses(reference);
    double gap = 0;
    for (int k = 0; k < cells; ++k) gap = std::max(gap, std::abs(a[k] - b[k]));
    return gap;
}

}  // namespace scaleclock
