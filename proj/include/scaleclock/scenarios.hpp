#pragma once

// Verification scenarios behind `scale-clock verify <name>`. Each scenario
// reads its parameters from the operation block and returns claims, CSV
// tables and one plot.

#include <chrono>
#include <functional>
#include <map>
#include <sstream>

#include "config.hpp"
#include "report.hpp"

namespace scaleclock {

struct ScenarioOutput {
    VerificationReport report;
    std::vector<CsvTable> tables;
    SvgPlot plot;
};

namespace detail {

/// Typed access to the operation block, recording every value used.
class OpReader {
public:
    OpReader(const RunConfig& cfg, VerificationReport& rep) : j_(cfg.operation), rep_(rep) {}

    double num(const std::string& key, double fallback) {
        const double v = get_or(j_, key, fallback, "operation");
        note(key, fmt_param(v));
        return v;
    }
    std::size_t count(const std::string& key, std::size_t fallback) {
        const double v = get_or(j_, key, static_cast<double>(fallback), "operation");
        if (!(v >= 1 && v == std::floor(v))) fail(ErrorKind::parameter, "operation." + key + " must be a positive integer");
        note(key, fmt_param(v));
        return static_cast<std::size_t>(v);
    }
    std::vector<double> list(const std::string& key, std::vector<double> fallback) {
        const auto v = get_list_or(j_, key, std::move(fallback), "operation");
        std::string s;
        for (double d : v) s += (s.empty() ? "" : " ") + fmt_param(d);
        note(key, s);
        return v;
    }
    std::string str(const std::string& key, const std::string& fallback) {
        std::string v = fallback;
        if (j_.contains(key)) {
            if (!j_.at(key).is_string()) fail(ErrorKind::parameter, "operation." + key + " must be a string");
            v = j_.at(key).get<std::string>();
        }
        note(key, v);
        return v;
    }
    bool flag(const std::string& key, bool fallback) {
        bool v = fallback;
        if (j_.contains(key)) {
            if (!j_.at(key).is_boolean()) fail(ErrorKind::parameter, "operation." + key + " must be a boolean");
            v = j_.at(key).get<bool>();
        }
        note(key, v ? "true" : "false");
        return v;
    }
    bool has(const std::string& key) const { return j_.contains(key); }

private:
    void note(const std::string& k, const std::string& v) { rep_.inputs.emplace_back(k, v); }
    const Json& j_;
    VerificationReport& rep_;
};

inline McOptions mc_options(const RunConfig& cfg) {
    McOptions o;
    o.seed = cfg.require_seed();
    o.threads = cfg.threads;
    o.scheme = cfg.scheme;
    return o;
}

inline ConcaveFn require_rho(const RunConfig& cfg, const DiffusionSpec& spec) {
    if (!cfg.rho) fail(ErrorKind::parameter, "this scenario needs a 'rho' block");
    return build_rho(spec, *cfg.rho);
}

inline double builtin_c(const DiffusionSpec& spec, BuiltinKind kind, const char* scenario) {
    if (!spec.builtin || spec.builtin->kind != kind)
        fail(ErrorKind::parameter, std::string(scenario) + " needs spec.builtin = " +
                                       (kind == BuiltinKind::bm_drift ? "bm_drift" : "ou"));
    return spec.builtin->c;
}

inline std::string label_at(const char* what, double v) { return std::string(what) + "=" + fmt_param(v); }

}  // namespace detail

inline ScenarioOutput scenario_exit_law(const RunConfig& cfg, const DiffusionSpec& spec) {
    check_operation(cfg, {"x", "r", "n", "step_halving"});
    ScenarioOutput out;
    detail::OpReader op(cfg, out.report);
    const ConcaveFn rho = detail::require_rho(cfg, spec);
    const double x = op.num("x", 1.0);
    const auto levels = op.list("r", {10.0, 100.0});
    const std::size_t n = op.count("n", 20000);
    const bool halving = op.flag("step_halving", false);
    const double k = cfg.tolerance("se_multiplier", 3.0);
    McOptions opt = detail::mc_options(cfg);
    if (halving) opt.scheme.coarsen = 2;
    const ExitProbability ep = exit_probability(spec, rho, x, levels, n, opt);
    std::optional<ExitProbability> fine;
    if (halving) {
        McOptions f = opt;
        f.scheme.coarsen = 1;
        f.scheme.step = opt.scheme.step / 2;
        fine = exit_probability(spec, rho, x, levels, n, f);
    }
    CsvTable t{"exit_law", {"r", "estimate", "se", "theory"}, {}};
    if (fine) t.header.push_back("estimate_half_step");
    for (std::size_t i = 0; i < ep.r.size(); ++i) {
        const std::string at = detail::label_at("r", ep.r[i]);
        out.report.claims.push_back(claim_within("exit probability " + at, ep.theory[i], ep.estimate[i], k));
        std::vector<double> row{ep.r[i], ep.estimate[i].value, ep.estimate[i].se(), ep.theory[i]};
        if (fine) {
            const double e = ep.estimate[i].se();
            out.report.claims.push_back(claim_abs("step halving " + at, ep.estimate[i].value,
                                                  fine->estimate[i].value, e));
            out.report.claims.back().rule = "|half-step estimate - estimate| <= 1 SE";
            row.push_back(fine->estimate[i].value);
        }
        t.add_numbers(row);
    }
    out.tables.push_back(std::move(t));
    std::vector<double> est;
    for (const auto& e : ep.estimate) est.push_back(e.value);
    out.plot = SvgPlot("exit probability", "r", "P[T0 > S_r]");
    out.plot.add("rho(x)/r", ep.r, ep.theory).add("estimate", ep.r, est, SvgPlot::Style::points).log_x();
    return out;
}

inline ScenarioOutput scenario_conditional_limit(const RunConfig& cfg, const DiffusionSpec& spec) {
    check_operation(cfg, {"x", "s", "r", "n_accept", "n_reference", "variant", "max_proposals"});
    ScenarioOutput out;
    detail::OpReader op(cfg, out.report);
    const ConcaveFn rho = detail::require_rho(cfg, spec);
    const double x = op.num("x", 1.0), s = op.num("s", 1.0);
    auto levels = op.list("r", {1e2, 1e3, 1e4});
    std::sort(levels.begin(), levels.end());
    const std::size_t n_acc = op.count("n_accept", 1000), n_ref = op.count("n_reference", 4000);
    const std::string v = op.str("variant", "auto");
    ConditionOptions co;
    static_cast<McOptions&>(co) = detail::mc_options(cfg);
    co.max_proposals = op.count("max_proposals", co.max_proposals);
    if (v == "auto")
        co.variant = default_variant(rho);
    else if (v == "exit")
        co.variant = ConditionVariant::exit;
    else if (v == "exit_after_s")
        co.variant = ConditionVariant::exit_after_s;
    else
        fail(ErrorKind::parameter, "operation.variant must be auto, exit or exit_after_s");
    const double level = cfg.tolerance("ks_level", 0.01);

    McOptions ro = detail::mc_options(cfg);
    ro.seed = splitmix64(ro.seed ^ 0x7f4a7c15ULL);
    const auto reference = sample_htransformed_marginal(h_transform(spec, rho), x, s, n_ref, ro);

    CsvTable t{"conditional_limit", {"r", "accepted", "proposed", "ks", "ks_critical", "ks_se", "wasserstein1"}, {}};
    std::vector<LawComparison> cmp;
    std::vector<double> last;
    for (double r : levels) {
        const ConditionedSample cs = sample_conditioned(spec, rho, x, r, s, n_acc, co);
        cmp.push_back(compare_laws(cs.values, reference, level));
        t.add_numbers({r, static_cast<double>(cs.accepted), static_cast<double>(cs.proposed), cmp.back().ks,
                       cmp.back().critical, cmp.back().ks_se, cmp.back().wasserstein1});
        if (r == levels.back()) {
            out.report.claims.push_back(claim_below("accepted shortfall at r=" + fmt_param(r),
                                                    static_cast<double>(n_acc) - static_cast<double>(cs.accepted), 0.5));
            last = cs.values;
        }
    }
    out.report.claims.push_back(claim_below("KS at r=" + fmt_param(levels.back()), cmp.back().ks, cmp.back().critical));
    for (std::size_t i = 1; i < cmp.size(); ++i) {
        const double se = std::max(cmp[i].ks_se, cmp[i - 1].ks_se);
        out.report.claims.push_back(claim_below("KS non-increasing r=" + fmt_param(levels[i - 1]) + "->" +
                                                    fmt_param(levels[i]),
                                                cmp[i].ks, cmp[i - 1].ks + se));
    }
    out.tables.push_back(std::move(t));
    out.plot = SvgPlot("conditioned X_s vs h-transform", "x", "ECDF");
    out.plot.add_ecdf("conditioned, r=" + fmt_param(levels.back()), last).add_ecdf("P^[rho] marginal", reference);
    return out;
}

inline ScenarioOutput scenario_martingale_mean(const RunConfig& cfg, const DiffusionSpec& spec) {
    check_operation(cfg, {"x", "t", "n"});
    ScenarioOutput out;
    detail::OpReader op(cfg, out.report);
    const ConcaveFn rho = detail::require_rho(cfg, spec);
    const double x = op.num("x", 1.0);
    const auto times = op.list("t", {0.5, 1.0, 2.0});
    const std::size_t n = op.count("n", 20000);
    const double k = cfg.tolerance("se_multiplier", 3.0);
    const MartingaleMean mm = martingale_mean(spec, rho, x, times, n, detail::mc_options(cfg));
    CsvTable t{"martingale_mean", {"t", "mean", "se"}, {}};
    std::vector<double> v, lo, hi;
    for (std::size_t i = 0; i < mm.t.size(); ++i) {
        out.report.claims.push_back(claim_within("E M_t t=" + fmt_param(mm.t[i]), 1.0, mm.mean[i], k));
        t.add_numbers({mm.t[i], mm.mean[i].value, mm.mean[i].se()});
        v.push_back(mm.mean[i].value);
        lo.push_back(mm.mean[i].value - k * mm.mean[i].se());
        hi.push_back(mm.mean[i].value + k * mm.mean[i].se());
    }
    out.tables.push_back(std::move(t));
    out.plot = SvgPlot("martingale mean", "t", "mean of M_t");
    out.plot.add("1", mm.t, std::vector<double>(mm.t.size(), 1.0))
        .add("estimate", mm.t, v, SvgPlot::Style::points)
        .add("-k SE", mm.t, lo)
        .add("+k SE", mm.t, hi);
    return out;
}

inline ScenarioOutput scenario_qsd_fixed_point(const RunConfig& cfg, const DiffusionSpec& spec) {
    check_operation(cfg, {"lambda_over_lambda0", "points", "x_max"});
    ScenarioOutput out;
    detail::OpReader op(cfg, out.report);
    const auto fractions = op.list("lambda_over_lambda0", {1.0, 0.5});
    const std::size_t points = op.count("points", 200);
    const double x_max = op.num("x_max", 0.5 * spec.extent);
    const double tol_d = cfg.tolerance("density", 1e-5), tol_m = cfg.tolerance("mass", 1e-4);
    const double l0 = lambda0_of(spec);
    CsvTable t{"qsd_fixed_point", {"lambda", "x", "nu", "phi_nu"}, {}};
    out.plot = SvgPlot("QSD and its renewal transform", "x", "Lebesgue density");
    for (double f : fractions) {
        const double lambda = f * l0;
        const QsdDensity q = qsd_density(spec, lambda);
        const EigenFn psi = psi_for(spec, -lambda);
        const RenewalTransform rt =
            renewal_transform(spec, [&](double y) { return std::log(lambda) + psi.log_value(y); });
        double err = 0;
        std::vector<double> xs, a, b;
        for (std::size_t i = 1; i <= points; ++i) {
            const double x = x_max * static_cast<double>(i) / static_cast<double>(points);
            const double md = spec.speed.density(x);
            const double nu = q.density(x), phi = rt.rho.rho(x) * md;
            err = std::max(err, std::abs(nu - phi));
            t.add_numbers({lambda, x, nu, phi});
            xs.push_back(x);
            a.push_back(nu);
            b.push_back(phi);
        }
        const std::string at = detail::label_at("lambda", lambda);
        out.report.claims.push_back(claim_below("sup density error " + at, err, tol_d));
        out.report.claims.push_back(claim_abs("normalization " + at, 1.0, q.mass, tol_m));
        out.plot.add("nu " + at, xs, a).add("Phi nu " + at, xs, b, SvgPlot::Style::points);
    }
    out.tables.push_back(std::move(t));
    return out;
}

inline ScenarioOutput scenario_tail_triviality(const RunConfig& cfg, const DiffusionSpec& spec) {
    check_operation(cfg, {"lambda", "expect"});
    ScenarioOutput out;
    detail::OpReader op(cfg, out.report);
    std::vector<ConcaveFn> rhos;
    if (op.has("lambda")) {
        for (double l : op.list("lambda", {})) rhos.push_back(from_eigen(spec, l));
    } else {
        rhos.push_back(detail::require_rho(cfg, spec));
    }
    const std::string expect = op.str("expect", "");
    if (!expect.empty() && expect != "trivial" && expect != "nontrivial")
        fail(ErrorKind::parameter, "operation.expect must be trivial or nontrivial");
    CsvTable t{"tail_triviality", {"rho", "trivial", "via", "evidence"}, {}};
    CsvTable ratios{"prop43_ratios", {"rho", "x", "ratio"}, {}};
    out.plot = SvgPlot("ratio (1/s(x)) int s^2 dm", "x", "ratio");
    for (const ConcaveFn& rho : rhos) {
        const TailTriviality tt = tail_triviality(spec, rho);
        t.add({"\"" + rho.label() + "\"", tt.trivial ? "1" : "0", to_string(tt.via), "\"" + tt.evidence + "\""});
        Claim c;
        c.name = "tail trivial for " + rho.label();
        c.estimate = tt.trivial ? 1 : 0;
        c.target = expect.empty() ? c.estimate : (expect == "trivial" ? 1 : 0);
        c.pass = c.estimate == c.target;
        c.rule = expect.empty() ? "decided" : "decision == expected (1 trivial, 0 nontrivial)";
        out.report.claims.push_back(c);
        std::vector<double> xs, rs;
        for (const auto& [x, r] : tt.prop43_ratios) {
            ratios.add({"\"" + rho.label() + "\"", fmt_exact(x), fmt_exact(r)});
            xs.push_back(x);
            rs.push_back(r);
        }
        if (!xs.empty() && out.plot.empty()) out.plot.add(rho.label(), xs, rs);
    }
    out.tables.push_back(std::move(t));
    out.tables.push_back(std::move(ratios));
    return out;
}

inline ScenarioOutput scenario_bm_ratio_zero(const RunConfig& cfg, const DiffusionSpec& spec) {
    check_operation(cfg, {"lambda", "mu", "x", "y", "n", "bound"});
    const double c = detail::builtin_c(spec, BuiltinKind::bm_drift, "bm_ratio_zero");
    ScenarioOutput out;
    detail::OpReader op(cfg, out.report);
    const double l0 = c * c / 2;
    const double lambda = op.num("lambda", 0.4 * l0), mu = op.num("mu", l0), x = op.num("x", 0.0);
    const auto levels = op.list("y", {5.0, 10.0, 20.0});
    const std::size_t n = op.count("n", 2000);
    const double bound = op.num("bound", 0.05);
    const RatioLimit rl = ratio_martingale_limit(spec, lambda, mu, x, levels, n, detail::mc_options(cfg));
    CsvTable t{"ratio_medians", {"y", "median_W", "censored_fraction"}, {}};
    for (std::size_t i = 0; i < rl.levels.size(); ++i) {
        t.add_numbers({rl.levels[i], rl.medians[i], rl.censored_fraction[i]});
        if (i > 0)
            out.report.claims.push_back(claim_below("median decreases y=" + fmt_param(rl.levels[i]), rl.medians[i],
                                                    rl.medians[i - 1]));
    }
    out.report.claims.push_back(claim_below("median at y=" + fmt_param(rl.levels.back()), rl.medians.back(), bound));
    out.report.claims.push_back(claim_below("censored fraction", rl.censored_fraction.back(), 0.05));
    out.tables.push_back(std::move(t));
    out.plot = SvgPlot("median of W at T_y", "y", "median W");
    out.plot.add("median", rl.levels, rl.medians, SvgPlot::Style::points).add("median ", rl.levels, rl.medians);
    return out;
}

inline ScenarioOutput scenario_ou_gamma_limit(const RunConfig& cfg, const DiffusionSpec& spec) {
    check_operation(cfg, {"lambda", "mu", "x", "y", "n"});
    const double c = detail::builtin_c(spec, BuiltinKind::ou, "ou_gamma_limit");
    ScenarioOutput out;
    detail::OpReader op(cfg, out.report);
    const double lambda = op.num("lambda", 0.25 * c), mu = op.num("mu", 0.5 * c), x = op.num("x", 0.0);
    const double y = op.num("y", 6.0 / std::sqrt(c));
    const std::size_t n = op.count("n", 2000);
    const double level = cfg.tolerance("ks_level", 0.01);
    const RatioLimit rl = ratio_martingale_limit(spec, lambda, mu, x, {y}, n, detail::mc_options(cfg));
    auto cdf = [&](double w) { return gamma_power_cdf(c, lambda, mu, w); };
    const OneSampleKs ks = ks_against(rl.W[0], cdf, level);
    out.report.claims.push_back(claim_below("KS of W vs Gamma-power law", ks.ks, ks.critical));
    out.report.claims.push_back(claim_below("censored fraction", rl.censored_fraction[0], 0.05));
    CsvTable t{"w_quantiles", {"p", "w", "cdf"}, {}};
    for (int i = 1; i < 100; ++i) {
        const double w = quantile(rl.W[0], i / 100.0);
        t.add_numbers({i / 100.0, w, cdf(w)});
    }
    out.tables.push_back(std::move(t));
    std::vector<double> ws, fs;
    for (int i = 0; i <= 200; ++i) {
        const double w = quantile(rl.W[0], 0.005) * std::pow(quantile(rl.W[0], 0.995) / quantile(rl.W[0], 0.005), i / 200.0);
        ws.push_back(w);
        fs.push_back(cdf(w));
    }
    out.plot = SvgPlot("W at T_y vs Gamma-power law", "w", "CDF");
    out.plot.add_ecdf("empirical", rl.W[0]).add("Gamma-power", ws, fs).log_x();
    return out;
}

inline ScenarioOutput scenario_abs_continuity(const RunConfig& cfg, const DiffusionSpec& spec) {
    check_operation(cfg, {"lambda", "epsilon", "x", "n", "y_stop", "s_event"});
    ScenarioOutput out;
    detail::OpReader op(cfg, out.report);
    const double l0 = lambda0_of(spec);
    const double lambda = op.num("lambda", 0.5 * l0), eps = op.num("epsilon", 0.1), x = op.num("x", 1.0);
    const std::size_t n = op.count("n", 4000);
    const double y_stop = op.num("y_stop", 12.0), s_event = op.num("s_event", 1.0);
    const double k = cfg.tolerance("se_multiplier", 3.0);
    const TailPerturbation tp = tail_perturbation(spec, lambda, eps);
    const AbsContinuityReport cond = abs_continuity_conditions(spec, tp.alpha, tp.beta);
    out.report.claims.push_back(claim_abs("analytic conditions hold", 1.0, cond.all_ok ? 1.0 : 0.0, 0.0));
    const AbsContinuityMc mc =
        mutual_abs_continuity_mc(spec, tp.alpha, tp.beta, x, n, y_stop, detail::mc_options(cfg), 1.0, s_event);
    out.report.claims.push_back(claim_within("identity on the whole space", 1.0, mc.omega, k));
    out.report.claims.push_back(claim_below("censored mass", mc.censored, 0.05));
    const McEstimate diff{mc.event_rhs.value - mc.event_direct.value,
                          std::hypot(mc.event_rhs.se(), mc.event_direct.se()), n};
    out.report.claims.push_back(claim_within("identity on {X_s > median} minus direct", 0.0, diff, k));
    CsvTable t{"abs_continuity", {"quantity", "value", "se"}, {}};
    t.add({"omega", fmt_exact(mc.omega.value), fmt_exact(mc.omega.se())});
    t.add({"event_rhs", fmt_exact(mc.event_rhs.value), fmt_exact(mc.event_rhs.se())});
    t.add({"event_direct", fmt_exact(mc.event_direct.value), fmt_exact(mc.event_direct.se())});
    t.add({"censored", fmt_exact(mc.censored), "0"});
    t.add({"median_x_s", fmt_exact(mc.median_x1), "0"});
    t.add({"eq33_value", fmt_exact(cond.eq33_value), "0"});
    out.tables.push_back(std::move(t));
    std::vector<double> xs, d;
    for (int i = 1; i <= 200; ++i) {
        xs.push_back(y_stop * i / 200.0);
        d.push_back(tp.delta(xs.back()));
    }
    out.plot = SvgPlot("killing-rate gap of the pair", "x", "delta(x)");
    out.plot.add("delta", xs, d);
    return out;
}

inline ScenarioOutput scenario_attraction_ratio(const RunConfig& cfg, const DiffusionSpec& spec) {
    check_operation(cfg, {"family", "lambda", "t", "n"});
    ScenarioOutput out;
    detail::OpReader op(cfg, out.report);
    const double l0 = lambda0_of(spec);
    const std::string family = op.str("family", "qsd");
    const double lambda = op.num("lambda", 0.5 * l0);
    const auto times = op.list("t", {2.0, 4.0, 6.0});
    const std::size_t n = op.count("n", 20000);
    const double k = cfg.tolerance("se_multiplier", 3.0);
    const McOptions opt = detail::mc_options(cfg);
    const RealFn one = [](double) { return 1.0; };
    AttractionResult a;
    if (family == "qsd") {
        const EigenFn psi = psi_for(spec, -lambda);
        a = attraction_ratio(spec, [&](double x) { return std::log(lambda) + psi.log_value(x); }, lambda, one, times,
                             n, opt, false);
        for (std::size_t i = 0; i < a.t.size(); ++i)
            out.report.claims.push_back(claim_within("ratio t=" + fmt_param(a.t[i]), 1.0, a.ratio[i], k));
    } else if (family == "perturbed_psi") {
        const PerturbedPsi p = perturbed_psi_construction(spec, lambda);
        const double hi = std::max(sampler_extent(spec, p.mu_log_survival, spec.extent),
                                   sampler_extent(spec, p.phi_mu_log_survival, spec.extent));
        a = attraction_ratio(spec, SurvivalSampler(p.mu_log_survival, hi), SurvivalSampler(p.phi_mu_log_survival, hi),
                             lambda, p.mean_T0, one, times, n, opt, true);
        out.report.claims.push_back(
            claim_within("ratio t=" + fmt_param(a.t.back()), a.target, a.ratio.back(), k));
    } else {
        fail(ErrorKind::parameter, "operation.family must be qsd or perturbed_psi");
    }
    out.report.inputs.emplace_back("karamata", a.karamata.inconclusive ? "inconclusive"
                                                   : (a.karamata.i_holds && a.karamata.ii_holds ? "holds" : "fails"));
    CsvTable t{"attraction_ratio", {"t", "ratio", "se", "target"}, {}};
    std::vector<double> r;
    for (std::size_t i = 0; i < a.t.size(); ++i) {
        t.add_numbers({a.t[i], a.ratio[i].value, a.ratio[i].se(), a.target});
        r.push_back(a.ratio[i].value);
    }
    CsvTable phi{"survival_functional", {"t", "phi_hat"}, {}};
    for (std::size_t i = 0; i < a.phi_t.size(); ++i) phi.add_numbers({a.phi_t[i], a.phi_hat[i]});
    out.tables.push_back(std::move(t));
    out.tables.push_back(std::move(phi));
    out.plot = SvgPlot("renewal-transform attraction", "t", "ratio");
    out.plot.add("ratio", a.t, r, SvgPlot::Style::points)
        .add("1/(lambda E T0)", a.t, std::vector<double>(a.t.size(), a.target));
    return out;
}

inline ScenarioOutput scenario_hitting_asymptotics(const RunConfig& cfg, const DiffusionSpec& spec) {
    check_operation(cfg, {"law", "lambda", "x", "y", "n", "beta"});
    ScenarioOutput out;
    detail::OpReader op(cfg, out.report);
    const std::string law = op.str("law", "bes3_laplace");
    const double k = cfg.tolerance("se_multiplier", 3.0), level = cfg.tolerance("ks_level", 0.01);
    const McOptions opt = detail::mc_options(cfg);
    const double x = op.num("x", 0.0);
    const std::size_t n = op.count("n", 4000);
    CsvTable t{"hitting_asymptotics", {"quantity", "estimate", "se", "target"}, {}};
    if (law == "bes3_laplace") {
        const double c = detail::builtin_c(spec, BuiltinKind::bm_drift, "bes3_laplace");
        const double y = op.num("y", 3.0);
        const auto betas = op.list("beta", {0.5, 1.0, 2.0, 4.0});
        const HittingSample hs = hitting_times(h_transform(spec, from_eigen(spec, c * c / 2)), x, {y}, n, opt);
        out.report.claims.push_back(claim_below("censored fraction", hs.censored_fraction(0), 0.05));
        std::vector<double> est, th;
        for (double b : betas) {
            std::vector<double> v;
            for (double T : hs.times[0]) v.push_back(std::exp(-b * T / (y * y)));
            const McEstimate e = mean_estimate(v);
            const double target = std::sqrt(2 * b) / std::sinh(std::sqrt(2 * b));
            out.report.claims.push_back(claim_within("Laplace of T_y/y^2 beta=" + fmt_param(b), target, e, k));
            t.add({"laplace beta=" + fmt_param(b), fmt_exact(e.value), fmt_exact(e.se()), fmt_exact(target)});
            est.push_back(e.value);
            th.push_back(target);
        }
        out.plot = SvgPlot("Laplace transform of T_y/y^2", "beta", "E exp(-beta T_y/y^2)");
        out.plot.add("sqrt(2b)/sinh sqrt(2b)", betas, th).add("estimate", betas, est, SvgPlot::Style::points);
    } else if (law == "bm_linear_mean") {
        const double c = detail::builtin_c(spec, BuiltinKind::bm_drift, "bm_linear_mean");
        const double lambda = op.num("lambda", 0.25 * c * c), y = op.num("y", 20.0);
        const HittingSample hs = hitting_times(h_transform(spec, from_eigen(spec, lambda)), x, {y}, n, opt);
        out.report.claims.push_back(claim_below("censored fraction", hs.censored_fraction(0), 0.05));
        std::vector<double> v;
        for (double T : hs.times[0]) v.push_back(T / y);
        const McEstimate e = mean_estimate(v);
        const double target = 1 / std::sqrt(c * c - 2 * lambda);
        out.report.claims.push_back(claim_within("mean of T_y/y", target, e, k));
        t.add({"mean T_y/y", fmt_exact(e.value), fmt_exact(e.se()), fmt_exact(target)});
        out.plot = SvgPlot("T_y/y", "T_y/y", "ECDF");
        out.plot.add_ecdf("T_y/y", v).add("limit", {target, target}, {0.0, 1.0});
    } else if (law == "ou_log_shift") {
        const double c = detail::builtin_c(spec, BuiltinKind::ou, "ou_log_shift");
        const double lambda = op.num("lambda", 0.5 * c), y = op.num("y", 6.0);
        const HittingSample hs = hitting_times(h_transform(spec, from_eigen(spec, lambda)), x, {y}, n, opt);
        out.report.claims.push_back(claim_below("censored fraction", hs.censored_fraction(0), 0.05));
        std::vector<double> v;
        for (double T : hs.times[0]) v.push_back(T - std::log(y) / c);
        auto cdf = [&](double s) { return ou_hitting_limit_cdf(c, lambda, s); };
        const OneSampleKs ks = ks_against(v, cdf, level);
        out.report.claims.push_back(claim_below("KS of T_y - log(y)/c", ks.ks, ks.critical));
        t.add({"ks", fmt_exact(ks.ks), "0", fmt_exact(ks.critical)});
        std::vector<double> ss, fs;
        const double lo = quantile(v, 0.005), hi = quantile(v, 0.995);
        for (int i = 0; i <= 200; ++i) {
            ss.push_back(lo + (hi - lo) * i / 200.0);
            fs.push_back(cdf(ss.back()));
        }
        out.plot = SvgPlot("T_y - log(y)/c", "t", "CDF");
        out.plot.add_ecdf("empirical", v).add("limit law", ss, fs);
    } else {
        fail(ErrorKind::parameter, "operation.law must be bes3_laplace, bm_linear_mean or ou_log_shift");
    }
    out.tables.push_back(std::move(t));
    return out;
}

using ScenarioFn = std::function<ScenarioOutput(const RunConfig&, const DiffusionSpec&)>;

inline const std::map<std::string, ScenarioFn>& scenarios() {
    static const std::map<std::string, ScenarioFn> table = {
        {"exit_law", scenario_exit_law},
        {"conditional_limit", scenario_conditional_limit},
        {"martingale_mean", scenario_martingale_mean},
        {"qsd_fixed_point", scenario_qsd_fixed_point},
        {"tail_triviality", scenario_tail_triviality},
        {"bm_ratio_zero", scenario_bm_ratio_zero},
        {"ou_gamma_limit", scenario_ou_gamma_limit},
        {"abs_continuity", scenario_abs_continuity},
        {"attraction_ratio", scenario_attraction_ratio},
        {"hitting_asymptotics", scenario_hitting_asymptotics},
    };
    return table;
}

inline ScenarioOutput run_scenario(const std::string& name, const RunConfig& cfg) {
    const auto& table = scenarios();
    const auto it = table.find(name);
    if (it == table.end()) {
        std::string known;
        for (const auto& [k, v] : table) known += (known.empty() ? "" : ", ") + k;
        fail(ErrorKind::parameter, "unknown scenario '" + name + "' (known: " + known + ")");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const DiffusionSpec spec = build_spec(cfg.spec);
    ScenarioOutput out = it->second(cfg, spec);
    out.report.scenario = name;
    out.report.inputs.insert(out.report.inputs.begin(), {"spec", spec.label});
    if (cfg.rho) out.report.inputs.insert(out.report.inputs.begin() + 1, {"rho", cfg.rho->dump()});
    if (cfg.seed) out.report.inputs.emplace_back("seed", std::to_string(*cfg.seed));
    out.report.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace scaleclock
