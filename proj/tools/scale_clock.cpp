// scale-clock: batch front end over the scaleclock library.
//
//   scale-clock <command> --config <file> [--seed N] [--out DIR] [--threads K]
//
// Commands: classify, lambda0, eigen, qsd, simulate, verify <scenario>.
// Exit codes: 0 success / all claims pass, 1 a claim failed, 2 input or
// numerical error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "scaleclock/scenarios.hpp"

namespace fs = std::filesystem;
using namespace scaleclock;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "scale-clock-out";
    std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "RNG seed (overrides the config)");
    cmd->add_option("--out", c.out, "output directory")->capture_default_str();
    cmd->add_option("--threads", c.threads, "worker cap")->check(CLI::PositiveNumber);
}

RunConfig load(const Common& c) {
    RunConfig cfg = load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (c.threads) cfg.threads = *c.threads;
    return cfg;
}

fs::path out_dir(const Common& c) {
    fs::path d(c.out);
    std::error_code ec;
    fs::create_directories(d, ec);
    if (ec) fail(ErrorKind::parameter, "cannot create output directory " + d.string() + ": " + ec.message());
    return d;
}

/// λ from "lambda" or "lambda_over_lambda0" in the operation block.
double op_lambda(const RunConfig& cfg, const DiffusionSpec& spec, double fallback_fraction) {
    const Json& op = cfg.operation;
    if (op.contains("lambda") && op.contains("lambda_over_lambda0"))
        fail(ErrorKind::parameter, "give only one of operation.lambda and operation.lambda_over_lambda0");
    if (op.contains("lambda")) return get_or(op, "lambda", 0, "operation");
    return get_or(op, "lambda_over_lambda0", fallback_fraction, "operation") * lambda0_of(spec);
}

std::vector<double> grid(double hi, std::size_t points) {
    std::vector<double> x;
    for (std::size_t i = 0; i <= points; ++i) x.push_back(hi * static_cast<double>(i) / static_cast<double>(points));
    return x;
}

std::string integral_text(const IntegralOutcome& o) {
    if (o.divergent()) return "inf";
    return fmt_exact(o.value);
}

int cmd_classify(const Common& c) {
    const RunConfig cfg = load(c);
    check_operation(cfg, {"c_ref"});
    DiffusionSpec spec = build_spec(cfg.spec);
    if (cfg.rho) spec = h_transform(spec, build_rho(spec, *cfg.rho)).spec;
    const double c_ref = get_or(cfg.operation, "c_ref", 1.0, "operation");
    const BoundaryClass z = classify_boundary(spec, Boundary::zero, c_ref);
    const BoundaryClass i = classify_boundary(spec, Boundary::infinity, c_ref);
    std::cout << spec.label << '\n';
    std::cout << "0: " << to_string(z.kind) << ", inf: " << to_string(i.kind) << '\n';
    std::cout << "  at 0:   I = " << integral_text(z.I) << ", J = " << integral_text(z.J) << '\n';
    std::cout << "  at inf: I = " << integral_text(i.I) << ", J = " << integral_text(i.J) << '\n';
    CsvTable t{"classify", {"boundary", "class", "I", "J"}, {}};
    t.add({"0", to_string(z.kind), integral_text(z.I), integral_text(z.J)});
    t.add({"inf", to_string(i.kind), integral_text(i.I), integral_text(i.J)});
    write_csv(out_dir(c), t);
    return 0;
}

int cmd_lambda0(const Common& c) {
    const RunConfig cfg = load(c);
    check_operation(cfg, {"l_max"});
    const DiffusionSpec spec = build_spec(cfg.spec);
    const double tol = cfg.tolerance("lambda0", 1e-4);
    const Lambda0Estimate e = estimate_lambda0(spec, tol, get_or(cfg.operation, "l_max", 0.0, "operation"));
    std::cout << spec.label << '\n';
    std::cout << "lambda0 = " << fmt_exact(e.value) << " in [" << fmt_exact(e.lo) << ", " << fmt_exact(e.hi)
              << "], L_max = " << e.l_max << '\n';
    std::cout << "bracket at 2 L_max: [" << fmt_exact(e.lo_2l) << ", " << fmt_exact(e.hi_2l)
              << "], horizon stable: " << (e.horizon_stable ? "yes" : "no") << '\n';
    CsvTable t{"lambda0", {"value", "lo", "hi", "l_max", "lo_2l", "hi_2l", "horizon_stable", "analytic"}, {}};
    const auto exact = builtin_lambda0(spec);
    t.add({fmt_exact(e.value), fmt_exact(e.lo), fmt_exact(e.hi), fmt_exact(e.l_max), fmt_exact(e.lo_2l),
           fmt_exact(e.hi_2l), e.horizon_stable ? "1" : "0", exact ? fmt_exact(*exact) : "nan"});
    if (exact)
        std::cout << "analytic " << fmt_exact(*exact) << " inside bracket: "
                  << (e.lo <= *exact && *exact <= e.hi ? "yes" : "no") << '\n';
    write_csv(out_dir(c), t);
    return 0;
}

int cmd_eigen(const Common& c) {
    const RunConfig cfg = load(c);
    check_operation(cfg, {"lambda", "lambda_over_lambda0", "x_max", "points"});
    const DiffusionSpec spec = build_spec(cfg.spec);
    const double lambda = op_lambda(cfg, spec, 0.0);
    const double x_max = get_or(cfg.operation, "x_max", std::min(5.0, spec.extent), "operation");
    const auto points = static_cast<std::size_t>(get_or(cfg.operation, "points", 200, "operation"));
    const EigenFn psi = psi_for(spec, lambda);
    CsvTable t{"eigen", {"x", "psi", "dpsi_dx", "scale"}, {}};
    double gap = 0;
    for (double x : grid(x_max, points)) {
        const double p = psi.value(x), s = spec.scale.value(x);
        t.add_numbers({x, p, psi.slope(x), s});
        if (x > 0) gap = std::max(gap, std::abs(p - s) / s);
    }
    std::cout << spec.label << ": psi_" << fmt_param(lambda) << " on [0, " << fmt_param(x_max) << "] ("
              << (psi.source() == EigenSource::closed_form ? "closed form" : "solver") << ")\n";
    if (lambda == 0) std::cout << "psi == scale within 1e-08: " << (gap < 1e-8 ? "yes" : "no") << '\n';
    write_csv(out_dir(c), t);
    return 0;
}

int cmd_qsd(const Common& c) {
    const RunConfig cfg = load(c);
    check_operation(cfg, {"lambda", "lambda_over_lambda0", "x_max", "points"});
    const DiffusionSpec spec = build_spec(cfg.spec);
    const double lambda = op_lambda(cfg, spec, 1.0);
    const double x_max = get_or(cfg.operation, "x_max", 0.5 * spec.extent, "operation");
    const auto points = static_cast<std::size_t>(get_or(cfg.operation, "points", 400, "operation"));
    const QsdDensity q = qsd_density(spec, lambda);
    CsvTable t{"qsd", {"x", "density", "survival"}, {}};
    for (double x : grid(x_max, points)) t.add_numbers({x, q.density(x), std::exp(q.log_survival(x))});
    const double tol = cfg.tolerance("mass", 1e-4);
    std::cout << spec.label << ": QSD at lambda = " << fmt_exact(lambda) << '\n';
    std::cout << "mass = " << fmt_exact(q.mass) << ", mass within " << tol << ": "
              << (std::abs(q.mass - 1) <= tol ? "yes" : "no") << '\n';
    write_csv(out_dir(c), t);
    return 0;
}

int cmd_simulate(const Common& c) {
    const RunConfig cfg = load(c);
    check_operation(cfg, {"x0", "n_paths", "t_max", "record_every", "htransform"});
    const std::uint64_t seed = cfg.require_seed();
    const DiffusionSpec spec = build_spec(cfg.spec);
    const Json& op = cfg.operation;
    const double x0 = get_or(op, "x0", 1.0, "operation");
    const auto n = static_cast<std::size_t>(get_or(op, "n_paths", 10, "operation"));
    const auto every = static_cast<std::size_t>(get_or(op, "record_every", 100, "operation"));
    bool htransform = false;
    if (op.contains("htransform")) {
        if (!op.at("htransform").is_boolean()) fail(ErrorKind::parameter, "operation.htransform must be a boolean");
        htransform = op.at("htransform").get<bool>();
    }
    require(every >= 1, ErrorKind::parameter, "operation.record_every must be >= 1");
    SimScheme scheme = cfg.scheme;
    scheme.horizon = get_or(op, "t_max", std::min(scheme.horizon, 10.0), "operation");
    scheme.validate();
    std::optional<ConcaveFn> rho;
    if (cfg.rho) rho = build_rho(spec, *cfg.rho);
    if (htransform && !rho) fail(ErrorKind::parameter, "operation.htransform needs a 'rho' block");
    Stops st;
    st.record = true;
    std::vector<RealFn> rates;
    if (rho && !htransform) rates.push_back(functional_rate(*rho));

    const auto paths = parallel_map<PathResult>(n, cfg.threads, [&](std::size_t i) {
        const RngStream rng{seed, i};
        if (htransform) return simulate_htransform(h_transform(spec, *rho), x0, scheme, st, rng);
        return simulate_path(spec, x0, scheme, st, rng, rates);
    });
    CsvTable traj{"paths", {"path_id", "t", "x", "A_t"}, {}};
    CsvTable summary{"summary", {"path_id", "terminated_by", "t_end", "x_end", "T0", "A_end"}, {}};
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const PathResult& p = paths[i];
        const std::string id = std::to_string(i);
        for (std::size_t k = 0; k < p.times.size(); ++k) {
            if (k % every != 0 && k + 1 != p.times.size()) continue;
            const double a = p.functional.empty() ? 0.0 : p.functional[0][k];
            traj.add({id, fmt_exact(p.times[k]), fmt_exact(p.states[k]), fmt_exact(a)});
        }
        summary.add({id, to_string(p.terminated_by), fmt_exact(p.t_end), fmt_exact(p.x_end),
                     p.T0 ? fmt_exact(*p.T0) : "nan", fmt_exact(p.A_end.empty() ? 0.0 : p.A_end[0])});
    }
    const fs::path dir = out_dir(c);
    write_csv(dir, traj);
    write_csv(dir, summary);
    std::cout << "simulated " << n << " paths of " << spec.label << (htransform ? " under the h-transform" : "")
              << " into " << dir.string() << '\n';
    return 0;
}

int cmd_verify(const Common& c, const std::string& scenario) {
    const RunConfig cfg = load(c);
    const ScenarioOutput out = run_scenario(scenario, cfg);
    const fs::path dir = out_dir(c);
    for (const CsvTable& t : out.tables) write_csv(dir, t);
    write_csv(dir, claims_table(out.report));
    {
        std::ofstream f(dir / "report.json");
        f << report_json(out.report, kFormatVersion).dump(2) << '\n';
    }
    if (!out.plot.empty()) out.plot.write(dir / (scenario + ".svg"));
    std::cout << "scenario " << scenario << '\n';
    for (const auto& [k, v] : out.report.inputs) std::cout << "  " << k << " = " << v << '\n';
    for (const Claim& cl : out.report.claims) {
        std::cout << (cl.pass ? "PASS " : "FAIL ") << cl.name << ": estimate " << cl.estimate << ", target "
                  << cl.target << ", tolerance " << cl.tolerance << " (" << cl.rule << ")\n";
    }
    std::cout << (out.report.all_pass() ? "all claims pass" : "some claims fail") << '\n';
    return out.report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scale-clock: diffusions conditioned by a scale clock"};
    app.require_subcommand(1);
    Common common;
    std::string scenario;
    auto* classify = app.add_subcommand("classify", "Feller classification of both boundaries");
    auto* lambda0 = app.add_subcommand("lambda0", "bottom of the spectrum by bisection");
    auto* eigen = app.add_subcommand("eigen", "eigenfunction table psi_lambda");
    auto* qsd = app.add_subcommand("qsd", "quasi-stationary density table");
    auto* simulate = app.add_subcommand("simulate", "sample paths");
    auto* verify = app.add_subcommand("verify", "run a verification scenario");
    for (auto* cmd : {classify, lambda0, eigen, qsd, simulate, verify}) add_common(cmd, common);
    std::string names;
    for (const auto& [k, v] : scenarios()) names += (names.empty() ? "" : ", ") + k;
    verify->add_option("scenario", scenario, "one of: " + names)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    try {
        if (*classify) return cmd_classify(common);
        if (*lambda0) return cmd_lambda0(common);
        if (*eigen) return cmd_eigen(common);
        if (*qsd) return cmd_qsd(common);
        if (*simulate) return cmd_simulate(common);
        if (*verify) return cmd_verify(common, scenario);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
