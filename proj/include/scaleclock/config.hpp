#pragma once

// Run configuration: a JSON document with a spec block, an optional ρ block,
// command parameters, the seed and the simulation scheme. Unknown keys are
// rejected at every level.

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "concave.hpp"
#include "expr.hpp"
#include "simulate.hpp"

namespace scaleclock {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

namespace detail {

inline void check_keys(const Json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) fail(ErrorKind::parameter, where + " must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) fail(ErrorKind::parameter, "unknown key '" + where + "." + k + "'");
}

inline double number(const Json& j, const std::string& where) {
    if (!j.is_number()) fail(ErrorKind::parameter, where + " must be a number");
    return j.get<double>();
}

inline RealFn expression(const Json& j, const std::string& where, const Expr::Constants& constants) {
    if (j.is_number()) {
        const double v = j.get<double>();
        return [v](double) { return v; };
    }
    if (!j.is_string()) fail(ErrorKind::parameter, where + " must be a string expression or a number");
    try {
        const Expr e = Expr::parse(j.get<std::string>(), constants);
        return [e](double x) { return e(x); };
    } catch (const Error& err) {
        fail(ErrorKind::parameter, where + ": " + err.what());
    }
}

}  // namespace detail

/// Reads an optional number; errors name the offending field.
inline double get_or(const Json& j, const std::string& key, double fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    return detail::number(j.at(key), where + "." + key);
}

inline std::vector<double> get_list_or(const Json& j, const std::string& key, std::vector<double> fallback,
                                       const std::string& where) {
    if (!j.contains(key)) return fallback;
    const Json& a = j.at(key);
    if (!a.is_array() || a.empty()) fail(ErrorKind::parameter, where + "." + key + " must be a non-empty list");
    std::vector<double> out;
    for (const Json& v : a) out.push_back(detail::number(v, where + "." + key));
    return out;
}

/// {"builtin": "bm_drift" | "ou", "c": ...} or density expressions:
/// {"scale_density" | "log_scale_density", "speed_density" | "log_speed_density",
///  "drift", "sigma", "params", "extent", "lambda0_horizon", "label"}.
inline DiffusionSpec build_spec(const Json& j) {
    if (j.contains("builtin")) {
        detail::check_keys(j, "spec", {"builtin", "c"});
        const std::string name = j.at("builtin").is_string() ? j.at("builtin").get<std::string>() : "";
        const double c = get_or(j, "c", 1.0, "spec");
        if (name == "bm_drift") return make_bm_drift(c);
        if (name == "ou") return make_ou(c);
        fail(ErrorKind::parameter, "spec.builtin must be \"bm_drift\" or \"ou\"");
    }
    detail::check_keys(j, "spec",
                       {"scale_density", "log_scale_density", "speed_density", "log_speed_density", "drift", "sigma",
                        "params", "extent", "lambda0_horizon", "label"});
    Expr::Constants constants;
    if (j.contains("params")) {
        const Json& p = j.at("params");
        if (!p.is_object()) fail(ErrorKind::parameter, "spec.params must be an object");
        for (const auto& [k, v] : p.items()) constants[k] = detail::number(v, "spec.params." + k);
    }
    auto pick = [&](const char* plain, const char* logk) -> std::pair<RealFn, RealFn> {
        const bool a = j.contains(plain), b = j.contains(logk);
        if (a == b)
            fail(ErrorKind::parameter, std::string("spec needs exactly one of '") + plain + "' and '" + logk + "'");
        if (a) return {detail::expression(j.at(plain), std::string("spec.") + plain, constants), {}};
        return {{}, detail::expression(j.at(logk), std::string("spec.") + logk, constants)};
    };
    const auto [sd, lsd] = pick("scale_density", "log_scale_density");
    const auto [md, lmd] = pick("speed_density", "log_speed_density");
    DiffusionSpec spec;
    spec.extent = get_or(j, "extent", 20.0, "spec");
    spec.lambda0_horizon = get_or(j, "lambda0_horizon", 20.0, "spec");
    require(spec.extent > 0, ErrorKind::parameter, "spec.extent must be > 0");
    ScaleFn::Parts sp;
    sp.slope = sd;
    sp.log_slope = lsd;
    spec.scale = ScaleFn(std::move(sp));
    spec.scale.with_table(spec.extent, static_cast<std::size_t>(std::max(2000.0, 400 * spec.extent)));
    spec.speed = Measure1D(md, lmd);
    if (j.contains("drift") != j.contains("sigma"))
        fail(ErrorKind::parameter, "spec.drift and spec.sigma must be given together");
    if (j.contains("drift"))
        spec.sde = SdeForm{detail::expression(j.at("drift"), "spec.drift", constants),
                           detail::expression(j.at("sigma"), "spec.sigma", constants)};
    spec.label = j.contains("label") && j.at("label").is_string() ? j.at("label").get<std::string>() : "custom";
    validate_spec(spec, 0.01, std::min(10.0, spec.extent));
    return spec;
}

/// {"kind": "eigen" | "perturbed_psi" | "tail_beta" | "phi", "lambda" | "lambda_over_lambda0",
///  "epsilon", "phi" | "log_phi", "params"}.
inline ConcaveFn build_rho(const DiffusionSpec& spec, const Json& j) {
    detail::check_keys(j, "rho", {"kind", "lambda", "lambda_over_lambda0", "epsilon", "phi", "log_phi", "params"});
    const std::string kind = j.contains("kind") && j.at("kind").is_string() ? j.at("kind").get<std::string>() : "";
    auto lambda = [&]() {
        if (j.contains("lambda") == j.contains("lambda_over_lambda0"))
            fail(ErrorKind::parameter, "rho needs exactly one of 'lambda' and 'lambda_over_lambda0'");
        if (j.contains("lambda")) return detail::number(j.at("lambda"), "rho.lambda");
        return detail::number(j.at("lambda_over_lambda0"), "rho.lambda_over_lambda0") * lambda0_of(spec);
    };
    if (kind == "eigen") return from_eigen(spec, lambda());
    if (kind == "perturbed_psi") return perturbed_psi(spec, lambda());
    if (kind == "tail_beta") return tail_perturbation(spec, lambda(), get_or(j, "epsilon", 0.1, "rho")).beta;
    if (kind == "phi") {
        Expr::Constants constants;
        if (j.contains("params"))
            for (const auto& [k, v] : j.at("params").items()) constants[k] = detail::number(v, "rho.params." + k);
        if (j.contains("log_phi"))
            return build_from_phi_log(spec, detail::expression(j.at("log_phi"), "rho.log_phi", constants));
        if (j.contains("phi")) return build_from_phi(spec, detail::expression(j.at("phi"), "rho.phi", constants));
        fail(ErrorKind::parameter, "rho of kind phi needs 'phi' or 'log_phi'");
    }
    fail(ErrorKind::parameter, "rho.kind must be one of eigen, perturbed_psi, tail_beta, phi");
}

inline SimScheme build_scheme(const Json& j) {
    detail::check_keys(j, "scheme", {"kind", "step", "horizon", "bridge_correction"});
    SimScheme s;
    if (j.contains("kind")) {
        const std::string k = j.at("kind").is_string() ? j.at("kind").get<std::string>() : "";
        if (k == "euler_maruyama")
            s.kind = SchemeKind::euler_maruyama;
        else if (k == "birth_death_chain")
            s.kind = SchemeKind::birth_death_chain;
        else
            fail(ErrorKind::parameter, "scheme.kind must be euler_maruyama or birth_death_chain");
    }
    s.step = get_or(j, "step", s.step, "scheme");
    s.horizon = get_or(j, "horizon", s.horizon, "scheme");
    if (j.contains("bridge_correction")) {
        if (!j.at("bridge_correction").is_boolean()) fail(ErrorKind::parameter, "scheme.bridge_correction must be a boolean");
        s.bridge_correction = j.at("bridge_correction").get<bool>();
    }
    s.validate();
    return s;
}

struct RunConfig {
    int format_version = kFormatVersion;
    Json spec;
    std::optional<Json> rho;
    Json operation = Json::object();
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    SimScheme scheme;
    Json tolerances = Json::object();

    std::uint64_t require_seed() const {
        if (!seed) fail(ErrorKind::parameter, "seed is mandatory for stochastic commands (config 'seed' or --seed)");
        return *seed;
    }
    double tolerance(const std::string& key, double fallback) const { return get_or(tolerances, key, fallback, "tolerances"); }
};

inline RunConfig parse_config(const Json& j) {
    detail::check_keys(j, "config",
                       {"format_version", "spec", "rho", "operation", "seed", "threads", "scheme", "tolerances"});
    RunConfig c;
    if (j.contains("format_version")) {
        if (!j.at("format_version").is_number_integer() || j.at("format_version").get<int>() != kFormatVersion)
            fail(ErrorKind::parameter, "format_version must be " + std::to_string(kFormatVersion));
    }
    if (!j.contains("spec")) fail(ErrorKind::parameter, "config needs a 'spec' block");
    c.spec = j.at("spec");
    if (j.contains("rho")) c.rho = j.at("rho");
    if (j.contains("operation")) {
        c.operation = j.at("operation");
        if (!c.operation.is_object()) fail(ErrorKind::parameter, "operation must be an object");
    }
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) fail(ErrorKind::parameter, "seed must be a non-negative integer");
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("threads")) {
        if (!j.at("threads").is_number_unsigned() || j.at("threads").get<unsigned>() == 0)
            fail(ErrorKind::parameter, "threads must be a positive integer");
        c.threads = j.at("threads").get<unsigned>();
    }
    if (j.contains("scheme")) c.scheme = build_scheme(j.at("scheme"));
    if (j.contains("tolerances")) {
        c.tolerances = j.at("tolerances");
        if (!c.tolerances.is_object()) fail(ErrorKind::parameter, "tolerances must be an object");
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::parameter, "cannot open config file '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        fail(ErrorKind::parameter, std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

/// Checks that every key of an operation block is among `allowed`.
inline void check_operation(const RunConfig& c, const std::set<std::string>& allowed) {
    detail::check_keys(c.operation, "operation", allowed);
}

}  // namespace scaleclock
