#include "areaflux/run_config.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "areaflux/drawdown_tax.hpp"
#include "areaflux/errors.hpp"
#include "areaflux/expr.hpp"
#include "areaflux/first_passage.hpp"
#include "areaflux/omega.hpp"

namespace areaflux::cli {

namespace {

using nlohmann::json;

[[noreturn]] void config_fail(const std::string& field, const std::string& why) {
    throw ConfigError("config field '" + field + "': " + why);
}

double require_number(const json& j, const std::string& field) {
    if (!j.contains(field) || !j[field].is_number())
        config_fail(field, "required number is missing");
    return j[field].get<double>();
}

double number_or(const json& j, const std::string& field, double dflt) {
    if (!j.contains(field)) return dflt;
    if (!j[field].is_number()) config_fail(field, "must be a number");
    return j[field].get<double>();
}

std::string string_or(const json& j, const std::string& field,
                      const std::string& dflt) {
    if (!j.contains(field)) return dflt;
    if (!j[field].is_string()) config_fail(field, "must be a string");
    return j[field].get<std::string>();
}

AreaWeight weight_from_source(const std::string& src) {
    if (src == "unit") return AreaWeight::unit();
    if (src == "square") return AreaWeight::square();
    return AreaWeight::from_expression(src);
}

fp::Side side_from(const json& params) {
    const std::string s = string_or(params, "side", "lower");
    if (s == "lower") return fp::Side::Lower;
    if (s == "upper") return fp::Side::Upper;
    config_fail("side", "must be \"lower\" or \"upper\"");
}

// The sweep variable: a task parameter given as an array of numbers.
struct Sweep {
    std::string key;
    std::vector<double> values;
};

Sweep sweep_of(const json& params, const std::vector<std::string>& candidates) {
    for (const auto& key : candidates) {
        if (params.contains(key) && params[key].is_array()) {
            std::vector<double> vals;
            for (const auto& v : params[key]) {
                if (!v.is_number()) config_fail(key, "grid entries must be numbers");
                vals.push_back(v.get<double>());
            }
            if (vals.empty()) config_fail(key, "grid must be nonempty");
            return {key, vals};
        }
    }
    return {"", {}};
}

json row_json(const ResultRow& r) {
    json out;
    out["input"] = r.input;
    if (std::isfinite(r.value))
        out["value"] = r.value;
    else
        out["value"] = "inf";
    if (r.std_error) out["std_error"] = *r.std_error;
    return out;
}

json mc_diag_json(const mc::McEstimate& e) {
    return json{{"paths_used", e.paths_used},
                {"censored", e.diagnostics.censored},
                {"lower_hits", e.diagnostics.lower_hits},
                {"upper_hits", e.diagnostics.upper_hits},
                {"horizon_doublings", e.diagnostics.horizon_doublings},
                {"truncation_bias_warning", e.diagnostics.truncation_bias_warning}};
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file '" + path + "' cannot be opened");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse(j);
}

RunConfig RunConfig::parse(const json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    RunConfig cfg;
    if (!j.contains("model") || !j["model"].is_object())
        config_fail("model", "required object is missing");
    cfg.model = j["model"];
    cfg.task = string_or(j, "task", "");
    static const std::vector<std::string> known = {
        "fpa-laplace",  "fpa-moments",   "omega-prob",
        "omega-laplace", "drawdown-laplace", "ay-time",
        "tax-ruin-time", "tax-ruin-area", "simulate"};
    if (std::find(known.begin(), known.end(), cfg.task) == known.end())
        config_fail("task", "unknown task '" + cfg.task + "'");
    cfg.params = j.value("params", json::object());
    if (!cfg.params.is_object()) config_fail("params", "must be an object");
    cfg.engine = string_or(j, "engine", "analytic");
    if (cfg.engine != "analytic" && cfg.engine != "mc")
        config_fail("engine", "must be \"analytic\" or \"mc\"");
    cfg.numerics = j.value("numerics", json::object());
    if (j.contains("mc")) {
        const json& m = j["mc"];
        if (!m.is_object()) config_fail("mc", "must be an object");
        cfg.mc.paths = static_cast<long>(number_or(m, "paths", 10000));
        cfg.mc.dt = number_or(m, "dt", 1e-3);
        cfg.mc.horizon = number_or(m, "horizon", 0.0);
        cfg.mc.seed = static_cast<std::uint64_t>(number_or(m, "seed", 1));
        cfg.mc.threads = static_cast<int>(number_or(m, "threads", 0));
        try {
            cfg.mc.validate();
        } catch (const DomainError& e) {
            config_fail("mc", e.what());
        }
        cfg.has_mc = true;
    }
    if (cfg.task == "simulate" || cfg.engine == "mc") cfg.has_mc = true;
    cfg.build_spec();    // surfaces model errors at parse time
    cfg.build_weight();
    return cfg;
}

DiffusionSpec RunConfig::build_spec() const {
    const std::string name = string_or(model, "name", "generic");
    try {
        if (name == "bm_drift")
            return DiffusionSpec::bm_drift(require_number(model, "mu"),
                                           number_or(model, "sigma", 1.0));
        if (name == "gbm")
            return DiffusionSpec::gbm(require_number(model, "mu"),
                                      require_number(model, "sigma"));
        if (name == "ou")
            return DiffusionSpec::ou(require_number(model, "kappa"),
                                     require_number(model, "theta"),
                                     require_number(model, "sigma"));
        if (name == "quad_drift")
            return DiffusionSpec::quad_drift(require_number(model, "mu"));
        if (name == "generic") {
            if (!model.contains("mu") || !model["mu"].is_string())
                config_fail("model.mu", "generic models need a drift expression");
            if (!model.contains("sigma") || !model["sigma"].is_string())
                config_fail("model.sigma", "generic models need a volatility expression");
            StateSpace space = StateSpace::whole_line();
            if (model.contains("space")) {
                const json& s = model["space"];
                if (s.contains("lower")) space.lower = s["lower"].get<double>();
                if (s.contains("upper")) space.upper = s["upper"].get<double>();
            }
            auto mu = Coefficient::from_expression(model["mu"].get<std::string>());
            auto sigma = Coefficient::from_expression(model["sigma"].get<std::string>());
            if (model.contains("ref_point"))
                return DiffusionSpec::generic(mu, sigma, space,
                                              require_number(model, "ref_point"));
            return DiffusionSpec::generic(mu, sigma, space);
        }
    } catch (const SyntaxError& e) {
        config_fail("model", e.what());
    }
    config_fail("model.name", "unknown model '" + name + "'");
}

AreaWeight RunConfig::build_weight() const {
    try {
        return weight_from_source(string_or(params, "weight", "unit"));
    } catch (const SyntaxError& e) {
        config_fail("params.weight", e.what());
    }
}

json RunConfig::canonical() const {
    json out;
    out["model"] = model;
    out["task"] = task;
    out["params"] = params;
    if (!out["params"].contains("weight")) out["params"]["weight"] = "unit";
    out["engine"] = engine;
    json num = numerics;
    if (!num.contains("sl_tolerance")) num["sl_tolerance"] = 1e-8;
    if (!num.contains("sl_grid_points")) num["sl_grid_points"] = 401;
    if (!num.contains("sl_max_enlargements")) num["sl_max_enlargements"] = 24;
    if (!num.contains("quadrature_rel_tol")) num["quadrature_rel_tol"] = 1e-12;
    if (!num.contains("moment_refinement_tol")) num["moment_refinement_tol"] = 1e-8;
    out["numerics"] = num;
    if (has_mc)
        out["mc"] = json{{"paths", mc.paths},
                         {"dt", mc.dt},
                         {"horizon", mc.horizon},
                         {"seed", mc.seed},
                         {"threads", mc.threads}};
    return out;
}

namespace {

fp::ExitProblem exit_problem_of(const RunConfig& cfg, double v0_override,
                                bool use_override) {
    fp::ExitProblem p{cfg.build_spec(), cfg.build_weight(),
                      require_number(cfg.params, "a"), require_number(cfg.params, "c"),
                      use_override ? v0_override : require_number(cfg.params, "v0")};
    try {
        p.validate();
    } catch (const DomainError& e) {
        config_fail("params", e.what());
    }
    return p;
}

om::OmegaProblem omega_problem_of(const RunConfig& cfg) {
    if (!cfg.params.contains("omega") || !cfg.params["omega"].is_string())
        config_fail("params.omega", "required rate expression is missing");
    om::OmegaProblem p{cfg.build_spec(),
                       AreaWeight::from_expression(
                           cfg.params["omega"].get<std::string>()),
                       number_or(cfg.params, "v0", 0.0),
                       {}};
    try {
        p.validate();
    } catch (const DomainError& e) {
        config_fail("params", e.what());
    }
    return p;
}

dd::DrawdownProblem drawdown_problem_of(const RunConfig& cfg) {
    dd::DrawdownProblem p{cfg.build_spec(),
                          cfg.build_weight(),
                          number_or(cfg.params, "a_units", 1.0),
                          number_or(cfg.params, "v0", 0.0),
                          number_or(cfg.params, "alpha", 0.0),
                          number_or(cfg.params, "beta", 0.0)};
    try {
        p.validate();
    } catch (const DomainError& e) {
        config_fail("params", e.what());
    }
    return p;
}

dd::TaxModel tax_model_of(const RunConfig& cfg) {
    Coefficient gamma = Coefficient::constant(0.0);
    if (cfg.params.contains("gamma")) {
        const json& g = cfg.params["gamma"];
        if (g.is_number())
            gamma = Coefficient::constant(g.get<double>());
        else if (g.is_string())
            gamma = Coefficient::from_expression(g.get<std::string>());
        else
            config_fail("params.gamma", "must be a number or an expression");
    }
    const double v0 = number_or(cfg.params, "v0", 1.0);
    dd::TaxModel m{cfg.build_spec(), gamma, number_or(cfg.params, "a", 0.0), v0,
                   number_or(cfg.params, "s", v0)};
    try {
        m.validate();
    } catch (const DomainError& e) {
        config_fail("params", e.what());
    }
    return m;
}

TaskResult execute_task(const RunConfig& cfg, const std::string& task, bool use_mc);

TaskResult execute_fpa_laplace(const RunConfig& cfg, bool use_mc) {
    TaskResult out;
    const auto side = side_from(cfg.params);
    Sweep sweep = sweep_of(cfg.params, {"lambda", "v0"});
    auto one = [&](double lambda, double v0, bool v0_over) -> ResultRow {
        const auto p = exit_problem_of(cfg, v0, v0_over);
        if (lambda < 0.0) config_fail("params.lambda", "must be nonnegative");
        if (use_mc) {
            const auto e =
                mc::simulate_exit_area(p, mc::ExpNegLambdaArea{lambda, side}, cfg.mc);
            out.diagnostics["mc"] = mc_diag_json(e);
            return {v0_over ? v0 : lambda, e.mean, e.std_error};
        }
        return {v0_over ? v0 : lambda, fp::area_laplace(p, lambda, side), {}};
    };
    if (sweep.key == "lambda") {
        for (double lam : sweep.values) out.rows.push_back(one(lam, 0.0, false));
    } else if (sweep.key == "v0") {
        const double lam = number_or(cfg.params, "lambda", 0.0);
        for (double v0 : sweep.values) out.rows.push_back(one(lam, v0, true));
    } else {
        out.rows.push_back(one(number_or(cfg.params, "lambda", 0.0), 0.0, false));
    }
    return out;
}

TaskResult execute_fpa_moments(const RunConfig& cfg, bool use_mc) {
    TaskResult out;
    const int n = static_cast<int>(number_or(cfg.params, "n", 1));
    if (n < 1) config_fail("params.n", "order must be at least 1");
    const auto p = exit_problem_of(cfg, 0.0, false);
    if (use_mc) {
        for (int k = 1; k <= n; ++k) {
            const auto e = mc::simulate_exit_area(p, mc::AreaMoment{k}, cfg.mc);
            out.diagnostics["mc"] = mc_diag_json(e);
            out.rows.push_back({static_cast<double>(k), e.mean, e.std_error});
        }
        return out;
    }
    const auto table = fp::area_moments(p, n);
    for (int k = 1; k <= n; ++k)
        out.rows.push_back({static_cast<double>(k), table.value(k, p.v0), {}});
    return out;
}

TaskResult execute_omega(const RunConfig& cfg, bool laplace, bool use_mc) {
    TaskResult out;
    const auto p = omega_problem_of(cfg);
    const auto verdict = om::classify_scale_tail(p.spec);
    out.diagnostics["scale_tail_finite"] = verdict.finite;
    if (laplace) {
        Sweep sweep = sweep_of(cfg.params, {"lambda"});
        std::vector<double> grid =
            sweep.key.empty()
                ? std::vector<double>{number_or(cfg.params, "lambda", 1.0)}
                : sweep.values;
        for (double lam : grid) {
            if (use_mc) {
                const auto e = mc::simulate_occupation(p, lam, cfg.mc);
                out.diagnostics["mc"] = mc_diag_json(e);
                out.rows.push_back({lam, e.mean, e.std_error});
            } else {
                out.rows.push_back({lam, om::occupation_area_laplace(p, lam), {}});
            }
        }
        return out;
    }
    if (use_mc) {
        const auto e = mc::simulate_occupation(p, 1.0, cfg.mc);
        out.diagnostics["mc"] = mc_diag_json(e);
        out.rows.push_back({p.v0, 1.0 - e.mean, e.std_error});
    } else {
        out.rows.push_back({p.v0, om::bankruptcy_probability(p), {}});
    }
    return out;
}

TaskResult execute_drawdown(const RunConfig& cfg, bool use_mc) {
    TaskResult out;
    const auto p = drawdown_problem_of(cfg);
    if (use_mc) {
        const auto e = mc::simulate_drawdown(p, cfg.mc);
        out.diagnostics["mc"] = mc_diag_json(e);
        out.rows.push_back({p.alpha, e.mean, e.std_error});
    } else {
        out.rows.push_back({p.alpha, dd::drawdown_joint_laplace(p), {}});
    }
    return out;
}

TaskResult execute_ay_time(const RunConfig& cfg, bool use_mc) {
    if (use_mc)
        config_fail("engine", "task 'ay-time' has no Monte Carlo mirror");
    if (!cfg.params.contains("g") || !cfg.params["g"].is_string())
        config_fail("params.g", "required contour expression is missing");
    const auto spec = cfg.build_spec();
    const auto g = Coefficient::from_expression(cfg.params["g"].get<std::string>());
    const double v0 = require_number(cfg.params, "v0");
    const double s = number_or(cfg.params, "s", v0);
    TaskResult out;
    out.rows.push_back(
        {v0, dd::ay_expected_time(spec, [&g](double x) { return g(x); }, v0, s), {}});
    return out;
}

TaskResult execute_tax(const RunConfig& cfg, bool area, bool use_mc) {
    TaskResult out;
    const auto m = tax_model_of(cfg);
    const AreaWeight w = area ? cfg.build_weight() : AreaWeight::unit();
    if (use_mc) {
        const auto e = mc::simulate_tax_ruin(m, w, cfg.mc);
        out.diagnostics["mc"] = mc_diag_json(e);
        out.rows.push_back({m.v0, e.mean, e.std_error});
    } else {
        out.rows.push_back(
            {m.v0, area ? dd::tax_expected_ruin_area(m, w)
                        : dd::tax_expected_ruin_time(m),
             {}});
    }
    return out;
}

TaskResult execute_task(const RunConfig& cfg, const std::string& task, bool use_mc) {
    if (task == "fpa-laplace") return execute_fpa_laplace(cfg, use_mc);
    if (task == "fpa-moments") return execute_fpa_moments(cfg, use_mc);
    if (task == "omega-prob") return execute_omega(cfg, false, use_mc);
    if (task == "omega-laplace") return execute_omega(cfg, true, use_mc);
    if (task == "drawdown-laplace") return execute_drawdown(cfg, use_mc);
    if (task == "ay-time") return execute_ay_time(cfg, use_mc);
    if (task == "tax-ruin-time") return execute_tax(cfg, false, use_mc);
    if (task == "tax-ruin-area") return execute_tax(cfg, true, use_mc);
    if (task == "simulate") {
        const std::string inner = string_or(cfg.params, "task", "");
        if (inner.empty() || inner == "simulate")
            config_fail("params.task", "simulate needs the mirrored task name");
        return execute_task(cfg, inner, true);
    }
    config_fail("task", "unknown task '" + task + "'");
}

}  // namespace

TaskResult execute(const RunConfig& cfg) {
    return execute_task(cfg, cfg.task, cfg.engine == "mc");
}

namespace {

void write_csv(std::ostream& os, const TaskResult& r) {
    const bool has_se = !r.rows.empty() && r.rows.front().std_error.has_value();
    os << (has_se ? "input,value,std_error\n" : "input,value\n");
    for (const auto& row : r.rows) {
        os << row.input << ',';
        if (std::isfinite(row.value))
            os << row.value;
        else
            os << "inf";
        if (has_se) os << ',' << *row.std_error;
        os << '\n';
    }
}

json result_document(const RunConfig& cfg, const TaskResult& r, double wall_seconds) {
    json doc;
    doc["config"] = cfg.canonical();
    doc["task"] = cfg.task;
    doc["results"] = json::array();
    for (const auto& row : r.rows) doc["results"].push_back(row_json(row));
    doc["diagnostics"] = r.diagnostics;
    doc["wall_time_seconds"] = wall_seconds;
    return doc;
}

}  // namespace

int run_command(const std::string& config_path, const std::string& out_path,
                const std::string& csv_path, std::optional<std::uint64_t> seed,
                std::optional<int> threads, std::ostream& out, std::ostream& err) {
    try {
        RunConfig cfg = RunConfig::load(config_path);
        if (seed) cfg.mc.seed = *seed;
        if (threads) cfg.mc.threads = *threads;
        const auto t0 = std::chrono::steady_clock::now();
        TaskResult r;
        try {
            r = execute(cfg);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            json diag;
            diag["error"] = e.what();
            err << "numeric failure: " << e.what() << '\n';
            err << diag.dump(2) << '\n';
            return 2;
        }
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        const json doc = result_document(cfg, r, wall);
        if (!out_path.empty()) {
            std::ofstream f(out_path);
            f << doc.dump(2) << '\n';
        }
        out << doc.dump(2) << '\n';
        if (!csv_path.empty()) {
            std::ofstream f(csv_path);
            write_csv(f, r);
        }
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    }
}

int verify_command(const std::string& config_path, std::optional<std::uint64_t> seed,
                   std::optional<int> threads, std::ostream& out, std::ostream& err) {
    try {
        RunConfig cfg = RunConfig::load(config_path);
        if (seed) cfg.mc.seed = *seed;
        if (threads) cfg.mc.threads = *threads;
        cfg.has_mc = true;
        RunConfig analytic = cfg;
        analytic.engine = "analytic";
        if (analytic.task == "simulate") {
            analytic.task = string_or(cfg.params, "task", "");
            if (analytic.task.empty())
                config_fail("params.task", "simulate needs the mirrored task name");
        }
        RunConfig mirror = analytic;
        mirror.engine = "mc";
        TaskResult ra, rm;
        try {
            ra = execute(analytic);
            rm = execute(mirror);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            err << "numeric failure: " << e.what() << '\n';
            return 2;
        }
        if (ra.rows.size() != rm.rows.size()) {
            err << "numeric failure: analytic and mc row counts differ\n";
            return 2;
        }
        bool all_pass = true;
        for (std::size_t i = 0; i < ra.rows.size(); ++i) {
            const double a = ra.rows[i].value;
            const double m = rm.rows[i].value;
            const double se = rm.rows[i].std_error.value_or(0.0);
            const double z = std::abs(a - m) / std::max(se, 1e-300);
            const bool pass = z < 3.0;
            all_pass = all_pass && pass;
            out << "input=" << ra.rows[i].input << " analytic=" << a << " mc=" << m
                << " std_error=" << se << " z=" << z << (pass ? " PASS" : " FAIL")
                << '\n';
        }
        return all_pass ? 0 : 2;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace areaflux::cli
