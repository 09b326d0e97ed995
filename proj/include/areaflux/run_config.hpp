#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "areaflux/diffusion.hpp"
#include "areaflux/monte_carlo.hpp"

namespace areaflux::cli {

// A parsed batch run. Every field that influences the computation appears in
// canonical(), so a result document always carries its full provenance.
struct RunConfig {
    nlohmann::json model;  // builtin name + params, or generic coefficients
    std::string task;
    nlohmann::json params;    // task parameters (lambda grid, a, c, v0, ...)
    nlohmann::json numerics;  // tolerances and truncation limits actually used
    std::string engine = "analytic";  // "analytic" or "mc"
    mc::McConfig mc;
    bool has_mc = false;

    static RunConfig load(const std::string& path);
    static RunConfig parse(const nlohmann::json& j);

    DiffusionSpec build_spec() const;
    AreaWeight build_weight() const;  // from params.weight, unit by default

    nlohmann::json canonical() const;
};

struct ResultRow {
    double input = 0.0;
    double value = 0.0;
    std::optional<double> std_error;
};

struct TaskResult {
    std::vector<ResultRow> rows;
    nlohmann::json diagnostics;
};

TaskResult execute(const RunConfig& cfg);

// Exit codes: 0 success, 1 config error (message names the field), 2 numeric
// failure.
int run_command(const std::string& config_path, const std::string& out_path,
                const std::string& csv_path, std::optional<std::uint64_t> seed,
                std::optional<int> threads, std::ostream& out, std::ostream& err);

// Runs the analytic task and its Monte Carlo mirror; flags |z| >= 3 as FAIL.
int verify_command(const std::string& config_path, std::optional<std::uint64_t> seed,
                   std::optional<int> threads, std::ostream& out, std::ostream& err);

}  // namespace areaflux::cli
