#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "areaflux/drawdown_tax.hpp"
#include "areaflux/first_passage.hpp"
#include "areaflux/omega.hpp"

namespace areaflux::mc {

struct McConfig {
    long paths = 10000;
    double dt = 1e-3;
    double horizon = 0.0;  // <= 0 selects a task-dependent default
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = hardware concurrency

    void validate() const;
};

struct McDiagnostics {
    int horizon_doublings = 0;
    long lower_hits = 0;
    long upper_hits = 0;
    long censored = 0;
    bool truncation_bias_warning = false;
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long paths_used = 0;
    McDiagnostics diagnostics;
};

// Per-path payoff at the two-sided exit.
struct ExpNegLambdaArea {
    double lambda = 1.0;
    fp::Side side = fp::Side::Lower;
};
struct AreaMoment {
    int n = 1;
};
struct ExitProb {
    fp::Side side = fp::Side::Lower;
};
using ExitFunctional = std::variant<ExpNegLambdaArea, AreaMoment, ExitProb>;

// Euler stepping with in-step boundary crossing located by linear
// interpolation; the weighted area follows the trapezoid rule.
McEstimate simulate_exit_area(const fp::ExitProblem& p, const ExitFunctional& f,
                              const McConfig& cfg);

// Raw per-path accumulated areas at exit (censored paths dropped).
std::vector<double> sample_exit_areas(const fp::ExitProblem& p, const McConfig& cfg);

// E[exp(-lambda * exposure)]; the horizon doubles until the estimate moves by
// less than one standard error.
McEstimate simulate_occupation(const om::OmegaProblem& p, double lambda,
                               const McConfig& cfg);

// E[exp(-alpha (M - v0) - beta A)] at the first drawdown of a_units.
McEstimate simulate_drawdown(const dd::DrawdownProblem& p, const McConfig& cfg);

// Weighted area until the taxed surplus reaches a; the surplus is recovered
// algebraically from (V, M), never discretized separately.
McEstimate simulate_tax_ruin(const dd::TaxModel& m, const AreaWeight& w,
                             const McConfig& cfg);

// Two-sample Kolmogorov-Smirnov statistic and its rejection threshold.
double ks_two_sample(std::vector<double> a, std::vector<double> b);
double ks_critical_value(std::size_t n, std::size_t m, double significance);

}  // namespace areaflux::mc
