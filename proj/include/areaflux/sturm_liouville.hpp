#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "areaflux/diffusion.hpp"

namespace areaflux::sl {

struct SolveOptions {
    double tolerance = 1e-8;
    int max_enlargements = 24;
    int grid_points = 401;
};

enum class SourceKind { ClosedForm, Numeric };

// The increasing/decreasing positive fundamental solutions of
//   (1/2) sigma^2 g'' + mu g' = lambda b^2 g
// tabulated with derivatives on a window grid. Closed-form entries also carry
// exact evaluators.
struct SLSolutionPair {
    double lambda = 0.0;
    std::vector<double> grid;
    std::vector<double> g_plus, g_minus, dg_plus, dg_minus;
    SourceKind source = SourceKind::Numeric;
    std::string catalog_id;
    double left_truncation = 0.0, right_truncation = 0.0;

    std::function<double(double)> cf_gp, cf_gm, cf_dgp, cf_dgm;

    double gp(double x) const;
    double gm(double x) const;
    double dgp(double x) const;
    double dgm(double x) const;
};

struct Exponents {
    double psi_plus = 0.0;
    double psi_minus = 0.0;
};

SLSolutionPair solve_pair(const DiffusionSpec& spec, double lambda,
                          std::pair<double, double> window, const SolveOptions& opts = {});

// Weighted variant, the SL equation of the time-changed diffusion.
SLSolutionPair solve_pair_weighted(const DiffusionSpec& spec, const AreaWeight& w,
                                   double lambda, std::pair<double, double> window,
                                   const SolveOptions& opts = {});

// f_lambda(y,z) = g_-(y) g_+(z) - g_-(z) g_+(y)
double f_lambda(const SLSolutionPair& pair, double y, double z);

// psi^+ = g_+'/g_+, psi^- = -g_-'/g_-
Exponents laplace_exponents(const SLSolutionPair& pair, double x);

// Any-basis interior solver for two-sided exit ratios: integrates two
// independent solutions from the left end of [a,c]. f-ratios are invariant
// under change of basis, so no boundary asymptotics are involved.
class FundamentalBasis {
public:
    FundamentalBasis(const DiffusionSpec& spec, const AreaWeight& w, double lambda,
                     double a, double c, int grid_points = 1025);

    // f(y1,z1) / f(y2,z2) with overflow-safe scaling
    double f_ratio(double y1, double z1, double y2, double z2) const;

    // Scaled basis values with derivatives; true value = scaled * exp(log_scale).
    struct PointValues {
        double u1, du1, u2, du2;
        double log_scale;
    };
    PointValues values(double x) const;

    double a() const { return a_; }
    double c() const { return c_; }

private:
    struct Eval {
        double u1, u2;      // scaled values
        double log_scale;   // true value = scaled * exp(log_scale)
    };
    Eval eval(double x) const;

    double a_, c_, h_;
    std::vector<double> u1_, du1_, u2_, du2_, logsc_;
};

}  // namespace areaflux::sl
