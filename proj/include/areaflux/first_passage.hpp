#pragma once

#include <vector>

#include "areaflux/diffusion.hpp"

namespace areaflux::fp {

enum class Side { Lower, Upper };

// Exit of V from (a,c), started at v0, with the area weight accumulated
// along the way.
struct ExitProblem {
    DiffusionSpec spec;
    AreaWeight weight;
    double a = 0.0;
    double c = 1.0;
    double v0 = 0.5;

    void validate() const;
};

// Moments of orders 1..n tabulated on a Chebyshev grid over [a,c];
// evaluation anywhere in the interval by barycentric interpolation.
class MomentTable {
public:
    MomentTable(std::vector<double> grid, std::vector<std::vector<double>> values);

    int max_order() const { return static_cast<int>(values_.size()); }
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& order(int n) const;

    double value(int n, double x) const;

private:
    std::vector<double> grid_;
    std::vector<double> bary_w_;
    std::vector<std::vector<double>> values_;  // values_[n-1][i] = mu_n(grid[i])
};

// E_{v0}[exp(-lambda tau); exit through the chosen side], unit weight.
double exit_laplace(const ExitProblem& p, double lambda, Side side);

// E_{v0}[exp(-lambda int_0^tau b^2(V)ds); exit through the chosen side].
double area_laplace(const ExitProblem& p, double lambda, Side side);

// Moments of tau itself (requires unit weight).
MomentTable exit_time_moments(const ExitProblem& p, int n);

// Moments of the accumulated area.
MomentTable area_moments(const ExitProblem& p, int n);

}  // namespace areaflux::fp
