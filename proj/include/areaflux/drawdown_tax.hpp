#pragma once

#include <functional>

#include "areaflux/diffusion.hpp"

namespace areaflux::dd {

// First time the running maximum exceeds the current value by a_units,
// jointly with the stopped maximum and the accumulated area.
struct DrawdownProblem {
    DiffusionSpec spec;
    AreaWeight weight;
    double a_units = 1.0;
    double v0 = 0.0;
    double alpha = 0.0;
    double beta = 0.0;

    void validate() const;
};

// Surplus taxed at rate gamma(M) while sitting on its running maximum;
// default when the taxed surplus reaches a.
struct TaxModel {
    DiffusionSpec spec;
    Coefficient gamma;
    double a = 0.0;
    double v0 = 1.0;
    double s = 1.0;  // initial running maximum

    void validate() const;
    // default contour g(x) = a + int_{v0}^x gamma(z) dz
    double contour(double x) const;
};

// E[exp(-alpha M - beta A)] at the first drawdown of a_units, A the weighted
// area (time itself under the unit weight).
double drawdown_joint_laplace(const DrawdownProblem& p);

// Expected value of the stopping time inf{t : V_t <= g(M_t)}; +inf is a
// representable outcome.
double ay_expected_time(const DiffusionSpec& spec,
                        const std::function<double(double)>& g, double v0, double s);

double tax_expected_ruin_time(const TaxModel& m);

// Expected weighted area until default; unit weight reproduces the ruin time.
double tax_expected_ruin_area(const TaxModel& m, const AreaWeight& w);

}  // namespace areaflux::dd
