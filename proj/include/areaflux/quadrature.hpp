#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <limits>

#include "areaflux/errors.hpp"

namespace areaflux {

// Adaptive Gauss-Kronrod on a finite interval. Throws QuadratureFailure when
// the error estimate does not reach the requested tolerance.
template <class F>
double integrate(F&& f, double lo, double hi, double rel_tol = 1e-12,
                 unsigned max_depth = 15) {
    if (lo == hi) return 0.0;
    double err = 0.0, l1 = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, lo, hi, max_depth, rel_tol, &err, &l1);
    const double scale = std::max(std::abs(v), l1);
    if (!(std::isfinite(v)))
        throw QuadratureFailure("integral is not finite");
    if (err > 1e-6 * std::max(scale, 1.0) && err > 1e3 * rel_tol * std::max(scale, 1.0))
        throw QuadratureFailure("quadrature failed to converge");
    return v;
}

// Integral over [lo, inf) via exp-sinh.
template <class F>
double integrate_to_inf(F&& f, double lo, double rel_tol = 1e-12) {
    boost::math::quadrature::exp_sinh<double> es;
    double err = 0.0, l1 = 0.0;
    const double v = es.integrate([&](double u) { return f(lo + u); },
                                  rel_tol, &err, &l1);
    if (!std::isfinite(v)) throw QuadratureFailure("semi-infinite integral is not finite");
    if (err > 1e-6 * std::max(std::max(std::abs(v), l1), 1.0))
        throw QuadratureFailure("semi-infinite quadrature failed to converge");
    return v;
}

}  // namespace areaflux
