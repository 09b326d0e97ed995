#pragma once

#include "areaflux/errors.hpp"

namespace areaflux::special {

struct BesselAccuracy {
    double target_rel_err = 1e-12;
    int max_terms = 200;

    void validate() const {
        if (!(target_rel_err > 0.0 && target_rel_err <= 1e-6))
            throw DomainError("target_rel_err must lie in (0, 1e-6]");
        if (max_terms < 50) throw DomainError("max_terms must be >= 50");
    }
};

// Modified Bessel functions of real order. Small arguments are handled by the
// ascending power series, large ones by the uniform asymptotic expansion; the
// crossover is internal to the backend and validated against a brute-force
// series oracle in the test suite.
double bessel_i(double nu, double x, const BesselAccuracy& acc = {});
double bessel_k(double nu, double x, const BesselAccuracy& acc = {});

// First derivatives in x, via the standard recurrences
//   I'_nu = (I_{nu-1} + I_{nu+1}) / 2,   K'_nu = -(K_{nu-1} + K_{nu+1}) / 2.
double bessel_i_prime(double nu, double x, const BesselAccuracy& acc = {});
double bessel_k_prime(double nu, double x, const BesselAccuracy& acc = {});

}  // namespace areaflux::special
