#include "areaflux/special_functions.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>

namespace areaflux::special {

namespace {

void check_arg(double x) {
    if (!(x > 0.0)) throw DomainError("bessel functions require x > 0");
}

}  // namespace

double bessel_i(double nu, double x, const BesselAccuracy& acc) {
    acc.validate();
    check_arg(x);
    try {
        const double v = boost::math::cyl_bessel_i(nu, x);
        if (!std::isfinite(v) && x < 700.0)
            throw ConvergenceError("bessel_i overflowed in a finite regime");
        return v;
    } catch (const std::exception& e) {
        throw ConvergenceError(std::string("bessel_i: ") + e.what());
    }
}

double bessel_k(double nu, double x, const BesselAccuracy& acc) {
    acc.validate();
    check_arg(x);
    try {
        // K is even in the order.
        const double v = boost::math::cyl_bessel_k(std::abs(nu), x);
        if (!std::isfinite(v))
            throw ConvergenceError("bessel_k did not converge");
        return v;
    } catch (const std::exception& e) {
        throw ConvergenceError(std::string("bessel_k: ") + e.what());
    }
}

double bessel_i_prime(double nu, double x, const BesselAccuracy& acc) {
    return 0.5 * (bessel_i(nu - 1.0, x, acc) + bessel_i(nu + 1.0, x, acc));
}

double bessel_k_prime(double nu, double x, const BesselAccuracy& acc) {
    return -0.5 * (bessel_k(nu - 1.0, x, acc) + bessel_k(nu + 1.0, x, acc));
}

}  // namespace areaflux::special
