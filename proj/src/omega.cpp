#include "areaflux/omega.hpp"

#include <algorithm>
#include <cmath>

#include "areaflux/quadrature.hpp"
#include "areaflux/sturm_liouville.hpp"

namespace areaflux::om {

namespace {

constexpr double kEps = 1e-12;

// Rate regularized away from zero so the reduced equation stays bounded where
// sigma vanishes with the rate: max(omega, eps * sigma^2) makes the
// coefficient ratio max(omega/sigma^2, eps).
AreaWeight regularized(const OmegaProblem& p, double eps) {
    const Coefficient rate = p.omega.b_squared;
    const Coefficient sig = p.spec.sigma;
    return AreaWeight::from_b_squared(Coefficient::builtin(
        "omega_eps", [rate, sig, eps](double x) {
            const double s = sig(x);
            return std::max(rate(x), eps * s * s);
        }));
}

// window for the level-0 exponents; always brackets both v0 and 0
std::pair<double, double> working_window(const OmegaProblem& p) {
    double a = std::min(p.v0, 0.0) - 1.0;
    double c = std::max(p.v0, 0.0) + 1.0;
    if (std::isfinite(p.spec.space.lower))
        a = std::max(a, 0.75 * p.spec.space.lower + 0.25 * std::min(p.v0, 0.0));
    if (std::isfinite(p.spec.space.upper))
        c = std::min(c, 0.75 * p.spec.space.upper + 0.25 * std::max(p.v0, 0.0));
    return {a, c};
}

double psi_minus_zero(const OmegaProblem& p, bool finite_s, double tail_at_zero) {
    if (!finite_s) return 0.0;
    return scale_density(p.spec, 0.0) / tail_at_zero;
}

double speed_nudged(const DiffusionSpec& spec, double y) {
    double sig = spec.sigma(y);
    if (sig == 0.0) {
        y += 1e-9;
        sig = spec.sigma(y);
        if (sig == 0.0) return 0.0;
    }
    return 2.0 / (sig * sig * scale_density(spec, y));
}

}  // namespace

void OmegaProblem::validate() const {
    if (!spec.space.contains(v0))
        throw DomainError("v0 must lie inside the state interval");
    if (!spec.space.contains(0.0))
        throw DomainError("the bankruptcy level 0 must lie inside the state interval");

    // rate vanishes strictly above 0
    const double hi = std::max(v0, 0.0) + 10.0;
    for (int i = 1; i <= 200; ++i) {
        const double x = hi * i / 200.0;
        if (!spec.space.contains(x)) break;
        if (omega(x) != 0.0)
            throw DomainError("bankruptcy rate must vanish for x > 0");
    }
    // nonincreasing on the negative side
    const double lo = std::max(std::min(v0, -10.0),
                               std::isfinite(spec.space.lower)
                                   ? spec.space.lower + 1e-9
                                   : std::min(v0, -10.0));
    double prev = omega(lo);
    for (int i = 1; i <= 200; ++i) {
        const double x = lo + (0.0 - lo) * i / 200.0;
        const double v = omega(x);
        if (v > prev + 1e-12 * std::max(1.0, prev))
            throw DomainError("bankruptcy rate must be nonincreasing for x <= 0");
        prev = v;
    }
}

SFinitenessVerdict classify_scale_tail(const DiffusionSpec& spec) {
    SFinitenessVerdict v;
    const auto tail = scale_tail_integral(spec, spec.ref_point, Tail::Upper);
    v.verdict = tail ? Verdict::Finite : Verdict::Infinite;
    v.finite = tail.has_value();
    if (tail) v.evidence.push_back(*tail);
    return v;
}

double occupation_area_laplace(const OmegaProblem& p, double lambda) {
    p.validate();
    if (lambda < 0.0) throw DomainError("lambda must be >= 0");
    if (lambda == 0.0) return 1.0;

    bool finite_s;
    double tail0 = 0.0;
    const auto up0 = scale_tail_integral(p.spec, 0.0, Tail::Upper);
    if (p.declared_s_finite) {
        finite_s = *p.declared_s_finite;
        if (finite_s && !up0)
            throw ConfigError("scale tail declared finite but did not converge");
        if (finite_s) tail0 = *up0;
    } else {
        finite_s = up0.has_value();
        if (finite_s) tail0 = *up0;
    }

    const auto weight = regularized(p, kEps);
    const auto window = working_window(p);
    const auto pair = sl::solve_pair_weighted(p.spec, weight, lambda, window);
    const double psi_plus = sl::laplace_exponents(pair, 0.0).psi_plus;
    const double psi_minus = psi_minus_zero(p, finite_s, tail0);
    if (psi_plus <= 0.0) return 1.0;  // zero rate: no exposure accrues

    const double frac = psi_minus / (psi_plus + psi_minus);
    if (p.v0 > 0.0) {
        if (!finite_s) return frac;
        const double tail_v0 = *scale_tail_integral(p.spec, p.v0, Tail::Upper);
        return 1.0 - (tail_v0 / tail0) * (psi_plus / (psi_plus + psi_minus));
    }
    return pair.gp(p.v0) / pair.gp(0.0) * frac;
}

double bankruptcy_probability(const OmegaProblem& p) {
    const double t = occupation_area_laplace(p, 1.0);
    return std::clamp(1.0 - t, 0.0, 1.0);
}

double bankruptcy_time_laplace(const OmegaProblem& p, double lambda) {
    p.validate();
    if (!(lambda > 0.0)) throw DomainError("lambda must be > 0");

    // potential q(x) = lambda + omega(x), taken as the weight of the
    // homogeneous equation at unit transform argument
    const Coefficient rate = p.omega.b_squared;
    const Coefficient sig = p.spec.sigma;
    const auto q = AreaWeight::from_b_squared(Coefficient::builtin(
        "rate_plus_lambda", [rate, sig, lambda](double x) {
            const double s = sig(x);
            return std::max(rate(x), kEps * s * s) + lambda;
        }));

    const double c = std::max(p.v0, 0.0) + 1.0;
    double prev = -1.0;
    for (int level = 0; level < 10; ++level) {
        double a = std::min(p.v0, 0.0) - std::pow(2.0, level);
        if (std::isfinite(p.spec.space.lower))
            a = std::max(a, p.spec.space.lower +
                                (std::min(p.v0, 0.0) - p.spec.space.lower) /
                                    std::pow(2.0, level + 1));
        const auto pair = sl::solve_pair_weighted(p.spec, q, 1.0, {a, c});
        // Wronskian over the scale density, constant in x
        const double s_v = scale_density(p.spec, p.v0);
        const double w = (pair.gm(p.v0) * pair.dgp(p.v0) -
                          pair.gp(p.v0) * pair.dgm(p.v0)) / s_v;
        if (w == 0.0) throw TruncationError("degenerate Wronskian in resolvent");
        auto green = [&](double y) {
            return (y <= p.v0 ? pair.gp(y) * pair.gm(p.v0)
                              : pair.gp(p.v0) * pair.gm(y)) / w;
        };
        const double top = std::min(0.0, c);
        const double u = integrate(
            [&](double y) { return green(y) * rate(y) * speed_nudged(p.spec, y); }, a,
            top, 1e-9);
        // solver noise grows with the truncation depth, so stop at the first
        // stabilization rather than demanding repeats; accuracy ~1e-4
        if (prev >= 0.0 && std::abs(u - prev) <= 5e-5 * std::max(1e-9, u))
            return std::clamp(u, 0.0, 1.0);
        prev = u;
    }
    throw TruncationError("bankruptcy-time transform failed to stabilize");
}

}  // namespace areaflux::om
