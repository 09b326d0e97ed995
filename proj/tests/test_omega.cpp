#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "areaflux/omega.hpp"

using namespace areaflux;
using namespace areaflux::om;

namespace {

// surplus with drift mu x^2 and volatility x, rate x^2 below zero; the
// weighted equation reduces to the constant-coefficient one, so every output
// has a closed form to compare against
OmegaProblem quad_problem(double mu, double v0) {
    return OmegaProblem{DiffusionSpec::quad_drift(mu),
                        AreaWeight::from_expression("x^2*indicator(x<0)"), v0, {}};
}

OmegaProblem bm_problem(double mu, double v0) {
    return OmegaProblem{DiffusionSpec::bm_drift(mu),
                        AreaWeight::from_expression("indicator(x<0)"), v0, {}};
}

}  // namespace

TEST_CASE("scale tail classification") {
    CHECK(classify_scale_tail(DiffusionSpec::bm_drift(1.0)).finite);
    CHECK(!classify_scale_tail(DiffusionSpec::bm_drift(0.0)).finite);
    CHECK(!classify_scale_tail(DiffusionSpec::bm_drift(-0.5)).finite);
    CHECK(classify_scale_tail(DiffusionSpec::quad_drift(1.0)).finite);

    const auto gen = DiffusionSpec::generic(Coefficient::from_expression("0.5"),
                                            Coefficient::from_expression("1"),
                                            StateSpace::whole_line());
    const auto v = classify_scale_tail(gen);
    CHECK(v.finite);
    CHECK(v.evidence.front() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("transform at lambda 0 is 1") {
    CHECK(occupation_area_laplace(quad_problem(1.0, 0.5), 0.0) == 1.0);
    CHECK(occupation_area_laplace(bm_problem(0.5, 0.3), 0.0) == 1.0);
}

TEST_CASE("quadratic-drift surplus: transform against the reduced closed form") {
    // mu = 1, lambda = 1: psi+ = -1 + sqrt(3), psi-_0 = 2
    const double bp = -1.0 + std::sqrt(3.0);
    const double frac = bp / (bp + 2.0);

    const double got0 = occupation_area_laplace(quad_problem(1.0, 0.0), 1.0);
    CHECK(got0 == doctest::Approx(1.0 - frac).epsilon(1e-7));

    const double got = occupation_area_laplace(quad_problem(1.0, 0.5), 1.0);
    CHECK(got == doctest::Approx(1.0 - std::exp(-1.0) * frac).epsilon(1e-7));

    // started below the bankruptcy level
    const double gotn = occupation_area_laplace(quad_problem(1.0, -0.5), 1.0);
    CHECK(gotn == doctest::Approx(std::exp(-0.5 * bp) * (1.0 - frac)).epsilon(1e-6));
}

TEST_CASE("divergent scale: certain bankruptcy") {
    CHECK(occupation_area_laplace(quad_problem(-0.5, 0.5), 1.0) ==
          doctest::Approx(0.0));
    CHECK(bankruptcy_probability(quad_problem(-1.0, 0.3)) == doctest::Approx(1.0));
}

TEST_CASE("bankruptcy probability of the quadratic-drift example") {
    const double want = (std::sqrt(3.0) - 1.0) / (std::sqrt(3.0) + 1.0);
    CHECK(bankruptcy_probability(quad_problem(1.0, 0.0)) ==
          doctest::Approx(want).epsilon(1e-7));
}

TEST_CASE("zero rate: no exposure") {
    OmegaProblem p{DiffusionSpec::bm_drift(1.0), AreaWeight::from_expression("0"), 0.5,
                   {}};
    CHECK(occupation_area_laplace(p, 1.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(bankruptcy_probability(p) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(bankruptcy_time_laplace(p, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("monotone in lambda and in v0, convex in lambda") {
    const auto p = bm_problem(0.5, 0.5);
    std::vector<double> vals;
    for (double lambda = 0.0; lambda <= 3.0; lambda += 0.5)
        vals.push_back(occupation_area_laplace(p, lambda));
    for (std::size_t i = 0; i < vals.size(); ++i) {
        CHECK(vals[i] >= 0.0);
        CHECK(vals[i] <= 1.0);
        if (i > 0) CHECK(vals[i] <= vals[i - 1] + 1e-10);
        if (i > 1) CHECK(vals[i] - 2 * vals[i - 1] + vals[i - 2] >= -1e-8);
    }

    double prev = -1.0;
    for (double v0 : {-0.5, 0.0, 0.5, 1.0, 2.0}) {
        const double t = occupation_area_laplace(bm_problem(0.5, v0), 1.0);
        CHECK(t >= prev - 1e-10);
        prev = t;
    }
}

TEST_CASE("generic spec agrees with the catalog route") {
    const auto gen = DiffusionSpec::generic(Coefficient::from_expression("0.5"),
                                            Coefficient::from_expression("1"),
                                            StateSpace::whole_line());
    OmegaProblem pg{gen, AreaWeight::from_expression("indicator(x<0)"), 0.5, {}};
    const double a = occupation_area_laplace(pg, 1.0);
    const double b = occupation_area_laplace(bm_problem(0.5, 0.5), 1.0);
    CHECK(a == doctest::Approx(b).epsilon(1e-5));
}

TEST_CASE("piecewise-constant rate closed form") {
    // BM drift mu, rate eta below 0: psi+_lambda(0) = -mu + sqrt(mu^2 + 2 lambda eta)
    const double mu = 0.5, eta = 2.0, lambda = 1.0, v0 = 0.5;
    OmegaProblem p{DiffusionSpec::bm_drift(mu),
                   AreaWeight::from_expression("2*indicator(x<0)"), v0, {}};
    const double bp = -mu + std::sqrt(mu * mu + 2.0 * lambda * eta);
    const double pm = 2.0 * mu;
    const double want = 1.0 - std::exp(-2.0 * mu * v0) * bp / (bp + pm);
    CHECK(occupation_area_laplace(p, lambda) == doctest::Approx(want).epsilon(1e-7));
}

TEST_CASE("bankruptcy-time transform: small-lambda limit and bounds") {
    const auto p = bm_problem(0.5, 0.5);
    const double psi = bankruptcy_probability(p);
    const double u1 = bankruptcy_time_laplace(p, 1.0);
    const double u_small = bankruptcy_time_laplace(p, 1e-3);
    CHECK(u1 > 0.0);
    CHECK(u1 < psi);  // discounting can only reduce the mass
    CHECK(u_small == doctest::Approx(psi).epsilon(2e-2));
    CHECK(u_small < psi + 1e-12);
}

TEST_CASE("problem validation") {
    // rate not vanishing above 0
    OmegaProblem bad{DiffusionSpec::bm_drift(0.5), AreaWeight::from_expression("1"),
                     0.5, {}};
    CHECK_THROWS_AS(bad.validate(), DomainError);
    // increasing on the negative side
    OmegaProblem inc{DiffusionSpec::bm_drift(0.5),
                     AreaWeight::from_expression("(4+x)*indicator(x<0)*indicator(x>-4)"),
                     0.5, {}};
    CHECK_THROWS_AS(inc.validate(), DomainError);
    CHECK_THROWS_AS(occupation_area_laplace(bm_problem(0.5, 0.5), -1.0), DomainError);
}
