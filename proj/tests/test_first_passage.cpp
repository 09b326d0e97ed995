#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "areaflux/first_passage.hpp"
#include "areaflux/sturm_liouville.hpp"

using namespace areaflux;
using namespace areaflux::fp;

namespace {

ExitProblem bm_problem(double a = 0.0, double c = 1.0, double v0 = 0.5) {
    return ExitProblem{DiffusionSpec::bm_drift(0.0), AreaWeight::unit(), a, c, v0};
}

}  // namespace

TEST_CASE("exit probabilities: scale-ratio identity") {
    const auto p = bm_problem();
    CHECK(exit_laplace(p, 0.0, Side::Lower) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(exit_laplace(p, 0.0, Side::Upper) == doctest::Approx(0.5).epsilon(1e-12));

    ExitProblem q = p;
    q.v0 = 0.3;
    CHECK(exit_laplace(q, 0.0, Side::Lower) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(exit_laplace(q, 0.0, Side::Lower) + exit_laplace(q, 0.0, Side::Upper) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exit transform: driftless BM closed form") {
    const auto p = bm_problem();
    const double r2 = std::sqrt(2.0);
    const double want = std::sinh(r2 * 0.5) / std::sinh(r2);
    CHECK(exit_laplace(p, 1.0, Side::Lower) == doctest::Approx(want).epsilon(1e-9));
    CHECK(exit_laplace(p, 1.0, Side::Upper) == doctest::Approx(want).epsilon(1e-9));
    // decays with lambda
    CHECK(exit_laplace(p, 50.0, Side::Lower) < 0.01);
}

TEST_CASE("exit transform decreasing and convex in lambda") {
    const auto p = bm_problem(0.0, 1.0, 0.4);
    std::vector<double> vals;
    for (double lambda = 0.0; lambda <= 4.0; lambda += 0.5)
        vals.push_back(exit_laplace(p, lambda, Side::Lower));
    for (std::size_t i = 0; i < vals.size(); ++i) {
        CHECK(vals[i] >= 0.0);
        CHECK(vals[i] <= 1.0);
        if (i > 0) CHECK(vals[i] <= vals[i - 1] + 1e-12);
        if (i > 1)
            CHECK(vals[i] - 2.0 * vals[i - 1] + vals[i - 2] >= -1e-8);
    }
}

TEST_CASE("unit weight: area transform equals exit transform") {
    ExitProblem p{DiffusionSpec::bm_drift(0.5), AreaWeight::unit(), -0.5, 1.0, 0.2};
    for (double lambda : {0.0, 0.3, 1.0, 3.0}) {
        CHECK(area_laplace(p, lambda, Side::Lower) ==
              doctest::Approx(exit_laplace(p, lambda, Side::Lower)).epsilon(1e-10));
        CHECK(area_laplace(p, lambda, Side::Upper) ==
              doctest::Approx(exit_laplace(p, lambda, Side::Upper)).epsilon(1e-10));
    }
}

TEST_CASE("geometric spec with square weight matches the Bessel closed form") {
    ExitProblem p{DiffusionSpec::gbm(0.1, 0.2), AreaWeight::square(), 0.8, 1.25, 1.0};
    const double lambda = 1.0;
    const auto cf = sl::solve_pair_weighted(p.spec, p.weight, lambda, {p.a, p.c});
    REQUIRE(cf.source == sl::SourceKind::ClosedForm);
    const double want_lo = sl::f_lambda(cf, p.v0, p.c) / sl::f_lambda(cf, p.a, p.c);
    const double want_up = sl::f_lambda(cf, p.a, p.v0) / sl::f_lambda(cf, p.a, p.c);
    CHECK(area_laplace(p, lambda, Side::Lower) == doctest::Approx(want_lo).epsilon(1e-6));
    CHECK(area_laplace(p, lambda, Side::Upper) == doctest::Approx(want_up).epsilon(1e-6));

    // lambda = 0 routes to the exit probability
    CHECK(area_laplace(p, 0.0, Side::Lower) ==
          doctest::Approx(exit_laplace(p, 0.0, Side::Lower)).epsilon(1e-10));
}

TEST_CASE("first exit-time moment of driftless BM") {
    const auto p = bm_problem();
    const auto table = exit_time_moments(p, 2);
    CHECK(table.value(1, 0.5) == doctest::Approx(0.25).epsilon(1e-8));
    for (double x : {0.1, 0.3, 0.7, 0.9})
        CHECK(table.value(1, x) == doctest::Approx(x * (1.0 - x)).epsilon(1e-7));
    CHECK(table.value(1, 0.0) == 0.0);
    CHECK(table.value(1, 1.0) == 0.0);

    // mu_2 solves (1/2) mu_2'' = -2 mu_1 with zero boundary values:
    // mu_2(x) = x (1 - 2 x^2 + x^3) / 3
    for (double x : {0.25, 0.5, 0.8})
        CHECK(table.value(2, x) ==
              doctest::Approx(x * (1.0 - 2.0 * x * x + x * x * x) / 3.0).epsilon(1e-6));
}

TEST_CASE("area moments with unit weight coincide with time moments") {
    ExitProblem p{DiffusionSpec::bm_drift(0.3), AreaWeight::unit(), 0.0, 1.0, 0.4};
    const auto t1 = exit_time_moments(p, 2);
    const auto t2 = area_moments(p, 2);
    for (double x = 0.05; x < 1.0; x += 0.1) {
        CHECK(t2.value(1, x) == doctest::Approx(t1.value(1, x)).epsilon(1e-10));
        CHECK(t2.value(2, x) == doctest::Approx(t1.value(2, x)).epsilon(1e-10));
    }
}

TEST_CASE("weighted moment domination") {
    ExitProblem p{DiffusionSpec::gbm(0.1, 0.2), AreaWeight::square(), 0.8, 1.25, 1.0};
    const auto weighted = area_moments(p, 1);
    ExitProblem q = p;
    q.weight = AreaWeight::unit();
    const auto plain = exit_time_moments(q, 1);
    const double sup_b2 = p.c * p.c;
    for (double x = 0.82; x < 1.25; x += 0.04) {
        CHECK(weighted.value(1, x) >= 0.0);
        CHECK(weighted.value(1, x) <= sup_b2 * plain.value(1, x) + 1e-12);
    }
}

TEST_CASE("transform derivative at zero recovers the first moment") {
    ExitProblem p{DiffusionSpec::gbm(0.1, 0.2), AreaWeight::square(), 0.8, 1.25, 1.0};
    const double h = 1e-4;
    const double total =
        area_laplace(p, h, Side::Lower) + area_laplace(p, h, Side::Upper);
    const double slope = (1.0 - total) / h;
    const auto table = area_moments(p, 1);
    CHECK(slope == doctest::Approx(table.value(1, p.v0)).epsilon(1e-3));
}

TEST_CASE("validation") {
    ExitProblem bad = bm_problem();
    bad.v0 = 2.0;
    CHECK_THROWS_AS(exit_laplace(bad, 1.0, Side::Lower), DomainError);
    CHECK_THROWS_AS(exit_laplace(bm_problem(), -1.0, Side::Lower), DomainError);
    CHECK_THROWS_AS(exit_time_moments(bm_problem(), 0), DomainError);
    ExitProblem outside{DiffusionSpec::gbm(0.1, 0.2), AreaWeight::unit(), -1.0, 1.0, 0.5};
    CHECK_THROWS_AS(exit_laplace(outside, 1.0, Side::Lower), DomainError);
}
