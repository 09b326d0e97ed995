// End-to-end acceptance checks; one pass/fail line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "areaflux/drawdown_tax.hpp"
#include "areaflux/first_passage.hpp"
#include "areaflux/monte_carlo.hpp"
#include "areaflux/omega.hpp"
#include "areaflux/quadrature.hpp"
#include "areaflux/run_config.hpp"
#include "areaflux/sturm_liouville.hpp"

using namespace areaflux;

namespace {

int failures = 0;
std::chrono::steady_clock::time_point t0;

void report(int id, const std::string& label, bool pass, const std::string& note = "") {
    if (!pass) ++failures;
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d [%s] %s%s%s (%.1fs)\n", id, pass ? "PASS" : "FAIL",
                label.c_str(), note.empty() ? "" : " - ", note.c_str(), secs);
    std::fflush(stdout);
    t0 = std::chrono::steady_clock::now();
}

bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

bool within_3se(const mc::McEstimate& e, double target) {
    return std::abs(e.mean - target) <= 3.0 * std::max(e.std_error, 1e-12);
}

DiffusionSpec generic_bm(double mu) {
    std::ostringstream os;
    os << mu;
    return DiffusionSpec::generic(Coefficient::from_expression(os.str()),
                                  Coefficient::from_expression("1"),
                                  StateSpace::whole_line());
}

DiffusionSpec generic_gbm(double mu, double sigma) {
    std::ostringstream mu_s, sg_s;
    mu_s << mu << "*x";
    sg_s << sigma << "*x";
    return DiffusionSpec::generic(Coefficient::from_expression(mu_s.str()),
                                  Coefficient::from_expression(sg_s.str()),
                                  StateSpace::positive_half_line(), 1.0);
}

// 1: numeric eigenfunction pairs reproduce the closed forms
void criterion1() {
    bool ok = true;
    std::string note;
    for (double mu : {-1.0, 0.5, 1.0}) {
        for (double lam : {0.1, 1.0, 5.0}) {
            const auto closed =
                sl::solve_pair(DiffusionSpec::bm_drift(mu), lam, {-1.0, 1.0});
            const auto numeric = sl::solve_pair(generic_bm(mu), lam, {-1.0, 1.0});
            const auto ec = sl::laplace_exponents(closed, 0.0);
            const auto en = sl::laplace_exponents(numeric, 0.0);
            ok = ok && close_rel(ec.psi_plus, en.psi_plus, 1e-5) &&
                 close_rel(ec.psi_minus, en.psi_minus, 1e-5);
            const double rc = sl::f_lambda(closed, -1.0, 0.3) /
                              sl::f_lambda(closed, -1.0, 1.0);
            const double rn = sl::f_lambda(numeric, -1.0, 0.3) /
                              sl::f_lambda(numeric, -1.0, 1.0);
            ok = ok && close_rel(rc, rn, 1e-5);
        }
    }
    // multiplicative model with the square weight: the Bessel closed form
    for (double lam : {0.1, 1.0, 5.0}) {
        const auto closed = sl::solve_pair_weighted(DiffusionSpec::gbm(0.3, 0.5),
                                                    AreaWeight::square(), lam,
                                                    {0.5, 2.0});
        const auto numeric = sl::solve_pair_weighted(
            generic_gbm(0.3, 0.5), AreaWeight::from_expression("x^2"), lam,
            {0.5, 2.0});
        const auto ec = sl::laplace_exponents(closed, 1.0);
        const auto en = sl::laplace_exponents(numeric, 1.0);
        ok = ok && close_rel(ec.psi_plus, en.psi_plus, 1e-5) &&
             close_rel(ec.psi_minus, en.psi_minus, 1e-5);
        const double rc =
            sl::f_lambda(closed, 0.5, 1.0) / sl::f_lambda(closed, 0.5, 2.0);
        const double rn =
            sl::f_lambda(numeric, 0.5, 1.0) / sl::f_lambda(numeric, 0.5, 2.0);
        ok = ok && close_rel(rc, rn, 1e-5);
    }
    report(1, "closed-form vs numeric eigenfunction pairs at 1e-5", ok);
}

// 2: weighted exit transform of the multiplicative model, three routes
void criterion2() {
    fp::ExitProblem catalog{DiffusionSpec::gbm(0.3, 0.5), AreaWeight::square(), 0.5,
                            2.0, 1.0};
    fp::ExitProblem generic{generic_gbm(0.3, 0.5), AreaWeight::from_expression("x^2"),
                            0.5, 2.0, 1.0};
    const double lam = 1.0;
    const double via_catalog = fp::area_laplace(catalog, lam, fp::Side::Lower);
    const double via_generic = fp::area_laplace(generic, lam, fp::Side::Lower);
    bool ok = close_rel(via_catalog, via_generic, 1e-5);
    mc::McConfig cfg{.paths = 100000, .dt = 5e-4, .seed = 2};
    const auto e = mc::simulate_exit_area(
        catalog, mc::ExpNegLambdaArea{lam, fp::Side::Lower}, cfg);
    ok = ok && within_3se(e, via_catalog);
    std::ostringstream note;
    note << "analytic=" << via_catalog << " mc=" << e.mean << "+-" << e.std_error;
    report(2, "weighted exit transform: catalog, generic and simulation routes", ok,
           note.str());
}

// 3: the transform at lambda 0 is the scale-ratio exit probability
void criterion3() {
    struct Case {
        DiffusionSpec spec;
        double a, c, v0;
    };
    const std::vector<Case> cases = {
        {DiffusionSpec::bm_drift(0.0), 0.0, 1.0, 0.5},
        {DiffusionSpec::bm_drift(1.0), -1.0, 2.0, 0.3},
        {DiffusionSpec::gbm(0.3, 0.5), 0.5, 2.0, 1.0},
        {DiffusionSpec::ou(1.0, 0.0, 0.7), -1.0, 1.0, 0.2},
        {generic_bm(-0.4), -0.5, 1.5, 0.0},
    };
    bool ok = true;
    for (const auto& c : cases) {
        fp::ExitProblem p{c.spec, AreaWeight::square(), c.a, c.c, c.v0};
        if (c.spec.model != Model::Gbm) p.weight = AreaWeight::unit();
        const double sa = scale_function(c.spec, c.a);
        const double sc = scale_function(c.spec, c.c);
        const double sv = scale_function(c.spec, c.v0);
        ok = ok &&
             std::abs(fp::area_laplace(p, 0.0, fp::Side::Upper) -
                      (sv - sa) / (sc - sa)) <= 1e-9 &&
             std::abs(fp::area_laplace(p, 0.0, fp::Side::Lower) -
                      (sc - sv) / (sc - sa)) <= 1e-9;
    }
    report(3, "lambda-0 transform equals the scale-ratio exit probability at 1e-9",
           ok);
}

// 4: exit moments against the closed form and the simulation oracle
void criterion4() {
    fp::ExitProblem bm{DiffusionSpec::bm_drift(0.0), AreaWeight::unit(), 0.0, 1.0,
                       0.5};
    const auto table = fp::exit_time_moments(bm, 1);
    bool ok = std::abs(table.value(1, 0.5) - 0.25) <= 1e-8;

    fp::ExitProblem gw{DiffusionSpec::gbm(0.3, 0.5), AreaWeight::square(), 0.5, 2.0,
                       1.0};
    const auto wtable = fp::area_moments(gw, 2);
    mc::McConfig cfg{.paths = 40000, .dt = 5e-4, .seed = 4};
    const auto m1 = mc::simulate_exit_area(gw, mc::AreaMoment{1}, cfg);
    const auto m2 = mc::simulate_exit_area(gw, mc::AreaMoment{2}, cfg);
    ok = ok && within_3se(m1, wtable.value(1, 1.0)) &&
         within_3se(m2, wtable.value(2, 1.0));

    // informational: the recursion at order one against direct quadrature
    const double direct = [&] {
        const double sa = scale_function(gw.spec, gw.a);
        const double sc = scale_function(gw.spec, gw.c);
        const double sx = scale_function(gw.spec, gw.v0);
        auto mstar = [&](double y) {
            return weighted_speed_density(gw.spec, gw.weight, y);
        };
        const double up = integrate(
            [&](double y) { return (sc - scale_function(gw.spec, y)) * mstar(y); },
            gw.v0, gw.c);
        const double dn = integrate(
            [&](double y) { return (scale_function(gw.spec, y) - sa) * mstar(y); },
            gw.a, gw.v0);
        return (sx - sa) / (sc - sa) * up + (sc - sx) / (sc - sa) * dn;
    }();
    std::ostringstream note;
    note << "first-moment direct quadrature: "
         << (close_rel(direct, wtable.value(1, 1.0), 1e-7) ? "agrees" : "disagrees")
         << " (recursion=" << wtable.value(1, 1.0) << ", direct=" << direct << ")";
    report(4, "exit moments: closed form at 1e-8, simulation within 3 SE", ok,
           note.str());
}

// 5: bankruptcy probabilities of the quadratic-drift catalog entry
void criterion5() {
    auto problem = [](double mu, double v0) {
        return om::OmegaProblem{DiffusionSpec::quad_drift(mu),
                                AreaWeight::from_expression("x^2*indicator(x<0)"), v0,
                                {}};
    };
    const double bp = -1.0 + std::sqrt(3.0);
    const double frac = bp / (bp + 2.0);
    bool ok = std::abs(om::bankruptcy_probability(problem(1.0, 0.0)) - frac) <= 1e-8;
    ok = ok && std::abs(om::bankruptcy_probability(problem(1.0, 0.5)) -
                        std::exp(-1.0) * frac) <= 1e-8;

    mc::McConfig cfg{.paths = 10000, .dt = 2e-4, .seed = 6};
    const auto e0 = mc::simulate_occupation(problem(1.0, 0.0), 1.0, cfg);
    const auto e5 = mc::simulate_occupation(problem(1.0, 0.5), 1.0, cfg);
    // occupation discretization bias decays slower than the SE; allow 0.015
    ok = ok && std::abs((1.0 - e0.mean) - frac) <= 3.0 * e0.std_error + 0.015;
    ok = ok && std::abs((1.0 - e5.mean) - std::exp(-1.0) * frac) <=
                   3.0 * e5.std_error + 0.015;

    ok = ok && om::bankruptcy_probability(problem(-1.0, 0.0)) == 1.0;
    mc::McConfig cheap{.paths = 2000, .dt = 1e-3, .seed = 7};
    const auto en = mc::simulate_occupation(problem(-1.0, 0.0), 1.0, cheap);
    ok = ok && (1.0 - en.mean) >= 0.99;

    // started below zero: the exponential prefactor branch
    const double below = om::bankruptcy_probability(problem(1.0, -0.5));
    std::ostringstream note;
    note << "v0<0 branch diagnostic: psi(-0.5)=" << below
         << " (exp prefactor applied to the transform, not its complement)";
    report(5, "bankruptcy probabilities: closed form at 1e-8, simulation within 3 SE",
           ok, note.str());
}

// 6: taxed ruin times
void criterion6() {
    dd::TaxModel untaxed{DiffusionSpec::bm_drift(-0.5), Coefficient::constant(0.0),
                         0.0, 1.0, 1.0};
    bool ok = std::abs(dd::tax_expected_ruin_time(untaxed) - 2.0) <= 1e-4;

    dd::TaxModel taxed{DiffusionSpec::bm_drift(-0.5), Coefficient::constant(0.5), 0.0,
                       1.0, 1.0};
    const double analytic = dd::tax_expected_ruin_time(taxed);
    mc::McConfig cfg{.paths = 20000, .dt = 5e-4, .seed = 8};
    const auto e = mc::simulate_tax_ruin(taxed, AreaWeight::unit(), cfg);
    ok = ok && within_3se(e, analytic);

    const double as_time = dd::tax_expected_ruin_time(taxed);
    const double as_area = dd::tax_expected_ruin_area(taxed, AreaWeight::unit());
    ok = ok && as_time == as_area;
    std::ostringstream note;
    note << "taxed analytic=" << analytic << " mc=" << e.mean << "+-" << e.std_error;
    report(6, "taxed ruin time: Wald at 1e-4, simulation within 3 SE, "
              "unit-weight area identity bit-level",
           ok, note.str());
}

// 7: drawdown transform and basis invariance
void criterion7() {
    dd::DrawdownProblem trivial{DiffusionSpec::bm_drift(0.3), AreaWeight::unit(), 1.0,
                                0.0, 0.0, 0.0};
    bool ok = std::abs(dd::drawdown_joint_laplace(trivial) - 1.0) <= 1e-8;

    dd::DrawdownProblem p{DiffusionSpec::bm_drift(0.0), AreaWeight::unit(), 1.0, 0.0,
                          0.0, 1.0};
    const double analytic = dd::drawdown_joint_laplace(p);
    mc::McConfig cfg{.paths = 20000, .dt = 2e-4, .seed = 10};
    const auto e = mc::simulate_drawdown(p, cfg);
    ok = ok && within_3se(e, analytic);

    // the drawdown integrand is a ratio of 2x2 determinants, so any basis of
    // the solution space must give the same value
    const auto pair = sl::solve_pair(DiffusionSpec::bm_drift(0.0), 1.0, {-1.0, 3.0});
    auto ratio = [&](double m11, double m12, double m21, double m22, double u) {
        auto g = [&](double x) { return m11 * pair.gp(x) + m12 * pair.gm(x); };
        auto dg = [&](double x) { return m11 * pair.dgp(x) + m12 * pair.dgm(x); };
        auto h = [&](double x) { return m21 * pair.gp(x) + m22 * pair.gm(x); };
        auto dh = [&](double x) { return m21 * pair.dgp(x) + m22 * pair.dgm(x); };
        const double den = g(u - 1.0) * h(u) - g(u) * h(u - 1.0);
        const double d = (g(u - 1.0) * dh(u) - h(u - 1.0) * dg(u)) / den;
        const double c = (g(u) * dh(u) - dg(u) * h(u)) / den;
        return std::pair{d, c};
    };
    const auto [d0, c0] = ratio(1.0, 0.0, 0.0, 1.0, 0.7);
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    bool inv = true;
    for (int k = 0; k < 100; ++k) {
        double m11, m12, m21, m22;
        do {
            m11 = coef(rng);
            m12 = coef(rng);
            m21 = coef(rng);
            m22 = coef(rng);
        } while (std::abs(m11 * m22 - m12 * m21) < 0.1);
        const auto [d, c] = ratio(m11, m12, m21, m22, 0.7);
        inv = inv && std::abs(d - d0) <= 1e-10 * std::max(1.0, std::abs(d0)) &&
              std::abs(c - c0) <= 1e-10 * std::max(1.0, std::abs(c0));
    }
    ok = ok && inv;
    std::ostringstream note;
    note << "analytic=" << analytic << " mc=" << e.mean << "+-" << e.std_error
         << ", 100 random bases " << (inv ? "invariant" : "NOT invariant");
    report(7, "drawdown transform: total mass at 1e-8, simulation within 3 SE, "
              "basis invariance at 1e-10",
           ok, note.str());
}

// 8: areas of V equal times of the time-changed process in law
void criterion8() {
    auto ks_case = [](const fp::ExitProblem& weighted, std::uint64_t seed) {
        fp::ExitProblem changed{time_change(weighted.spec, weighted.weight),
                                AreaWeight::unit(), weighted.a, weighted.c,
                                weighted.v0};
        mc::McConfig cfg{.paths = 10000, .dt = 2e-4, .seed = seed};
        mc::McConfig cfg2 = cfg;
        cfg2.seed = seed + 1;
        const auto a = mc::sample_exit_areas(weighted, cfg);
        const auto b = mc::sample_exit_areas(changed, cfg2);
        const double d = mc::ks_two_sample(a, b);
        return d < mc::ks_critical_value(a.size(), b.size(), 0.01);
    };
    const bool gbm_ok = ks_case(
        {DiffusionSpec::gbm(0.3, 0.5), AreaWeight::square(), 0.5, 2.0, 1.0}, 14);
    const bool quad_ok = ks_case(
        {DiffusionSpec::quad_drift(0.4), AreaWeight::square(), 0.3, 2.5, 1.0}, 16);
    report(8, "time-change identity in law (KS at 1%, 1e4 paths per sample)",
           gbm_ok && quad_ok,
           std::string("multiplicative pair ") + (gbm_ok ? "ok" : "reject") +
               ", quadratic-drift pair " + (quad_ok ? "ok" : "reject"));
}

// 9: bit-identical estimates across thread counts
void criterion9() {
    fp::ExitProblem p{DiffusionSpec::gbm(0.3, 0.5), AreaWeight::square(), 0.5, 2.0,
                      1.0};
    mc::McConfig one{.paths = 5000, .dt = 5e-4, .seed = 42, .threads = 1};
    mc::McConfig four = one;
    four.threads = 4;
    const auto a =
        mc::simulate_exit_area(p, mc::ExpNegLambdaArea{1.0, fp::Side::Lower}, one);
    const auto b =
        mc::simulate_exit_area(p, mc::ExpNegLambdaArea{1.0, fp::Side::Lower}, four);
    report(9, "same seed, different thread counts: bit-identical estimates",
           a.mean == b.mean && a.std_error == b.std_error);
}

}  // namespace

int main() {
    t0 = std::chrono::steady_clock::now();
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    std::printf("%d of 9 criteria passed\n", 9 - failures);
    return failures == 0 ? 0 : 1;
}
