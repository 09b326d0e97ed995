#include "areaflux/drawdown_tax.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>

#include "areaflux/quadrature.hpp"
#include "areaflux/sturm_liouville.hpp"

namespace areaflux::dd {

namespace {

namespace ode = boost::numeric::odeint;

constexpr double kInf = std::numeric_limits<double>::infinity();

double sigma_sq_nudged(const DiffusionSpec& spec, double r) {
    double sig = spec.sigma(r);
    if (sig == 0.0) sig = spec.sigma(r + 1e-9);
    return sig * sig;
}

// spec seen from the frame where the initial value sits at the origin
DiffusionSpec shifted_spec(const DiffusionSpec& spec, double v0) {
    const Coefficient mu = spec.mu, sg = spec.sigma;
    StateSpace sp = spec.space;
    if (std::isfinite(sp.lower)) sp.lower -= v0;
    if (std::isfinite(sp.upper)) sp.upper -= v0;
    return DiffusionSpec::generic(
        Coefficient::builtin("shift.mu", [mu, v0](double x) { return mu(x + v0); }),
        Coefficient::builtin("shift.sigma", [sg, v0](double x) { return sg(x + v0); }),
        sp, 0.0);
}

AreaWeight shifted_weight(const AreaWeight& w, double v0) {
    if (w.is_unit) return w;
    const Coefficient b2 = w.b_squared;
    return AreaWeight::from_b_squared(Coefficient::builtin(
        "shift.b2", [b2, v0](double x) { return b2(x + v0); }));
}

// inner Green integral: int_{g(t)}^t b^2 (S - S(g(t))) / (sigma^2 s)
double inner_green(const DiffusionSpec& spec, const AreaWeight& w, double gt, double t) {
    const double S_g = scale_function(spec, gt);
    return integrate(
        [&](double r) {
            return w(r) * (scale_function(spec, r) - S_g) /
                   (sigma_sq_nudged(spec, r) * scale_density(spec, r));
        },
        gt, t, 1e-9);
}

// int_start^inf rate(t) inner(t) exp(-int_start^t rate) dt with
// rate(t) = s(t) / (S(t) - S(g(t))); +inf when the tail fails to decay
double outer_kill_integral(const DiffusionSpec& spec, const AreaWeight& w,
                           const std::function<double(double)>& g, double start) {
    using State = std::array<double, 2>;  // (K, I)
    auto rhs = [&](const State& y, State& dy, double t) {
        const double gt = g(t);
        const double rate =
            scale_density(spec, t) /
            (scale_function(spec, t) - scale_function(spec, gt));
        dy[0] = rate;
        if (y[0] > 745.0) {
            dy[1] = 0.0;
            return;
        }
        dy[1] = rate * inner_green(spec, w, gt, t) * std::exp(-y[0]);
    };

    auto stepper = ode::make_controlled(1e-10, 1e-10, ode::runge_kutta_dopri5<State>());
    State y{0.0, 0.0};
    double t_cur = start;
    double width = std::max(1.0, start - g(start));
    double prev_inc = kInf, prev_total = 0.0;
    int quiet = 0, growing = 0;
    for (int k = 0; k < 40; ++k) {
        ode::integrate_adaptive(stepper, rhs, y, t_cur, t_cur + width, width / 64.0);
        const double inc = y[1] - prev_total;
        if (!std::isfinite(y[1])) return kInf;
        if (inc <= 1e-9 * std::max(1.0, y[1])) {
            if (++quiet >= 2) return y[1];
        } else {
            quiet = 0;
        }
        // doubling windows with non-shrinking contributions: divergent tail
        if (k >= 3 && inc >= 0.9 * prev_inc) {
            if (++growing >= 2) return kInf;
        } else {
            growing = 0;
        }
        prev_inc = inc;
        prev_total = y[1];
        t_cur += width;
        width *= 2.0;
    }
    throw TruncationError("tail of the maximum integral did not settle");
}

}  // namespace

void DrawdownProblem::validate() const {
    if (!(a_units > 0.0)) throw DomainError("drawdown size must be positive");
    if (alpha < 0.0 || beta < 0.0) throw DomainError("alpha, beta must be >= 0");
    if (!spec.space.contains(v0) || !spec.space.contains_closed(v0 - a_units))
        throw DomainError("v0 and v0 - a_units must lie inside the state closure");
    weight.validate_on(v0 - a_units, v0 + 10.0 * a_units);
}

void TaxModel::validate() const {
    if (!(a < v0 && v0 <= s)) throw DomainError("tax model requires a < v0 <= s");
    for (int i = 0; i <= 200; ++i) {
        const double x = v0 + 20.0 * i / 200.0;
        const double gm = gamma(x);
        if (gm < 0.0 || gm >= 1.0)
            throw DomainError("tax rate must satisfy 0 <= gamma < 1");
        const double gx = contour(x);
        if (!(gx < x - 1e-12)) throw DomainError("default contour must stay below x");
    }
}

double TaxModel::contour(double x) const {
    if (x == v0) return a;
    return a + integrate(gamma.fn, v0, x, 1e-10);
}

double drawdown_joint_laplace(const DrawdownProblem& p) {
    p.validate();
    if (p.alpha == 0.0 && p.beta == 0.0) return 1.0;

    const auto spec = shifted_spec(p.spec, p.v0);
    const auto weight = shifted_weight(p.weight, p.v0);
    const double a = p.a_units;

    // d(z), c(z) are basis-invariant; the increasing/decreasing pair keeps
    // their numerators and denominators at comparable magnitude, unlike an
    // IVP basis whose two columns collapse onto the dominant solution
    using State = std::array<double, 2>;  // (D, I)
    double t_cur = 0.0;
    State y{0.0, 0.0};
    double prev_total = 0.0;
    int quiet = 0;
    double r_hi = 4.0 * a;
    for (int k = 0; k < 16; ++k) {
        if (std::isfinite(spec.space.upper))
            r_hi = std::min(r_hi, spec.space.upper - 1e-9 * a);
        auto stepper =
            ode::make_controlled(1e-10, 1e-10, ode::runge_kutta_dopri5<State>());
        if (p.beta == 0.0) {
            // the beta = 0 solution basis is {1, S}: both integrand ratios
            // collapse to s(u) / (S(u) - S(u-a))
            const ScaleTable table(spec, -a, r_hi, 4096);
            auto rhs = [&](const State& s, State& ds, double u) {
                const double den = table.value(u) - table.value(u - a);
                const double rate = table.density(u) / den;
                // once the scale difference is below double precision the
                // surviving mass exp(-D) is negligible; freeze instead of NaN
                if (!(den > 0.0) || !std::isfinite(rate)) {
                    ds[0] = ds[1] = 0.0;
                    return;
                }
                ds[0] = rate;
                const double expo = p.alpha * u + s[0];
                ds[1] = expo > 745.0 ? 0.0 : rate * std::exp(-expo);
            };
            ode::integrate_adaptive(stepper, rhs, y, t_cur, r_hi, a / 64.0);
        } else {
            sl::SolveOptions opts;
            opts.grid_points =
                std::clamp(static_cast<int>((r_hi + a) * 32.0 / a), 401, 4097);
            const auto pair =
                sl::solve_pair_weighted(spec, weight, p.beta, {-a, r_hi}, opts);
            auto rhs = [&](const State& s, State& ds, double u) {
                const double gpa = pair.gp(u - a), gma = pair.gm(u - a);
                const double gp = pair.gp(u), gm = pair.gm(u);
                const double den = gpa * gm - gp * gma;
                ds[0] = (gpa * pair.dgm(u) - gma * pair.dgp(u)) / den;
                if (!std::isfinite(ds[0])) {
                    ds[0] = ds[1] = 0.0;
                    return;
                }
                const double expo = p.alpha * u + s[0];
                if (expo > 745.0) {
                    ds[1] = 0.0;
                    return;
                }
                ds[1] = (gp * pair.dgm(u) - pair.dgp(u) * gm) / den * std::exp(-expo);
            };
            ode::integrate_adaptive(stepper, rhs, y, t_cur, r_hi, a / 64.0);
        }
        if (p.alpha * r_hi + y[0] > 745.0) return std::clamp(y[1], 0.0, 1.0);
        const double inc = y[1] - prev_total;
        if (inc <= 1e-10 * std::max(y[1], 1e-6)) {
            if (++quiet >= 2) return std::clamp(y[1], 0.0, 1.0);
        } else {
            quiet = 0;
        }
        prev_total = y[1];
        t_cur = r_hi;
        if (std::isfinite(spec.space.upper) && r_hi >= spec.space.upper - 1e-6 * a)
            return std::clamp(y[1], 0.0, 1.0);
        r_hi *= 2.0;
    }
    throw TruncationError("drawdown transform tail did not settle");
}

double ay_expected_time(const DiffusionSpec& spec,
                        const std::function<double(double)>& g, double v0, double s) {
    if (!(v0 <= s)) throw DomainError("requires v0 <= s");
    const double gs = g(s);
    if (v0 <= gs) return 0.0;
    if (!spec.space.contains(gs))
        throw DomainError("contour leaves the state interval");

    const auto unit = AreaWeight::unit();
    const double S_s = scale_function(spec, s);
    const double S_v = scale_function(spec, v0);
    const double S_g = scale_function(spec, gs);

    const double term1 = 2.0 * (S_s - S_v) / (S_s - S_g) *
                         inner_green(spec, unit, gs, v0);
    const double pref = 2.0 * (S_v - S_g) / (S_s - S_g);
    const double inner1 = integrate(
        [&](double t) {
            return (S_s - scale_function(spec, t)) /
                   (sigma_sq_nudged(spec, t) * scale_density(spec, t));
        },
        v0, s, 1e-9);
    const double tail = outer_kill_integral(spec, unit, g, s);
    if (tail == kInf) return kInf;
    return term1 + pref * (inner1 + tail);
}

double tax_expected_ruin_time(const TaxModel& m) {
    return tax_expected_ruin_area(m, AreaWeight::unit());
}

double tax_expected_ruin_area(const TaxModel& m, const AreaWeight& w) {
    m.validate();
    const double tail = outer_kill_integral(
        m.spec, w, [&](double t) { return m.contour(t); }, m.v0);
    if (tail == kInf) return kInf;
    return 2.0 * tail;
}

}  // namespace areaflux::dd
