#include "areaflux/sturm_liouville.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>

#include "areaflux/quadrature.hpp"
#include "areaflux/special_functions.hpp"

namespace areaflux::sl {

namespace {

namespace ode = boost::numeric::odeint;

// right-hand-side ratios of the weighted SL equation, with a nudge where the
// catalog sigma vanishes at an isolated point (quad_drift at the origin)
struct Ratios {
    const DiffusionSpec* spec;
    const AreaWeight* w;

    void get(double x, double& q_weight, double& q_drift) const {
        double sig = spec->sigma(x);
        double xx = x;
        if (sig == 0.0) {
            xx = x + 1e-9;
            sig = spec->sigma(xx);
        }
        const double s2 = sig * sig;
        q_weight = (*w)(xx) / s2;
        q_drift = spec->mu(xx) / s2;
    }
};

using RiccatiState = std::array<double, 2>;  // (p, log g)

struct RiccatiRhs {
    Ratios r;
    double lambda;

    void operator()(const RiccatiState& y, RiccatiState& dy, double x) const {
        double qw, qd;
        r.get(x, qw, qd);
        const double p = y[0];
        dy[0] = 2.0 * lambda * qw - 2.0 * qd * p - p * p;
        dy[1] = p;
    }
};

// decaying (-) or growing (+) frozen-coefficient equilibrium of the Riccati flow
double equilibrium(const Ratios& r, double lambda, double x, int sign) {
    double qw, qd;
    r.get(x, qw, qd);
    const double disc = std::sqrt(qd * qd + 2.0 * lambda * qw);
    return -qd + sign * disc;
}

// Integrate the Riccati form from x_start to the far end of `nodes`,
// recording (p, log g) at each node. `nodes` must be ordered in the direction
// of integration.
void integrate_riccati(const Ratios& r, double lambda, double x_start, double p_start,
                       const std::vector<double>& nodes, std::vector<double>& p_out,
                       std::vector<double>& logg_out) {
    RiccatiRhs rhs{r, lambda};
    auto stepper = ode::make_dense_output(1e-10, 1e-10,
                                          ode::runge_kutta_dopri5<RiccatiState>());
    RiccatiState y{p_start, 0.0};
    p_out.assign(nodes.size(), 0.0);
    logg_out.assign(nodes.size(), 0.0);
    const double dir = nodes.back() > x_start ? 1.0 : -1.0;
    stepper.initialize(y, x_start, dir * 1e-4 * std::abs(nodes.back() - x_start));
    std::size_t next = 0;
    // nodes at (or numerically on) the start point
    while (next < nodes.size() && dir * (nodes[next] - x_start) <= 1e-14) {
        p_out[next] = y[0];
        logg_out[next] = y[1];
        ++next;
    }
    while (next < nodes.size()) {
        stepper.do_step(rhs);
        const auto& cur = stepper.current_state();
        if (!std::isfinite(cur[0]) || std::abs(cur[0]) > 1e12)
            throw StiffnessError("Riccati integration blew up");
        while (next < nodes.size() && dir * (stepper.current_time() - nodes[next]) >= 0.0) {
            RiccatiState yi;
            stepper.calc_state(nodes[next], yi);
            p_out[next] = yi[0];
            logg_out[next] = yi[1];
            ++next;
        }
    }
}

std::vector<double> window_grid(double a, double c, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = a + (c - a) * i / (n - 1);
    g.front() = a;
    g.back() = c;
    return g;
}

// truncation point sequence beyond the window toward a boundary
double truncation_point(double window_edge, double boundary, double window_width,
                        int level, int direction) {
    if (std::isfinite(boundary)) {
        // approach a finite boundary geometrically
        const double gap = std::abs(boundary - window_edge);
        return boundary - direction * gap / std::pow(2.0, level + 1);
    }
    return window_edge + direction * 5.0 * window_width * std::pow(2.0, level);
}

struct MonotoneSolution {
    std::vector<double> g, dg;
    double truncation = 0.0;
};

// Boundary-respecting solution via the truncation protocol. direction=+1
// builds the decreasing solution from the right, -1 the increasing one from
// the left.
MonotoneSolution solve_monotone(const DiffusionSpec& spec, const AreaWeight& w,
                                double lambda, const std::vector<double>& grid,
                                int direction, const SolveOptions& opts) {
    Ratios r{&spec, &w};
    const double a = grid.front(), c = grid.back();
    const double width = c - a;
    const double window_edge = direction > 0 ? c : a;
    const double boundary = direction > 0 ? spec.space.upper : spec.space.lower;

    // integration runs from the truncation point toward the far window edge;
    // for the decreasing solution that is right-to-left
    std::vector<double> nodes = direction > 0
                                    ? std::vector<double>(grid.rbegin(), grid.rend())
                                    : std::vector<double>(grid.begin(), grid.end());

    std::vector<double> p, logg, p_prev;
    double trunc = 0.0;
    int stable = 0;
    bool converged = false;
    for (int level = 0; level < opts.max_enlargements; ++level) {
        trunc = truncation_point(window_edge, boundary, width, level, direction);
        const int eq_sign = direction > 0 ? -1 : +1;
        const double p0 = equilibrium(r, lambda, trunc, eq_sign);
        std::vector<double> p_new, logg_new;
        integrate_riccati(r, lambda, trunc, p0, nodes, p_new, logg_new);
        if (!p_prev.empty()) {
            const double d0 = std::abs(p_new.front() - p_prev.front());
            const double d1 = std::abs(p_new.back() - p_prev.back());
            const double scale = std::max({1.0, std::abs(p_new.front()),
                                           std::abs(p_new.back())});
            if (std::max(d0, d1) < opts.tolerance * scale) {
                if (++stable >= 2) {
                    p = p_new;
                    logg = logg_new;
                    converged = true;
                    break;
                }
            } else {
                stable = 0;
            }
        }
        p_prev = p_new;
        p = std::move(p_new);
        logg = std::move(logg_new);
    }
    if (!converged)
        throw TruncationError("psi values failed to stabilize under truncation "
                              "enlargement");

    // nodes were traversed in integration order; flip back to ascending grid
    MonotoneSolution out;
    out.truncation = trunc;
    const std::size_t n = grid.size();
    std::vector<double> p_g(n), l_g(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = direction > 0 ? n - 1 - i : i;
        p_g[i] = p[j];
        l_g[i] = logg[j];
    }
    const double lmax = *std::max_element(l_g.begin(), l_g.end());
    out.g.resize(n);
    out.dg.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.g[i] = std::exp(l_g[i] - lmax);
        out.dg[i] = p_g[i] * out.g[i];
    }
    return out;
}

// cubic Hermite lookup on an ascending grid
double hermite(const std::vector<double>& grid, const std::vector<double>& v,
               const std::vector<double>& dv, double x) {
    if (x < grid.front() - 1e-12 || x > grid.back() + 1e-12)
        throw DomainError("evaluation outside the tabulated window");
    const auto it = std::upper_bound(grid.begin(), grid.end(), x);
    std::size_t i = it == grid.begin() ? 0 : (it - grid.begin()) - 1;
    i = std::min(i, grid.size() - 2);
    const double h = grid[i + 1] - grid[i];
    const double t = (x - grid[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * v[i] + h10 * h * dv[i] + h01 * v[i + 1] + h11 * h * dv[i + 1];
}

double hermite_deriv(const std::vector<double>& grid, const std::vector<double>& v,
                     const std::vector<double>& dv, double x) {
    const auto it = std::upper_bound(grid.begin(), grid.end(), x);
    std::size_t i = it == grid.begin() ? 0 : (it - grid.begin()) - 1;
    i = std::min(i, grid.size() - 2);
    const double h = grid[i + 1] - grid[i];
    const double t = (x - grid[i]) / h;
    const double t2 = t * t;
    const double d00 = (6 * t2 - 6 * t) / h, d10 = 3 * t2 - 4 * t + 1;
    const double d01 = (-6 * t2 + 6 * t) / h, d11 = 3 * t2 - 2 * t;
    return d00 * v[i] + d10 * dv[i] + d01 * v[i + 1] + d11 * dv[i + 1];
}

void tabulate_closed_form(SLSolutionPair& pair) {
    const std::size_t n = pair.grid.size();
    pair.g_plus.resize(n);
    pair.g_minus.resize(n);
    pair.dg_plus.resize(n);
    pair.dg_minus.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = pair.grid[i];
        pair.g_plus[i] = pair.cf_gp(x);
        pair.g_minus[i] = pair.cf_gm(x);
        pair.dg_plus[i] = pair.cf_dgp(x);
        pair.dg_minus[i] = pair.cf_dgm(x);
    }
}

bool closed_form_pair(const DiffusionSpec& spec, const AreaWeight& w, double lambda,
                      SLSolutionPair& pair) {
    // drifted BM (or the quad-drift example, whose weighted equation reduces
    // to it): g_pm = exp(beta_pm x)
    double drift = 0.0, vol = 0.0;
    bool exponential = false;
    if (spec.model == Model::BmDrift && w.is_unit) {
        drift = spec.p1;
        vol = spec.p2;
        exponential = true;
        pair.catalog_id = "bm_drift";
    } else if (spec.model == Model::QuadDrift && w.is_square) {
        drift = spec.p1;
        vol = 1.0;
        exponential = true;
        pair.catalog_id = "quad_drift+x^2";
    }
    if (exponential) {
        const double v2 = vol * vol;
        const double bp = (-drift + std::sqrt(drift * drift + 2.0 * lambda * v2)) / v2;
        const double bm = (-drift - std::sqrt(drift * drift + 2.0 * lambda * v2)) / v2;
        pair.cf_gp = [bp](double x) { return std::exp(bp * x); };
        pair.cf_dgp = [bp](double x) { return bp * std::exp(bp * x); };
        pair.cf_gm = [bm](double x) { return std::exp(bm * x); };
        pair.cf_dgm = [bm](double x) { return bm * std::exp(bm * x); };
        return true;
    }

    if (spec.model == Model::Gbm && w.is_square) {
        // (1/2) sigma^2 g'' + (mu/x) g' = lambda g after the time change:
        // solutions x^{-nu/2} I_{nu/2}(k x) and x^{-nu/2} K_{nu/2}(k x),
        // k = sqrt(2 lambda)/sigma, nu = 2 mu / sigma^2 - 1.
        const double sigma = spec.p2;
        const double nu = 2.0 * spec.p1 / (sigma * sigma) - 1.0;
        const double k = std::sqrt(2.0 * lambda) / sigma;
        const double half = 0.5 * nu;
        pair.catalog_id = "gbm+x^2";
        pair.cf_gp = [half, k](double x) {
            return std::pow(x, -half) * special::bessel_i(half, k * x);
        };
        pair.cf_dgp = [half, k](double x) {
            return -half * std::pow(x, -half - 1.0) * special::bessel_i(half, k * x) +
                   std::pow(x, -half) * k * special::bessel_i_prime(half, k * x);
        };
        pair.cf_gm = [half, k](double x) {
            return std::pow(x, -half) * special::bessel_k(half, k * x);
        };
        pair.cf_dgm = [half, k](double x) {
            return -half * std::pow(x, -half - 1.0) * special::bessel_k(half, k * x) +
                   std::pow(x, -half) * k * special::bessel_k_prime(half, k * x);
        };
        return true;
    }
    return false;
}

// lambda = 0: the harmonic pair from the scale integrals, split by
// monotonicity
void zero_lambda_pair(const DiffusionSpec& spec, SLSolutionPair& pair) {
    const double A = pair.grid.front();
    const auto upper = scale_tail_integral(spec, A, Tail::Upper);
    const auto lower = scale_tail_integral(spec, A, Tail::Lower);
    const DiffusionSpec s = spec;

    const double S_A = scale_function(spec, A);
    if (upper) {
        const double total = *upper;
        pair.cf_gm = [s, S_A, total](double x) {
            return total - (scale_function(s, x) - S_A);
        };
        pair.cf_dgm = [s](double x) { return -scale_density(s, x); };
    } else {
        pair.cf_gm = [](double) { return 1.0; };
        pair.cf_dgm = [](double) { return 0.0; };
    }

    if (lower) {
        const double base = *lower;
        pair.cf_gp = [s, S_A, base](double x) {
            return base + (scale_function(s, x) - S_A);
        };
        pair.cf_dgp = [s](double x) { return scale_density(s, x); };
    } else if (upper) {
        pair.cf_gp = [](double) { return 1.0; };
        pair.cf_dgp = [](double) { return 0.0; };
    } else {
        // both scale tails diverge: S-based increasing solution anchored at
        // the window's left edge
        pair.cf_gp = [s, S_A](double x) { return scale_function(s, x) - S_A; };
        pair.cf_dgp = [s](double x) { return scale_density(s, x); };
    }
    pair.catalog_id = "lambda0-scale";
}

}  // namespace

double SLSolutionPair::gp(double x) const {
    if (cf_gp) return cf_gp(x);
    return hermite(grid, g_plus, dg_plus, x);
}

double SLSolutionPair::gm(double x) const {
    if (cf_gm) return cf_gm(x);
    return hermite(grid, g_minus, dg_minus, x);
}

double SLSolutionPair::dgp(double x) const {
    if (cf_dgp) return cf_dgp(x);
    return hermite_deriv(grid, g_plus, dg_plus, x);
}

double SLSolutionPair::dgm(double x) const {
    if (cf_dgm) return cf_dgm(x);
    return hermite_deriv(grid, g_minus, dg_minus, x);
}

SLSolutionPair solve_pair(const DiffusionSpec& spec, double lambda,
                          std::pair<double, double> window, const SolveOptions& opts) {
    return solve_pair_weighted(spec, AreaWeight::unit(), lambda, window, opts);
}

SLSolutionPair solve_pair_weighted(const DiffusionSpec& spec, const AreaWeight& w,
                                   double lambda, std::pair<double, double> window,
                                   const SolveOptions& opts) {
    if (lambda < 0.0) throw DomainError("lambda must be >= 0");
    const auto [A, C] = window;
    if (!(A < C) || !spec.space.contains_closed(A) || !spec.space.contains_closed(C))
        throw DomainError("window must satisfy A < C inside the state closure");

    SLSolutionPair pair;
    pair.lambda = lambda;
    pair.grid = window_grid(A, C, opts.grid_points);

    if (lambda == 0.0) {
        pair.source = SourceKind::ClosedForm;
        zero_lambda_pair(spec, pair);
        tabulate_closed_form(pair);
        return pair;
    }

    if (closed_form_pair(spec, w, lambda, pair)) {
        pair.source = SourceKind::ClosedForm;
        tabulate_closed_form(pair);
        return pair;
    }

    pair.source = SourceKind::Numeric;
    auto minus = solve_monotone(spec, w, lambda, pair.grid, +1, opts);
    auto plus = solve_monotone(spec, w, lambda, pair.grid, -1, opts);
    pair.g_minus = std::move(minus.g);
    pair.dg_minus = std::move(minus.dg);
    pair.g_plus = std::move(plus.g);
    pair.dg_plus = std::move(plus.dg);
    pair.right_truncation = minus.truncation;
    pair.left_truncation = plus.truncation;
    return pair;
}

double f_lambda(const SLSolutionPair& pair, double y, double z) {
    return pair.gm(y) * pair.gp(z) - pair.gm(z) * pair.gp(y);
}

Exponents laplace_exponents(const SLSolutionPair& pair, double x) {
    Exponents e;
    e.psi_plus = pair.dgp(x) / pair.gp(x);
    e.psi_minus = -pair.dgm(x) / pair.gm(x);
    return e;
}

FundamentalBasis::FundamentalBasis(const DiffusionSpec& spec, const AreaWeight& w,
                                   double lambda, double a, double c, int grid_points)
    : a_(a), c_(c) {
    if (!(a < c)) throw DomainError("FundamentalBasis requires a < c");
    Ratios r{&spec, &w};
    const int n = grid_points;
    h_ = (c - a) / (n - 1);
    u1_.resize(n);
    du1_.resize(n);
    u2_.resize(n);
    du2_.resize(n);
    logsc_.resize(n);

    using State = std::array<double, 4>;
    auto rhs = [&](const State& y, State& dy, double x) {
        double qw, qd;
        r.get(x, qw, qd);
        dy[0] = y[1];
        dy[1] = 2.0 * lambda * qw * y[0] - 2.0 * qd * y[1];
        dy[2] = y[3];
        dy[3] = 2.0 * lambda * qw * y[2] - 2.0 * qd * y[3];
    };
    auto stepper = ode::make_dense_output(1e-12, 1e-12,
                                          ode::runge_kutta_dopri5<State>());
    State y{1.0, 0.0, 0.0, 1.0};
    stepper.initialize(y, a, h_);
    double logsc = 0.0;
    u1_[0] = 1.0;
    du1_[0] = 0.0;
    u2_[0] = 0.0;
    du2_[0] = 1.0;
    logsc_[0] = 0.0;
    int next = 1;
    while (next < n) {
        stepper.do_step(rhs);
        while (next < n && stepper.current_time() >= a + next * h_ - 1e-14) {
            State yi;
            stepper.calc_state(std::min(a + next * h_, c), yi);
            u1_[next] = yi[0];
            du1_[next] = yi[1];
            u2_[next] = yi[2];
            du2_[next] = yi[3];
            logsc_[next] = logsc;
            ++next;
        }
        State cur = stepper.current_state();
        double big = 0.0;
        for (double v : cur) big = std::max(big, std::abs(v));
        if (!std::isfinite(big)) throw StiffnessError("basis integration overflowed");
        if (big > 1e100) {
            for (auto& v : cur) v /= big;
            logsc += std::log(big);
            stepper.initialize(cur, stepper.current_time(), h_);
        }
    }
}

FundamentalBasis::Eval FundamentalBasis::eval(double x) const {
    if (x < a_ - 1e-12 || x > c_ + 1e-12)
        throw DomainError("evaluation outside [a,c]");
    const int n = static_cast<int>(u1_.size());
    const double t = std::clamp((x - a_) / h_, 0.0, double(n - 1));
    int i = std::min(static_cast<int>(t), n - 2);
    // Hermite interpolation is valid within a panel only if the scale factor
    // did not change across it; fall to the nearer node if it did.
    if (logsc_[i] != logsc_[i + 1]) {
        const int j = (t - i) < 0.5 ? i : i + 1;
        return Eval{u1_[j], u2_[j], logsc_[j]};
    }
    const double xa = a_ + i * h_;
    const double tt = (x - xa) / h_;
    const double t2 = tt * tt, t3 = t2 * tt;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + tt;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    Eval e;
    e.u1 = h00 * u1_[i] + h10 * h_ * du1_[i] + h01 * u1_[i + 1] + h11 * h_ * du1_[i + 1];
    e.u2 = h00 * u2_[i] + h10 * h_ * du2_[i] + h01 * u2_[i + 1] + h11 * h_ * du2_[i + 1];
    e.log_scale = logsc_[i];
    return e;
}

FundamentalBasis::PointValues FundamentalBasis::values(double x) const {
    if (x < a_ - 1e-12 || x > c_ + 1e-12)
        throw DomainError("evaluation outside [a,c]");
    const int n = static_cast<int>(u1_.size());
    const double t = std::clamp((x - a_) / h_, 0.0, double(n - 1));
    int i = std::min(static_cast<int>(t), n - 2);
    if (logsc_[i] != logsc_[i + 1]) {
        const int j = (t - i) < 0.5 ? i : i + 1;
        return PointValues{u1_[j], du1_[j], u2_[j], du2_[j], logsc_[j]};
    }
    const double xa = a_ + i * h_;
    const double tt = (x - xa) / h_;
    const double t2 = tt * tt, t3 = t2 * tt;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + tt;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    const double d00 = (6 * t2 - 6 * tt) / h_, d10 = 3 * t2 - 4 * tt + 1;
    const double d01 = (-6 * t2 + 6 * tt) / h_, d11 = 3 * t2 - 2 * tt;
    PointValues v;
    v.u1 = h00 * u1_[i] + h10 * h_ * du1_[i] + h01 * u1_[i + 1] + h11 * h_ * du1_[i + 1];
    v.du1 = d00 * u1_[i] + d10 * du1_[i] + d01 * u1_[i + 1] + d11 * du1_[i + 1];
    v.u2 = h00 * u2_[i] + h10 * h_ * du2_[i] + h01 * u2_[i + 1] + h11 * h_ * du2_[i + 1];
    v.du2 = d00 * u2_[i] + d10 * du2_[i] + d01 * u2_[i + 1] + d11 * du2_[i + 1];
    v.log_scale = logsc_[i];
    return v;
}

double FundamentalBasis::f_ratio(double y1, double z1, double y2, double z2) const {
    const Eval ey1 = eval(y1), ez1 = eval(z1), ey2 = eval(y2), ez2 = eval(z2);
    const double f1 = ey1.u1 * ez1.u2 - ez1.u1 * ey1.u2;
    const double f2 = ey2.u1 * ez2.u2 - ez2.u1 * ey2.u2;
    if (f2 == 0.0) throw DomainError("degenerate denominator in f-ratio");
    const double logdiff =
        (ey1.log_scale + ez1.log_scale) - (ey2.log_scale + ez2.log_scale);
    return f1 / f2 * std::exp(logdiff);
}

}  // namespace areaflux::sl
