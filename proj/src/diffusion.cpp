#include "areaflux/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "areaflux/expr.hpp"
#include "areaflux/quadrature.hpp"

namespace areaflux {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log of the scale density, the quantity actually integrated everywhere
double log_scale_density(const DiffusionSpec& spec, double x);

double drift_over_var(const DiffusionSpec& spec, double u) {
    const double sig = spec.sigma(u);
    if (sig == 0.0) throw DomainError("sigma vanishes inside the state interval");
    return 2.0 * spec.mu(u) / (sig * sig);
}

void check_in_closure(const DiffusionSpec& spec, double x) {
    if (!std::isfinite(x) || !spec.space.contains_closed(x))
        throw DomainError("point outside the closed state interval");
}

}  // namespace

void StateSpace::validate() const {
    if (!(lower < upper)) throw DomainError("state space requires l < r");
    if (lower_boundary == BoundaryKind::Truncated && !std::isfinite(lower))
        throw DomainError("truncated lower boundary must be finite");
    if (upper_boundary == BoundaryKind::Truncated && !std::isfinite(upper))
        throw DomainError("truncated upper boundary must be finite");
}

StateSpace StateSpace::whole_line() {
    return StateSpace{-kInf, kInf, BoundaryKind::NaturalInfinite,
                      BoundaryKind::NaturalInfinite};
}

StateSpace StateSpace::positive_half_line() {
    return StateSpace{0.0, kInf, BoundaryKind::Absorbing, BoundaryKind::NaturalInfinite};
}

StateSpace StateSpace::interval(double l, double r) {
    StateSpace s{l, r, BoundaryKind::Absorbing, BoundaryKind::Absorbing};
    s.validate();
    return s;
}

Coefficient Coefficient::constant(double c) {
    return Coefficient{[c](double) { return c; },
                       "constant(" + std::to_string(c) + ")"};
}

Coefficient Coefficient::from_expression(const std::string& source) {
    auto e = expr::Expr::parse(source);
    return Coefficient{[e](double x) { return e.evaluate(x); }, "expr:" + source};
}

Coefficient Coefficient::builtin(std::string name, std::function<double(double)> f) {
    return Coefficient{std::move(f), "builtin:" + name};
}

double DiffusionSpec::default_ref_point(const StateSpace& space) {
    if (space.contains(0.0)) return 0.0;
    if (std::isfinite(space.lower) && std::isfinite(space.upper))
        return 0.5 * (space.lower + space.upper);
    if (std::isfinite(space.lower)) return space.lower + 1.0;
    return space.upper - 1.0;
}

DiffusionSpec DiffusionSpec::bm_drift(double mu, double sigma) {
    DiffusionSpec s;
    s.mu = Coefficient::builtin("bm_drift.mu", [mu](double) { return mu; });
    s.sigma = Coefficient::builtin("bm_drift.sigma", [sigma](double) { return sigma; });
    s.space = StateSpace::whole_line();
    s.ref_point = 0.0;
    s.model = Model::BmDrift;
    s.p1 = mu;
    s.p2 = sigma;
    if (sigma == 0.0) throw DomainError("bm_drift requires sigma != 0");
    return s;
}

DiffusionSpec DiffusionSpec::gbm(double mu, double sigma) {
    DiffusionSpec s;
    s.mu = Coefficient::builtin("gbm.mu", [mu](double x) { return mu * x; });
    s.sigma = Coefficient::builtin("gbm.sigma", [sigma](double x) { return sigma * x; });
    s.space = StateSpace::positive_half_line();
    s.ref_point = 1.0;
    s.model = Model::Gbm;
    s.p1 = mu;
    s.p2 = sigma;
    if (sigma == 0.0) throw DomainError("gbm requires sigma != 0");
    return s;
}

DiffusionSpec DiffusionSpec::ou(double kappa, double theta, double sigma) {
    DiffusionSpec s;
    s.mu = Coefficient::builtin("ou.mu",
                                [kappa, theta](double x) { return kappa * (theta - x); });
    s.sigma = Coefficient::builtin("ou.sigma", [sigma](double) { return sigma; });
    s.space = StateSpace::whole_line();
    s.ref_point = 0.0;
    s.model = Model::Ou;
    s.p1 = kappa;
    s.p2 = theta;
    s.p3 = sigma;
    if (sigma == 0.0) throw DomainError("ou requires sigma != 0");
    return s;
}

DiffusionSpec DiffusionSpec::quad_drift(double mu) {
    DiffusionSpec s;
    s.mu = Coefficient::builtin("quad_drift.mu", [mu](double x) { return mu * x * x; });
    s.sigma = Coefficient::builtin("quad_drift.sigma", [](double x) { return x; });
    s.space = StateSpace::whole_line();
    s.ref_point = 0.0;
    s.model = Model::QuadDrift;
    s.p1 = mu;
    return s;
}

DiffusionSpec DiffusionSpec::generic(Coefficient mu, Coefficient sigma, StateSpace space) {
    return generic(std::move(mu), std::move(sigma), space, default_ref_point(space));
}

DiffusionSpec DiffusionSpec::generic(Coefficient mu, Coefficient sigma, StateSpace space,
                                     double ref_point) {
    space.validate();
    if (!space.contains(ref_point))
        throw DomainError("ref_point must lie strictly inside the state interval");
    DiffusionSpec s;
    s.mu = std::move(mu);
    s.sigma = std::move(sigma);
    s.space = space;
    s.ref_point = ref_point;
    s.model = Model::Generic;

    // sigma != 0 probe on an interior grid
    const double lo = std::isfinite(space.lower) ? space.lower : ref_point - 10.0;
    const double hi = std::isfinite(space.upper) ? space.upper : ref_point + 10.0;
    const int n = 41;
    for (int i = 1; i < n; ++i) {
        const double x = lo + (hi - lo) * i / n;
        if (!space.contains(x)) continue;
        if (s.sigma(x) == 0.0)
            throw DomainError("sigma vanishes on the evaluation grid at x=" +
                              std::to_string(x));
    }
    return s;
}

double AreaWeight::operator()(double x) const {
    if (is_unit) return 1.0;
    const double v = b_squared(x);
    if (v < 0.0) throw WeightZeroError("b^2 is negative at x=" + std::to_string(x));
    return v;
}

AreaWeight AreaWeight::unit() {
    AreaWeight w;
    w.b_squared = Coefficient::constant(1.0);
    w.is_unit = true;
    return w;
}

AreaWeight AreaWeight::square() {
    AreaWeight w;
    w.b_squared = Coefficient::builtin("square", [](double x) { return x * x; });
    w.is_square = true;
    return w;
}

AreaWeight AreaWeight::from_b_squared(Coefficient b2) {
    AreaWeight w;
    w.b_squared = std::move(b2);
    return w;
}

AreaWeight AreaWeight::from_expression(const std::string& b2_source) {
    return from_b_squared(Coefficient::from_expression(b2_source));
}

void AreaWeight::validate_on(double lo, double hi, int grid_points) const {
    if (is_unit) return;
    int zeros = 0;
    for (int i = 0; i <= grid_points; ++i) {
        const double x = lo + (hi - lo) * i / grid_points;
        const double v = b_squared(x);
        if (v < 0.0)
            throw WeightZeroError("b^2 negative at x=" + std::to_string(x));
        if (v == 0.0) ++zeros;
    }
    if (zeros > grid_points / 8)
        throw WeightZeroError("b^2 vanishes on a non-null portion of the grid");
}

namespace {

double log_scale_density(const DiffusionSpec& spec, double x) {
    const double x0 = spec.ref_point;
    switch (spec.model) {
        case Model::BmDrift: {
            const double k = 2.0 * spec.p1 / (spec.p2 * spec.p2);
            return -k * (x - x0);
        }
        case Model::QuadDrift:
            return -2.0 * spec.p1 * (x - x0);
        case Model::Gbm: {
            const double nu = 2.0 * spec.p1 / (spec.p2 * spec.p2) - 1.0;
            if (!(x > 0.0)) throw DomainError("gbm scale density needs x > 0");
            return -(nu + 1.0) * std::log(x / x0);
        }
        case Model::Ou: {
            const double kappa = spec.p1, theta = spec.p2, sig = spec.p3;
            return kappa * ((x - theta) * (x - theta) - (x0 - theta) * (x0 - theta)) /
                   (sig * sig);
        }
        case Model::Generic:
            break;
    }
    return -integrate([&](double u) { return drift_over_var(spec, u); }, x0, x);
}

}  // namespace

double scale_density(const DiffusionSpec& spec, double x) {
    check_in_closure(spec, x);
    return std::exp(log_scale_density(spec, x));
}

double scale_function(const DiffusionSpec& spec, double x) {
    check_in_closure(spec, x);
    const double x0 = spec.ref_point;
    switch (spec.model) {
        case Model::BmDrift: {
            const double k = 2.0 * spec.p1 / (spec.p2 * spec.p2);
            if (k == 0.0) return x - x0;
            return (1.0 - std::exp(-k * (x - x0))) / k;
        }
        case Model::QuadDrift: {
            const double k = 2.0 * spec.p1;
            if (k == 0.0) return x - x0;
            return (1.0 - std::exp(-k * (x - x0))) / k;
        }
        case Model::Gbm: {
            const double nu = 2.0 * spec.p1 / (spec.p2 * spec.p2) - 1.0;
            if (nu == 0.0) return x0 * std::log(x / x0);
            return x0 * (1.0 - std::pow(x / x0, -nu)) / nu;
        }
        default:
            break;
    }
    return integrate([&](double y) { return scale_density(spec, y); }, x0, x, 1e-10);
}

double speed_density(const DiffusionSpec& spec, double x) {
    if (!spec.space.contains(x))
        throw DomainError("speed density is defined strictly inside (l,r)");
    const double sig = spec.sigma(x);
    if (sig == 0.0) throw DomainError("sigma vanishes at x");
    return 2.0 / (sig * sig * scale_density(spec, x));
}

double weighted_speed_density(const DiffusionSpec& spec, const AreaWeight& w, double x) {
    return w(x) * speed_density(spec, x);
}

std::optional<double> scale_tail_integral(const DiffusionSpec& spec, double from,
                                          Tail which) {
    const double x0 = spec.ref_point;
    switch (spec.model) {
        case Model::BmDrift:
        case Model::QuadDrift: {
            const double k = spec.model == Model::BmDrift
                                 ? 2.0 * spec.p1 / (spec.p2 * spec.p2)
                                 : 2.0 * spec.p1;
            if (which == Tail::Upper) {
                if (k <= 0.0) return std::nullopt;
                return std::exp(-k * (from - x0)) / k;
            }
            if (k >= 0.0) return std::nullopt;
            return -std::exp(-k * (from - x0)) / k;
        }
        case Model::Gbm: {
            const double nu = 2.0 * spec.p1 / (spec.p2 * spec.p2) - 1.0;
            if (which == Tail::Upper) {
                if (nu <= 0.0) return std::nullopt;
                return x0 * std::pow(from / x0, -nu) / nu;
            }
            if (nu >= 0.0) return std::nullopt;
            return -x0 * std::pow(from / x0, -nu) / nu;
        }
        case Model::Ou:
            return std::nullopt;  // s grows like exp(kappa x^2 / sigma^2) both ways
        case Model::Generic:
            break;
    }

    const double boundary =
        which == Tail::Upper ? spec.space.upper : spec.space.lower;
    const double sign = which == Tail::Upper ? 1.0 : -1.0;
    auto dens = [&](double y) { return scale_density(spec, y); };
    if (std::isfinite(boundary))
        return sign > 0 ? integrate(dens, from, boundary, 1e-10)
                        : integrate(dens, boundary, from, 1e-10);

    // doubling protocol: stop when two consecutive increments are negligible
    double total = 0.0;
    double near = from;
    double width = 1.0;
    int quiet = 0;
    for (int k = 0; k < 60; ++k) {
        const double far = near + sign * width;
        const double inc = sign > 0 ? integrate(dens, near, far, 1e-10)
                                    : integrate(dens, far, near, 1e-10);
        total += inc;
        if (!std::isfinite(total) || total > 1e15) return std::nullopt;
        if (inc < 1e-8 * std::max(1.0, total)) {
            if (++quiet >= 2) return total;
        } else {
            quiet = 0;
        }
        near = far;
        width *= 2.0;
    }
    return std::nullopt;
}

DiffusionSpec time_change(const DiffusionSpec& spec, const AreaWeight& w) {
    if (w.is_unit) return spec;
    DiffusionSpec out;
    const Coefficient mu = spec.mu, sigma = spec.sigma;
    const AreaWeight weight = w;
    out.mu = Coefficient{[mu, weight](double x) {
                             const double b2 = weight(x);
                             if (b2 == 0.0)
                                 throw WeightZeroError("b^2 = 0 in time-changed drift");
                             return mu(x) / b2;
                         },
                         "time_change(" + spec.mu.provenance + ")"};
    out.sigma = Coefficient{[sigma, weight](double x) {
                                const double b2 = weight(x);
                                if (b2 == 0.0)
                                    throw WeightZeroError(
                                        "b^2 = 0 in time-changed volatility");
                                return sigma(x) / std::sqrt(b2);
                            },
                            "time_change(" + spec.sigma.provenance + ")"};
    out.space = spec.space;
    out.ref_point = spec.ref_point;
    out.model = Model::Generic;
    return out;
}

ScaleTable::ScaleTable(const DiffusionSpec& spec, double lo, double hi, int panels)
    : spec_(spec), lo_(lo), hi_(hi) {
    if (!(lo < hi)) throw DomainError("ScaleTable requires lo < hi");
    if (spec.model != Model::Generic) {
        closed_form_ = true;
        return;
    }
    h_ = (hi - lo) / panels;
    log_s_.resize(panels + 1);
    big_s_.resize(panels + 1);

    // anchor at the node closest to ref_point so normalization is exact there
    const double x0 = spec.ref_point;
    log_s_[0] = -integrate([&](double u) { return drift_over_var(spec_, u); }, x0, lo);
    for (int i = 1; i <= panels; ++i) {
        const double a = lo + (i - 1) * h_, b = lo + i * h_;
        log_s_[i] = log_s_[i - 1] -
                    integrate([&](double u) { return drift_over_var(spec_, u); }, a, b);
    }
    big_s_[0] = 0.0;
    for (int i = 1; i <= panels; ++i) {
        const double a = lo + (i - 1) * h_, b = lo + i * h_;
        const double la = log_s_[i - 1], lb = log_s_[i];
        // log s interpolated linearly within the panel
        big_s_[i] = big_s_[i - 1] +
                    integrate(
                        [&](double y) {
                            const double t = (y - a) / h_;
                            return std::exp(la + (lb - la) * t);
                        },
                        a, b);
    }
    // shift so S(ref_point) = 0
    const double s_ref = interp_value(x0);
    for (auto& v : big_s_) v -= s_ref;
}

double ScaleTable::interp_value(double x) const {
    const int last = static_cast<int>(big_s_.size()) - 1;
    const double t = std::clamp((x - lo_) / h_, 0.0, double(last));
    const int i = std::min<int>(static_cast<int>(t), last - 1);
    const double f = t - i;
    const double la = log_s_[i], lb = log_s_[i + 1], d = lb - la;
    // exact integral of the log-linear density over the partial panel
    double inc;
    if (std::abs(d) < 1e-12)
        inc = std::exp(la) * f * h_;
    else
        inc = h_ / d * (std::exp(la + d * f) - std::exp(la));
    return big_s_[i] + inc;
}

double ScaleTable::density(double x) const {
    if (closed_form_) return scale_density(spec_, x);
    const double t = std::clamp((x - lo_) / h_, 0.0, double(log_s_.size() - 1));
    const int i = std::min<int>(static_cast<int>(t), static_cast<int>(log_s_.size()) - 2);
    const double f = t - i;
    return std::exp(log_s_[i] + (log_s_[i + 1] - log_s_[i]) * f);
}

double ScaleTable::value(double x) const {
    if (closed_form_) return scale_function(spec_, x);
    return interp_value(x);
}

}  // namespace areaflux
