#include "areaflux/first_passage.hpp"

#include <algorithm>
#include <cmath>

#include "areaflux/quadrature.hpp"
#include "areaflux/sturm_liouville.hpp"

namespace areaflux::fp {

namespace {

// Chebyshev points of the second kind on [a,c], ascending.
std::vector<double> cheb_grid(double a, double c, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) {
        const double t = std::cos(M_PI * (n - 1 - i) / (n - 1));
        g[i] = 0.5 * (a + c) + 0.5 * (c - a) * t;
    }
    g.front() = a;
    g.back() = c;
    return g;
}

std::vector<double> cheb_weights(int n) {
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = (i % 2 == 0) ? 1.0 : -1.0;
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

double barycentric(const std::vector<double>& grid, const std::vector<double>& w,
                   const std::vector<double>& v, double x) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double d = x - grid[i];
        if (d == 0.0) return v[i];
        const double t = w[i] / d;
        num += t * v[i];
        den += t;
    }
    return num / den;
}

// Scale function and weighted speed density cached over [a,c]; generic specs
// go through a panel tabulation, catalog specs through closed forms.
struct Frame {
    const DiffusionSpec& spec;
    const AreaWeight& w;
    ScaleTable table;

    Frame(const DiffusionSpec& s, const AreaWeight& weight, double a, double c)
        : spec(s), w(weight), table(s, a, c, 2048) {}

    double S(double x) const { return table.value(x); }
    double mstar(double y) const {
        double sig = spec.sigma(y);
        if (sig == 0.0) {
            // isolated degeneracy (catalog quad-drift origin): nudge off it
            y += 1e-9;
            sig = spec.sigma(y);
            if (sig == 0.0) return 0.0;
        }
        return 2.0 * w(y) / (sig * sig * table.density(y));
    }
};

// One recursion level: mu_n from mu_{n-1} known on the grid.
std::vector<double> next_moment(const Frame& fr, const std::vector<double>& grid,
                                const std::vector<double>& bw,
                                const std::vector<double>& prev, int n) {
    const double a = grid.front(), c = grid.back();
    const double Sa = fr.S(a), Sc = fr.S(c);
    const double span = Sc - Sa;
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid[i];
        if (x == a || x == c) continue;
        const double Sx = fr.S(x);
        auto density = [&](double y) {
            const double mu_prev = n == 1 ? 1.0 : barycentric(grid, bw, prev, y);
            return mu_prev * fr.mstar(y);
        };
        const double up =
            integrate([&](double y) { return (Sc - fr.S(y)) * density(y); }, x, c, 1e-10);
        const double lo =
            integrate([&](double y) { return (fr.S(y) - Sa) * density(y); }, a, x, 1e-10);
        out[i] = n * ((Sx - Sa) / span * up + (Sc - Sx) / span * lo);
        out[i] = std::max(out[i], 0.0);
    }
    return out;
}

MomentTable moments_on_grid(const ExitProblem& p, const AreaWeight& w, int n_order,
                            int grid_size) {
    Frame fr(p.spec, w, p.a, p.c);
    auto grid = cheb_grid(p.a, p.c, grid_size);
    auto bw = cheb_weights(grid_size);
    std::vector<std::vector<double>> levels;
    std::vector<double> prev;
    for (int n = 1; n <= n_order; ++n) {
        prev = next_moment(fr, grid, bw, prev, n);
        levels.push_back(prev);
    }
    return MomentTable(std::move(grid), std::move(levels));
}

MomentTable moments_adaptive(const ExitProblem& p, const AreaWeight& w, int n_order) {
    p.validate();
    if (n_order < 1) throw DomainError("moment order must be >= 1");
    int grid_size = 33;
    MomentTable table = moments_on_grid(p, w, n_order, grid_size);
    double ref = table.value(n_order, p.v0);
    for (int pass = 0; pass < 5; ++pass) {
        grid_size = 2 * (grid_size - 1) + 1;
        MomentTable finer = moments_on_grid(p, w, n_order, grid_size);
        const double v = finer.value(n_order, p.v0);
        const bool done = std::abs(v - ref) <= 1e-8 * std::max(1e-30, std::abs(v));
        table = std::move(finer);
        ref = v;
        if (done) return table;
    }
    return table;
}

}  // namespace

void ExitProblem::validate() const {
    if (!(a < v0 && v0 < c))
        throw DomainError("exit problem requires a < v0 < c");
    if (!spec.space.contains_closed(a) || !spec.space.contains_closed(c))
        throw DomainError("[a,c] must lie inside the state closure");
}

MomentTable::MomentTable(std::vector<double> grid, std::vector<std::vector<double>> values)
    : grid_(std::move(grid)), bary_w_(cheb_weights(static_cast<int>(grid_.size()))),
      values_(std::move(values)) {}

const std::vector<double>& MomentTable::order(int n) const {
    if (n < 1 || n > max_order()) throw DomainError("moment order out of range");
    return values_[n - 1];
}

double MomentTable::value(int n, double x) const {
    if (x < grid_.front() - 1e-12 || x > grid_.back() + 1e-12)
        throw DomainError("moment evaluation outside [a,c]");
    return barycentric(grid_, bary_w_, order(n), std::clamp(x, grid_.front(), grid_.back()));
}

double exit_laplace(const ExitProblem& p, double lambda, Side side) {
    ExitProblem q = p;
    q.weight = AreaWeight::unit();
    return area_laplace(q, lambda, side);
}

double area_laplace(const ExitProblem& p, double lambda, Side side) {
    p.validate();
    if (lambda < 0.0) throw DomainError("lambda must be >= 0");

    if (lambda == 0.0) {
        // exit probability by the scale-ratio identity
        const double Sa = scale_function(p.spec, p.a);
        const double Sc = scale_function(p.spec, p.c);
        const double Sv = scale_function(p.spec, p.v0);
        return side == Side::Lower ? (Sc - Sv) / (Sc - Sa) : (Sv - Sa) / (Sc - Sa);
    }

    sl::FundamentalBasis basis(p.spec, p.weight, lambda, p.a, p.c);
    const double r = side == Side::Lower ? basis.f_ratio(p.v0, p.c, p.a, p.c)
                                         : basis.f_ratio(p.a, p.v0, p.a, p.c);
    return std::clamp(r, 0.0, 1.0);
}

MomentTable exit_time_moments(const ExitProblem& p, int n) {
    return moments_adaptive(p, AreaWeight::unit(), n);
}

MomentTable area_moments(const ExitProblem& p, int n) {
    return moments_adaptive(p, p.weight, n);
}

}  // namespace areaflux::fp
