#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "areaflux/errors.hpp"

namespace areaflux {

enum class BoundaryKind { Absorbing, NaturalInfinite, Truncated };

struct StateSpace {
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    BoundaryKind lower_boundary = BoundaryKind::NaturalInfinite;
    BoundaryKind upper_boundary = BoundaryKind::NaturalInfinite;

    void validate() const;

    static StateSpace whole_line();
    static StateSpace positive_half_line();
    static StateSpace interval(double l, double r);

    bool contains(double x) const { return x > lower && x < upper; }
    bool contains_closed(double x) const { return x >= lower && x <= upper; }
};

// A deterministic scalar coefficient together with where it came from.
struct Coefficient {
    std::function<double(double)> fn;
    std::string provenance;

    double operator()(double x) const { return fn(x); }

    static Coefficient constant(double c);
    static Coefficient from_expression(const std::string& source);
    static Coefficient builtin(std::string name, std::function<double(double)> f);
};

enum class Model { Generic, BmDrift, Gbm, Ou, QuadDrift };

struct DiffusionSpec {
    Coefficient mu;
    Coefficient sigma;
    StateSpace space;
    double ref_point = 0.0;
    Model model = Model::Generic;
    double p1 = 0.0, p2 = 0.0, p3 = 0.0;  // builtin parameters

    // dV = mu dt + sigma dW on the whole line.
    static DiffusionSpec bm_drift(double mu, double sigma = 1.0);
    // dV = mu V dt + sigma V dW on (0, inf), ref_point 1.
    static DiffusionSpec gbm(double mu, double sigma);
    // dV = kappa (theta - V) dt + sigma dW.
    static DiffusionSpec ou(double kappa, double theta, double sigma);
    // dV = mu V^2 dt + V dW on the whole line.
    static DiffusionSpec quad_drift(double mu);

    static DiffusionSpec generic(Coefficient mu, Coefficient sigma, StateSpace space);
    static DiffusionSpec generic(Coefficient mu, Coefficient sigma, StateSpace space,
                                 double ref_point);

    static double default_ref_point(const StateSpace& space);
};

// The Borel weight; only b^2 is ever consumed.
struct AreaWeight {
    Coefficient b_squared;
    bool is_unit = false;
    bool is_square = false;  // b^2(x) = x^2, recognized by the catalog

    double operator()(double x) const;

    static AreaWeight unit();
    static AreaWeight square();
    static AreaWeight from_b_squared(Coefficient b2);
    static AreaWeight from_expression(const std::string& b2_source);

    // Grid check of b^2 >= 0 over [lo, hi]; throws WeightZeroError when b^2
    // vanishes on more than isolated grid points.
    void validate_on(double lo, double hi, int grid_points = 201) const;
};

enum class Tail { Lower, Upper };

// int of the scale density from `from` to the chosen boundary; empty when the
// integral diverges. Builtin models answer exactly, generic specs by
// successive doubling of the truncation.
std::optional<double> scale_tail_integral(const DiffusionSpec& spec, double from,
                                          Tail which);

// s(x) = exp(-int_{x0}^x 2 mu / sigma^2), normalized so s(ref_point) = 1.
double scale_density(const DiffusionSpec& spec, double x);

// S(x) = int_{x0}^x s(y) dy; strictly increasing, S(ref_point) = 0.
double scale_function(const DiffusionSpec& spec, double x);

// m(x) = 2 / (sigma^2(x) s(x)).
double speed_density(const DiffusionSpec& spec, double x);

// m*(x) = b^2(x) m(x).
double weighted_speed_density(const DiffusionSpec& spec, const AreaWeight& w, double x);

// Diffusion of the time-changed process: drift mu/b^2, volatility sigma/b.
// Shares the scale density of the input pointwise.
DiffusionSpec time_change(const DiffusionSpec& spec, const AreaWeight& w);

// Cumulative tabulation of s and S over a working range, for modules that
// evaluate them densely. Falls through to closed forms for builtin models.
class ScaleTable {
public:
    ScaleTable(const DiffusionSpec& spec, double lo, double hi, int panels = 1024);

    double density(double x) const;   // s(x)
    double value(double x) const;     // S(x)
    double lo() const { return lo_; }
    double hi() const { return hi_; }

private:
    double interp_value(double x) const;

    const DiffusionSpec spec_;
    bool closed_form_ = false;
    double lo_ = 0.0, hi_ = 0.0, h_ = 0.0;
    std::vector<double> log_s_;  // log s at nodes
    std::vector<double> big_s_;  // S at nodes
};

}  // namespace areaflux
