#pragma once

#include <optional>
#include <vector>

#include "areaflux/diffusion.hpp"

namespace areaflux::om {

enum class Verdict { Finite, Infinite, Declared };

// Whether the scale function stays bounded toward the upper boundary,
// together with the truncation evidence that produced the answer.
struct SFinitenessVerdict {
    Verdict verdict = Verdict::Infinite;
    bool finite = false;
    std::vector<double> evidence;  // tail integrals at successive truncations
};

// Surplus diffusion with a state-dependent bankruptcy rate active below 0.
struct OmegaProblem {
    DiffusionSpec spec;
    AreaWeight omega;  // rate; must vanish on x > 0, nonincreasing on x <= 0
    double v0 = 0.0;
    std::optional<bool> declared_s_finite;

    void validate() const;
};

SFinitenessVerdict classify_scale_tail(const DiffusionSpec& spec);

// E_{v0}[exp(-lambda * total exposure)], exposure = int_0^inf omega(V)1{V<0}ds.
double occupation_area_laplace(const OmegaProblem& p, double lambda);

// psi(v0) = 1 - E[exp(-exposure)]; the rate already sits inside the exposure,
// so the transform is taken at unit argument.
double bankruptcy_probability(const OmegaProblem& p);

// E_{v0}[exp(-lambda tau)] for the bankruptcy arrival time tau driven by the
// rate omega. Experimental: solved as the resolvent equation
//   (1/2) sigma^2 u'' + mu u' - (lambda + omega) u = -omega
// with bounded-solution Green construction.
double bankruptcy_time_laplace(const OmegaProblem& p, double lambda);

}  // namespace areaflux::om
