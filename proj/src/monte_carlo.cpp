#include "areaflux/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "areaflux/errors.hpp"

namespace areaflux::mc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// One independent stream per (seed, path index); parallel and serial runs
// consume identical draws.
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t path)
        : gen_(splitmix64(splitmix64(seed) ^ splitmix64(path + 1))) {}

    double gauss() { return norm_(gen_); }
    double uniform() { return unif_(gen_); }

private:
    std::mt19937_64 gen_;
    std::normal_distribution<double> norm_;
    std::uniform_real_distribution<double> unif_;
};

// Probability that the bridge between consecutive Euler points crossed the
// barrier even though both endpoints sit on the same side. Without this test
// exits are detected late and hitting-time moments carry an O(sqrt(dt)) bias.
double bridge_crossing_prob(double from, double to, double barrier, double sigma,
                            double dt) {
    const double var = sigma * sigma * dt;
    if (var <= 0.0) return 0.0;
    const double e = -2.0 * (from - barrier) * (to - barrier) / var;
    return e < -700.0 ? 0.0 : std::exp(e);
}

int resolved_threads(const McConfig& cfg) {
    if (cfg.threads > 0) return cfg.threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

template <typename Fn>
void parallel_paths(long paths, int threads, const Fn& fn) {
    if (threads <= 1 || paths < 2 * threads) {
        for (long i = 0; i < paths; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    const long chunk = (paths + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const long lo = t * chunk;
        const long hi = std::min(paths, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] {
            for (long i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

// Fixed-shape pairwise reduction; the result depends only on the element
// order, not on the thread count.
double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 8) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

double pairwise_sum(const std::vector<double>& v) {
    return v.empty() ? 0.0 : pairwise_sum(v, 0, v.size());
}

McEstimate finalize(const std::vector<double>& vals, McDiagnostics diag) {
    McEstimate e;
    e.paths_used = static_cast<long>(vals.size());
    e.diagnostics = diag;
    if (vals.empty()) return e;
    const double n = static_cast<double>(vals.size());
    e.mean = pairwise_sum(vals) / n;
    if (vals.size() > 1) {
        std::vector<double> sq(vals.size());
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double d = vals[i] - e.mean;
            sq[i] = d * d;
        }
        e.std_error = std::sqrt(pairwise_sum(sq) / (n * (n - 1.0)));
    }
    return e;
}

struct ExitSample {
    double area = 0.0;
    fp::Side side = fp::Side::Lower;
    bool censored = false;
};

ExitSample run_exit_path(const fp::ExitProblem& p, const McConfig& cfg, double horizon,
                         std::uint64_t path) {
    PathRng rng(cfg.seed, path);
    const double sqdt = std::sqrt(cfg.dt);
    double v = p.v0;
    double b2 = p.weight(v);
    double area = 0.0;
    ExitSample out;
    for (double t = 0.0; t < horizon; t += cfg.dt) {
        const double sig = p.spec.sigma(v);
        const double vn = v + p.spec.mu(v) * cfg.dt + sig * sqdt * rng.gauss();
        const double b2n = p.weight(vn);
        if (vn <= p.a || vn >= p.c) {
            const double bound = vn <= p.a ? p.a : p.c;
            const double theta =
                std::clamp((bound - v) / (vn - v), 0.0, 1.0);
            area += 0.5 * (b2 + p.weight(bound)) * theta * cfg.dt;
            out.area = area;
            out.side = vn <= p.a ? fp::Side::Lower : fp::Side::Upper;
            return out;
        }
        const double pl = bridge_crossing_prob(v, vn, p.a, sig, cfg.dt);
        const double pu = bridge_crossing_prob(v, vn, p.c, sig, cfg.dt);
        if (pl + pu > 1e-14) {
            const double u = rng.uniform();
            if (u < pl + pu) {
                area += 0.5 * (b2 + b2n) * 0.5 * cfg.dt;
                out.area = area;
                out.side = u < pl ? fp::Side::Lower : fp::Side::Upper;
                return out;
            }
        }
        area += 0.5 * (b2 + b2n) * cfg.dt;
        v = vn;
        b2 = b2n;
    }
    out.area = area;
    out.censored = true;
    return out;
}

double exit_payoff(const ExitFunctional& f, const ExitSample& s) {
    return std::visit(
        [&s](const auto& g) -> double {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, ExpNegLambdaArea>) {
                if (s.censored || s.side != g.side) return 0.0;
                return std::exp(-g.lambda * s.area);
            } else if constexpr (std::is_same_v<T, AreaMoment>) {
                return std::pow(s.area, g.n);
            } else {
                return (!s.censored && s.side == g.side) ? 1.0 : 0.0;
            }
        },
        f);
}

}  // namespace

void McConfig::validate() const {
    if (paths < 100) throw DomainError("McConfig.paths must be at least 100");
    if (!(dt > 0.0)) throw DomainError("McConfig.dt must be positive");
    if (threads < 0) throw DomainError("McConfig.threads must be nonnegative");
}

McEstimate simulate_exit_area(const fp::ExitProblem& p, const ExitFunctional& f,
                              const McConfig& cfg) {
    cfg.validate();
    p.validate();
    const double horizon = cfg.horizon > 0.0 ? cfg.horizon : 1e4;
    std::vector<double> vals(static_cast<std::size_t>(cfg.paths));
    std::vector<ExitSample> samples(static_cast<std::size_t>(cfg.paths));
    parallel_paths(cfg.paths, resolved_threads(cfg), [&](long i) {
        samples[static_cast<std::size_t>(i)] =
            run_exit_path(p, cfg, horizon, static_cast<std::uint64_t>(i));
    });
    McDiagnostics diag;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const ExitSample& s = samples[i];
        if (s.censored)
            ++diag.censored;
        else if (s.side == fp::Side::Lower)
            ++diag.lower_hits;
        else
            ++diag.upper_hits;
        vals[i] = exit_payoff(f, s);
    }
    return finalize(vals, diag);
}

std::vector<double> sample_exit_areas(const fp::ExitProblem& p, const McConfig& cfg) {
    cfg.validate();
    p.validate();
    const double horizon = cfg.horizon > 0.0 ? cfg.horizon : 1e4;
    std::vector<ExitSample> samples(static_cast<std::size_t>(cfg.paths));
    parallel_paths(cfg.paths, resolved_threads(cfg), [&](long i) {
        samples[static_cast<std::size_t>(i)] =
            run_exit_path(p, cfg, horizon, static_cast<std::uint64_t>(i));
    });
    std::vector<double> areas;
    areas.reserve(samples.size());
    for (const ExitSample& s : samples)
        if (!s.censored) areas.push_back(s.area);
    return areas;
}

namespace {

// Exposure of one path up to the horizon. When sigma vanishes inside the
// state space (the quadratic-drift catalog entry) the path is simulated in
// the time-changed coordinates, where the volatility is constant and the
// exposure integrand picks up the clock density 1/b^2.
double run_exposure_path(const om::OmegaProblem& p, const DiffusionSpec& base,
                         bool time_changed, double escape, const McConfig& cfg,
                         double horizon, std::uint64_t path) {
    PathRng rng(cfg.seed, path);
    const double sqdt = std::sqrt(cfg.dt);
    double v = p.v0;
    double exposure = 0.0;
    for (double t = 0.0; t < horizon; t += cfg.dt) {
        const double vn = v + base.mu(v) * cfg.dt + base.sigma(v) * sqdt * rng.gauss();
        const double mid = 0.5 * (v + vn);
        if (mid < 0.0) {
            double rate = p.omega(mid);
            if (time_changed) rate /= std::max(mid * mid, 1e-12);
            exposure += rate * cfg.dt;
            if (exposure > 30.0) return exposure;
        }
        // above this level the path returns to 0 with probability < 1e-5 and
        // can accumulate nothing more
        if (vn >= escape) return exposure;
        v = vn;
    }
    return exposure;
}

// Smallest level whose scale-tail return probability to 0 is below 1e-5;
// +inf when the upper tail diverges (the path always returns).
double escape_level(const DiffusionSpec& base) {
    const auto tail0 = scale_tail_integral(base, 0.0, Tail::Upper);
    if (!tail0) return std::numeric_limits<double>::infinity();
    for (double x = 1.0; x < 1e6; x *= 2.0) {
        const auto t = scale_tail_integral(base, x, Tail::Upper);
        if (t && *t <= 1e-5 * *tail0) return x;
    }
    return std::numeric_limits<double>::infinity();
}

}  // namespace

McEstimate simulate_occupation(const om::OmegaProblem& p, double lambda,
                               const McConfig& cfg) {
    cfg.validate();
    p.validate();
    double horizon = cfg.horizon > 0.0 ? cfg.horizon : 8.0;
    const bool time_changed = p.spec.model == Model::QuadDrift;
    const DiffusionSpec base =
        time_changed ? DiffusionSpec::bm_drift(p.spec.p1) : p.spec;
    const double escape = escape_level(base);
    McEstimate est;
    for (int pass = 0;; ++pass) {
        std::vector<double> vals(static_cast<std::size_t>(cfg.paths));
        parallel_paths(cfg.paths, resolved_threads(cfg), [&](long i) {
            vals[static_cast<std::size_t>(i)] = std::exp(
                -lambda * run_exposure_path(p, base, time_changed, escape, cfg,
                                            horizon,
                                            static_cast<std::uint64_t>(i)));
        });
        McEstimate next = finalize(vals, McDiagnostics{});
        next.diagnostics.horizon_doublings = pass;
        if (pass > 0) {
            const double move = std::abs(next.mean - est.mean);
            if (move <= std::max(next.std_error, 1e-12)) {
                est = next;
                break;
            }
            if (pass >= 7) {
                next.diagnostics.truncation_bias_warning = true;
                est = next;
                break;
            }
        }
        est = next;
        horizon *= 2.0;
    }
    return est;
}

McEstimate simulate_drawdown(const dd::DrawdownProblem& p, const McConfig& cfg) {
    cfg.validate();
    p.validate();
    const double horizon = cfg.horizon > 0.0 ? cfg.horizon : 1e4;
    std::vector<double> vals(static_cast<std::size_t>(cfg.paths));
    std::vector<char> censored(static_cast<std::size_t>(cfg.paths), 0);
    parallel_paths(cfg.paths, resolved_threads(cfg), [&](long i) {
        PathRng rng(cfg.seed, static_cast<std::uint64_t>(i));
        const double sqdt = std::sqrt(cfg.dt);
        double v = p.v0;
        double peak = p.v0;
        double b2 = p.weight(v);
        double area = 0.0;
        bool hit = false;
        for (double t = 0.0; t < horizon; t += cfg.dt) {
            const double sig = p.spec.sigma(v);
            const double vn = v + p.spec.mu(v) * cfg.dt + sig * sqdt * rng.gauss();
            const double b2n = p.weight(vn);
            const double gap_old = peak - v;
            const double gap_new = peak - vn;
            if (gap_new >= p.a_units) {
                const double theta = std::clamp(
                    (p.a_units - gap_old) / (gap_new - gap_old), 0.0, 1.0);
                area += 0.5 * (b2 + b2n) * theta * cfg.dt;
                hit = true;
                break;
            }
            const double pb =
                bridge_crossing_prob(v, vn, peak - p.a_units, sig, cfg.dt);
            if (pb > 1e-14 && rng.uniform() < pb) {
                area += 0.5 * (b2 + b2n) * 0.5 * cfg.dt;
                hit = true;
                break;
            }
            area += 0.5 * (b2 + b2n) * cfg.dt;
            v = vn;
            b2 = b2n;
            peak = std::max(peak, vn);
        }
        if (!hit) censored[static_cast<std::size_t>(i)] = 1;
        vals[static_cast<std::size_t>(i)] =
            std::exp(-p.alpha * (peak - p.v0) - p.beta * area);
    });
    McDiagnostics diag;
    for (char c : censored) diag.censored += c;
    return finalize(vals, diag);
}

McEstimate simulate_tax_ruin(const dd::TaxModel& m, const AreaWeight& w,
                             const McConfig& cfg) {
    cfg.validate();
    m.validate();
    const double horizon = cfg.horizon > 0.0 ? cfg.horizon : 1e4;
    std::vector<double> vals(static_cast<std::size_t>(cfg.paths));
    std::vector<char> censored(static_cast<std::size_t>(cfg.paths), 0);
    const double taxed0 = m.contour(m.s) - m.a;
    parallel_paths(cfg.paths, resolved_threads(cfg), [&](long i) {
        PathRng rng(cfg.seed, static_cast<std::uint64_t>(i));
        const double sqdt = std::sqrt(cfg.dt);
        double v = m.v0;
        double peak = m.s;
        // tax paid so far: int_{v0}^{peak} gamma, accumulated at each new peak
        double taxed = taxed0;
        double b2 = w(v);
        double area = 0.0;
        bool ruined = false;
        for (double t = 0.0; t < horizon; t += cfg.dt) {
            const double sig = m.spec.sigma(v);
            const double vn = v + m.spec.mu(v) * cfg.dt + sig * sqdt * rng.gauss();
            const double b2n = w(vn);
            // ruin of U = V - taxed happens when V falls to a + taxed
            const double barrier = m.a + taxed;
            if (vn <= barrier) {
                const double theta =
                    std::clamp((v - barrier) / (v - vn), 0.0, 1.0);
                area += 0.5 * (b2 + b2n) * theta * cfg.dt;
                ruined = true;
                break;
            }
            const double pb = bridge_crossing_prob(v, vn, barrier, sig, cfg.dt);
            if (pb > 1e-14 && rng.uniform() < pb) {
                area += 0.5 * (b2 + b2n) * 0.5 * cfg.dt;
                ruined = true;
                break;
            }
            area += 0.5 * (b2 + b2n) * cfg.dt;
            v = vn;
            b2 = b2n;
            if (vn > peak) {
                taxed += 0.5 * (m.gamma(peak) + m.gamma(vn)) * (vn - peak);
                peak = vn;
            }
        }
        if (!ruined) censored[static_cast<std::size_t>(i)] = 1;
        vals[static_cast<std::size_t>(i)] = area;
    });
    McDiagnostics diag;
    for (char c : censored) diag.censored += c;
    return finalize(vals, diag);
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty())
        throw DomainError("ks_two_sample requires nonempty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t ia = 0, ib = 0;
    double d = 0.0;
    while (ia < a.size() && ib < b.size()) {
        const double x = std::min(a[ia], b[ib]);
        while (ia < a.size() && a[ia] <= x) ++ia;
        while (ib < b.size() && b[ib] <= x) ++ib;
        d = std::max(d, std::abs(static_cast<double>(ia) / na -
                                 static_cast<double>(ib) / nb));
    }
    return d;
}

double ks_critical_value(std::size_t n, std::size_t m, double significance) {
    if (n == 0 || m == 0 || !(significance > 0.0) || !(significance < 1.0))
        throw DomainError("ks_critical_value arguments out of range");
    const double c = std::sqrt(-0.5 * std::log(significance / 2.0));
    const double nn = static_cast<double>(n);
    const double mm = static_cast<double>(m);
    return c * std::sqrt((nn + mm) / (nn * mm));
}

}  // namespace areaflux::mc
