#pragma once

// Error norms, convergence rates, and a Monte Carlo Feynman-Kac estimator used as an
// independent spot check of the grid schemes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <optional>
#include <string>
#include <vector>

#include "fkwide/core.hpp"
#include "fkwide/kinematics.hpp"
#include "fkwide/parallel.hpp"
#include "fkwide/schemes.hpp"

namespace fkwide {

struct ErrorNorms {
    double linf = 0.0;
    double l2 = 0.0;
};

/// Max and discrete L2 error over all nodes (boundary included) against the exact
/// solution at the field's time level.
inline ErrorNorms error_norms(const SolutionField& numeric, const ProblemSpec& problem, const Grid& grid) {
    if (!problem.exact) throw ConfigError("problem '" + problem.name + "' has no exact solution; cannot report errors");
    if (numeric.m1() != grid.m1() || numeric.m2() != grid.m2()) throw ArgumentError("error_norms: size mismatch");
    const double t = grid.t(numeric.level());
    ErrorNorms e;
    double sum = 0.0;
    for (int i = 0; i <= grid.m1(); ++i) {
        for (int j = 0; j <= grid.m2(); ++j) {
            const double d = std::abs(numeric(i, j) - (*problem.exact)(grid.x(i), grid.y(j), t));
            e.linf = std::max(e.linf, d);
            sum += d * d;
        }
    }
    e.l2 = std::sqrt(grid.h1() * grid.h2() * sum);
    return e;
}

struct ErrorReport {
    int m1 = 0;
    int m2 = 0;
    int n = 0;
    double h = 0.0;
    double err_linf = 0.0;
    double err_l2 = 0.0;
    std::optional<double> rate_linf;
    std::optional<double> rate_l2;
};

/// log(E_a / E_b) / log(h_a / h_b); absent when either error is zero.
inline std::optional<double> observed_rate(double err_a, double err_b, double h_a, double h_b) {
    if (!(err_a > 0.0) || !(err_b > 0.0)) return std::nullopt;
    return std::log(err_a / err_b) / std::log(h_a / h_b);
}

inline std::vector<ErrorReport> convergence_rates(std::vector<ErrorReport> rows) {
    if (rows.size() < 2) throw ArgumentError("convergence_rates: need at least two refinement rows");
    rows[0].rate_linf.reset();
    rows[0].rate_l2.reset();
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const auto& a = rows[k - 1];
        auto& b = rows[k];
        if (!(b.h < a.h)) throw ArgumentError("convergence_rates: mesh widths must strictly decrease");
        b.rate_linf = observed_rate(a.err_linf, b.err_linf, a.h, b.h);
        b.rate_l2 = observed_rate(a.err_l2, b.err_l2, a.h, b.h);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Monte Carlo oracle

/// Counter-based stream: SplitMix64 finalizer over (seed, stream, counter).
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_(mix(seed ^ mix(stream + 0x632BE59BD9B4E019ULL))) {}

    std::uint64_t next_u64() noexcept { return mix(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

    /// Uniform in the open interval (0, 1).
    double uniform() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    /// Pair of independent standard normals (Box-Muller).
    std::pair<double, double> normal_pair() noexcept {
        const double rad = std::sqrt(-2.0 * std::log(uniform()));
        const double ang = 2.0 * std::numbers::pi * uniform();
        return {rad * std::cos(ang), rad * std::sin(ang)};
    }

    static std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

struct OracleEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long paths = 0;
    std::uint64_t seed = 0;
};

namespace detail {

inline constexpr double kMonitorShift = 0.5826;

inline double fold_reflect(double v, double lo, double hi) {
    // Repeated mirroring; an Euler step may overshoot by more than one width.
    for (int guard = 0; guard < 64 && (v < lo || v > hi); ++guard) {
        v = v < lo ? 2.0 * lo - v : 2.0 * hi - v;
    }
    return std::clamp(v, lo, hi);
}

/// One Euler-Maruyama path of the discounted Feynman-Kac functional.
inline double oracle_path(const ProblemSpec& p, Point2 start, double t, int substeps, CounterRng& rng) {
    const Domain& d = p.domain;
    const BoundaryKind kind = p.boundary_kind();
    const double ds = (p.horizon - t) / substeps;
    const double sq = std::sqrt(ds);
    double x = start.x, y = start.y;
    double log_disc = 0.0;
    for (int k = 0; k < substeps; ++k) {
        const double s = t + k * ds;
        const auto c = evaluate_coefficients(p, x, y, s);
        const auto th = rotation_quantities(c.rho).theta;
        const double ct = std::cos(th), st = std::sin(th);
        const auto [z1, z2] = rng.normal_pair();
        const double xn = x + c.b1 * ds + c.sigma1 * (ct * z1 + st * z2) * sq;
        const double yn = y + c.b2 * ds + c.sigma2 * (st * z1 + ct * z2) * sq;
        switch (kind) {
            case BoundaryKind::Dirichlet: {
                // Discrete monitoring with the edges pulled inward by the continuity
                // correction 0.5826 sigma_n sqrt(ds); the path is paid on the true edge.
                const double sx = detail::kMonitorShift * c.sigma1 * sq, sy = detail::kMonitorShift * c.sigma2 * sq;
                const double gx0 = xn - (d.x0 + sx), gx1 = (d.xM1 - sx) - xn;
                const double gy0 = yn - (d.y0 + sy), gy1 = (d.yM2 - sy) - yn;
                const double g = std::min(std::min(gx0, gx1), std::min(gy0, gy1));
                if (g <= 0.0) {
                    Point2 hit = d.clamp({xn, yn});
                    if (g == gx0) hit.x = d.x0;
                    else if (g == gx1) hit.x = d.xM1;
                    else if (g == gy0) hit.y = d.y0;
                    else hit.y = d.yM2;
                    return std::exp(log_disc - c.r * ds) * p.boundary_value(hit.x, hit.y, s + ds);
                }
                x = xn;
                y = yn;
                break;
            }
            case BoundaryKind::Neumann:
                x = fold_reflect(xn, d.x0, d.xM1);
                y = fold_reflect(yn, d.y0, d.yM2);
                break;
            case BoundaryKind::Periodic: {
                const Point2 w = wrap({xn, yn}, d);
                x = w.x;
                y = w.y;
                break;
            }
        }
        log_disc -= c.r * ds;
    }
    return std::exp(log_disc) * p.terminal(x, y);
}

}  // namespace detail

/// Monte Carlo estimate of the solution at (x, y, t). Path k draws from stream k of
/// `seed`, so the result does not depend on the thread count.
inline OracleEstimate mc_oracle(const ProblemSpec& problem, double x, double y, double t, long paths, int substeps,
                                std::uint64_t seed, unsigned threads = 1) {
    if (paths < 1) throw ArgumentError("mc_oracle: paths must be >= 1");
    if (substeps < 1) throw ArgumentError("mc_oracle: substeps must be >= 1");
    if (!(t >= 0.0 && t < problem.horizon)) throw ArgumentError("mc_oracle: t must lie in [0, T)");
    if (!problem.domain.strictly_inside({x, y})) throw ArgumentError("mc_oracle: start point must be interior");

    std::vector<double> payoff(static_cast<std::size_t>(paths));
    const long chunk = 1024;
    const int chunks = static_cast<int>((paths + chunk - 1) / chunk);
    parallel_for(0, chunks, threads, [&](int ck) {
        const long lo = ck * chunk, hi = std::min(paths, lo + chunk);
        for (long k = lo; k < hi; ++k) {
            CounterRng rng(seed, static_cast<std::uint64_t>(k));
            payoff[static_cast<std::size_t>(k)] = detail::oracle_path(problem, {x, y}, t, substeps, rng);
        }
    });

    // Welford in path order.
    double mean = 0.0, m2 = 0.0;
    long count = 0;
    for (double v : payoff) {
        ++count;
        const double delta = v - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (v - mean);
    }
    OracleEstimate est;
    est.mean = mean;
    est.paths = paths;
    est.seed = seed;
    est.std_error = paths > 1 ? std::sqrt(m2 / static_cast<double>(paths - 1) / static_cast<double>(paths)) : 0.0;
    return est;
}

}  // namespace fkwide
