#pragma once

// Explicit linear-interpolation semi-Lagrangian (LISL) baseline. The diffusion is
// split along the two columns of the rotation factorization of A; the drift rides
// on the second direction pair.

#include <array>
#include <cmath>
#include <string>

#include "fkwide/core.hpp"
#include "fkwide/interp.hpp"
#include "fkwide/kinematics.hpp"
#include "fkwide/parallel.hpp"

namespace fkwide {

enum class LislBoundary {
    Exact,          // exterior stencil points take the exact solution
    Extrapolation,  // exterior stencil points use the nearest boundary cell's bilinear form
};

struct LislConfig {
    /// Stencil length k (absolute).
    double k = 0.0;
    /// Time weighting; only the explicit scheme (0) is implemented.
    double theta = 0.0;
    LislBoundary boundary = LislBoundary::Exact;

    static constexpr int directions = 2;

    /// k = factor * sqrt(h) with h the larger of the two mesh widths.
    static LislConfig for_grid(const Grid& grid, LislBoundary mode, double k_factor = 1.0) {
        LislConfig c;
        c.k = k_factor * std::sqrt(std::max(grid.h1(), grid.h2()));
        c.boundary = mode;
        return c;
    }
};

/// Columns A_1 = (s1 cos, s2 sin), A_2 = (s1 sin, s2 cos) of the rotation factorization.
inline std::array<Point2, 2> lisl_directions(const CoefficientSample& c) {
    const double th = rotation_quantities(c.rho).theta;
    const double ct = std::cos(th), st = std::sin(th);
    return {{{c.sigma1 * ct, c.sigma2 * st}, {c.sigma1 * st, c.sigma2 * ct}}};
}

/// Directional operator L_k at `node` for any field evaluator phi(Point2) -> double.
template <class Evaluator>
double lisl_operator(Evaluator&& phi, Point2 node, const CoefficientSample& c, const LislConfig& cfg) {
    const auto dirs = lisl_directions(c);
    const double k = cfg.k, k2 = k * k;
    const double centre = phi(node);
    const Point2 a1 = dirs[0], a2 = dirs[1];
    const Point2 shift{k2 * c.b1, k2 * c.b2};
    const double d1 = phi(Point2{node.x + k * a1.x, node.y + k * a1.y}) - 2.0 * centre +
                      phi(Point2{node.x - k * a1.x, node.y - k * a1.y});
    const double d2 = phi(Point2{node.x + k * a2.x + shift.x, node.y + k * a2.y + shift.y}) - 2.0 * centre +
                      phi(Point2{node.x - k * a2.x + shift.x, node.y - k * a2.y + shift.y});
    return (d1 + d2) / (2.0 * k2);
}

struct CflReport {
    bool pass = false;
    /// max over sampled nodes of (1 - theta) dt (P/k^2 + r); pass iff <= 1.
    double worst = 0.0;
    double margin() const noexcept { return 1.0 - worst; }
};

inline double cfl_value(double dt, double k, double theta, double r, int directions = LislConfig::directions) {
    return (1.0 - theta) * dt * (directions / (k * k) + r);
}

/// Evaluates the CFL condition at every node on up to 33 evenly spaced time levels.
inline CflReport cfl_check(const ProblemSpec& problem, const Grid& grid, const LislConfig& cfg) {
    CflReport rep;
    if (!(cfg.k > 0.0)) throw ConfigError("lisl: stencil length k must be > 0");
    const int stride = std::max(1, grid.n() / 32);
    double rmax = 0.0;
    for (int n = 0; n <= grid.n(); n += stride) {
        for (int i = 0; i <= grid.m1(); ++i)
            for (int j = 0; j <= grid.m2(); ++j) rmax = std::max(rmax, problem.coefficients(grid.x(i), grid.y(j), grid.t(n)).r);
    }
    rep.worst = cfl_value(grid.dt(), cfg.k, cfg.theta, rmax);
    rep.pass = rep.worst <= 1.0;
    return rep;
}

/// Bilinear form of a clamped boundary cell, evaluated (extrapolated) at an exterior point.
/// One-based cell index i = clamp(floor((x - x0)/h1 + 1), 1, M1 - 1) over nodes x_1 = x0, ...;
/// in zero-based terms the admissible cells are 0 .. M1 - 2, so the far side extrapolates
/// from the second-to-last cell.
inline double clamped_cell_extrapolate(const SolutionField& field, const Grid& grid, Point2 p) {
    const Domain& d = grid.domain();
    const double fx = (p.x - d.x0) / grid.h1();
    const double fy = (p.y - d.y0) / grid.h2();
    const int i = std::clamp(static_cast<int>(std::floor(fx + 1.0)), 1, grid.m1() - 1) - 1;
    const int j = std::clamp(static_cast<int>(std::floor(fy + 1.0)), 1, grid.m2() - 1) - 1;
    const double wx = fx - i, wy = fy - j;
    return (1 - wx) * ((1 - wy) * field(i, j) + wy * field(i, j + 1)) +
           wx * ((1 - wy) * field(i + 1, j) + wy * field(i + 1, j + 1));
}

inline SolutionField lisl_step(const ProblemSpec& problem, const Grid& grid, const LislConfig& cfg,
                               const SolutionField& next, int n, unsigned threads = 1) {
    if (problem.boundary_kind() != BoundaryKind::Dirichlet) throw ConfigError("lisl requires a Dirichlet problem");
    if (cfg.theta != 0.0) throw ConfigError("lisl: only the explicit scheme (theta = 0) is supported");
    if (cfg.boundary == LislBoundary::Exact && !problem.exact) {
        throw ConfigError("lisl exact boundary mode needs an exact solution");
    }
    if (n < 0 || n >= grid.n()) throw ArgumentError("lisl_step: level n out of range");
    const double tn = grid.t(n), tn1 = grid.t(n + 1), dt = grid.dt();
    const Domain& dom = grid.domain();

    auto phi = [&](Point2 p) {
        if (dom.in_closure(p)) return bilinear_eval(next, grid, dom.clamp(p));
        if (cfg.boundary == LislBoundary::Exact) return (*problem.exact)(p.x, p.y, tn1);
        return clamped_cell_extrapolate(next, grid, p);
    };

    SolutionField out(grid, n);
    for (int i = 0; i <= grid.m1(); ++i) {
        out(i, 0) = problem.boundary_value(grid.x(i), grid.y(0), tn);
        out(i, grid.m2()) = problem.boundary_value(grid.x(i), grid.y(grid.m2()), tn);
    }
    for (int j = 1; j < grid.m2(); ++j) {
        out(0, j) = problem.boundary_value(grid.x(0), grid.y(j), tn);
        out(grid.m1(), j) = problem.boundary_value(grid.x(grid.m1()), grid.y(j), tn);
    }
    parallel_for(1, grid.m1(), threads, [&](int i) {
        for (int j = 1; j < grid.m2(); ++j) {
            const Point2 node = grid.node(i, j);
            const auto c = evaluate_coefficients(problem, node.x, node.y, tn1);
            const double u = next(i, j);
            out(i, j) = u + dt * (lisl_operator(phi, node, c, cfg) - c.r * u);
        }
    });
    return out;
}

}  // namespace fkwide
