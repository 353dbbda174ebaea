#pragma once

// Four-branch Rademacher trajectories, their exit (stopping) times against the
// rectangle, and the stopping-time adapted branch probabilities.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "fkwide/core.hpp"

namespace fkwide {

/// theta = asin(rho)/2 with alpha = sin + cos, beta = sin - cos.
struct RotationQuantities {
    double theta = 0.0;
    double alpha = 1.0;
    double beta = -1.0;
};

inline RotationQuantities rotation_quantities(double rho) {
    if (!(std::abs(rho) <= 1.0)) throw ArgumentError("rotation_quantities: |rho| must be <= 1");
    RotationQuantities q;
    q.theta = 0.5 * std::asin(rho);
    const double s = std::sin(q.theta), c = std::cos(q.theta);
    q.alpha = s + c;
    q.beta = s - c;
    return q;
}

/// position(s) = origin + drift * s + spread * sqrt(s) for elapsed time s >= 0.
struct BranchTrajectory {
    Point2 origin;
    Point2 drift;
    Point2 spread;
    int branch_index = 1;

    Point2 position(double s) const noexcept {
        const double u = std::sqrt(s);
        return {origin.x + drift.x * s + spread.x * u, origin.y + drift.y * s + spread.y * u};
    }
};

/// Branch k = 1..4 spreads, in order: (+a s1, +a s2), (-b s1, +b s2), (-a s1, -a s2), (+b s1, -b s2).
inline std::array<BranchTrajectory, 4> branch_trajectories(Point2 node, const CoefficientSample& c) {
    validate(c);
    const auto rq = rotation_quantities(c.rho);
    const double a = rq.alpha, b = rq.beta;
    const Point2 drift{c.b1, c.b2};
    return {{
        {node, drift, {a * c.sigma1, a * c.sigma2}, 1},
        {node, drift, {-b * c.sigma1, b * c.sigma2}, 2},
        {node, drift, {-a * c.sigma1, -a * c.sigma2}, 3},
        {node, drift, {b * c.sigma1, -b * c.sigma2}, 4},
    }};
}

/// Proposed endpoints after a full step dt (no stopping).
inline std::array<Point2, 4> proposed_endpoints(Point2 node, const CoefficientSample& c, double dt) {
    const auto traj = branch_trajectories(node, c);
    return {traj[0].position(dt), traj[1].position(dt), traj[2].position(dt), traj[3].position(dt)};
}

struct ExitResult {
    double tauhat = 0.0;
    Point2 endpoint;
    bool exited = false;
};

namespace detail {

/// Smallest root u in (0, umax] of a u^2 + b u + c = 0, or +inf.
inline double smallest_positive_root(double a, double b, double c, double umax) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    double best = inf;
    auto take = [&](double u) {
        if (u > 0.0 && u <= umax && u < best) best = u;
    };
    const double scale = std::max({std::abs(a) * umax * umax, std::abs(b) * umax, std::abs(c)});
    if (scale == 0.0) return inf;
    if (std::abs(a) * umax * umax <= 1e-300 + 1e-15 * scale) {
        // Linear in u.
        if (b != 0.0) take(-c / b);
        return best;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
        // Grazing contact lost to rounding: accept the vertex when it touches.
        const double uv = -b / (2.0 * a);
        const double gv = (a * uv + b) * uv + c;
        if (std::abs(gv) <= 1e-14 * scale) take(uv);
        return best;
    }
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (b + std::copysign(sq, b));
    if (q != 0.0) {
        take(q / a);
        take(c / q);
    }
    return best;
}

inline double bisect_first_crossing(const BranchTrajectory& traj, const Domain& d, double lo, double hi,
                                    int iterations = 60) {
    auto outside = [&](double s) {
        const Point2 p = traj.position(s);
        return p.x <= d.x0 || p.x >= d.xM1 || p.y <= d.y0 || p.y >= d.yM2;
    };
    for (int k = 0; k < iterations; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (outside(mid)) hi = mid; else lo = mid;
    }
    return hi;
}

inline ExitResult snapped_exit(const BranchTrajectory& traj, const Domain& d, double s, int axis, double edge) {
    ExitResult res;
    res.tauhat = s;
    res.exited = true;
    Point2 p = traj.position(s);
    if (axis == 0) {
        p.x = edge;
        p.y = std::clamp(p.y, d.y0, d.yM2);
    } else {
        p.y = edge;
        p.x = std::clamp(p.x, d.x0, d.xM1);
    }
    res.endpoint = p;
    return res;
}

/// Edge nearest to (or beyond) p: returns {axis, edge coordinate}.
inline std::pair<int, double> nearest_edge(Point2 p, const Domain& d) {
    const double dist[4] = {p.x - d.x0, d.xM1 - p.x, p.y - d.y0, d.yM2 - p.y};
    int k = 0;
    for (int m = 1; m < 4; ++m) {
        if (dist[m] < dist[k]) k = m;
    }
    const double edges[4] = {d.x0, d.xM1, d.y0, d.yM2};
    return {k / 2, edges[k]};
}

}  // namespace detail

/// First time s in (0, dt] at which the trajectory touches the boundary of the domain.
/// Exited endpoints are snapped onto the crossed edge.
inline ExitResult exit_time(const BranchTrajectory& traj, const Domain& d, double dt) {
    if (!(dt > 0.0)) throw ArgumentError("exit_time: dt must be > 0");
    if (!d.in_closure(traj.origin)) throw ArgumentError("exit_time: origin outside the closed domain");

    // With u = sqrt(s) each edge gives drift*u^2 + spread*u + (origin - edge) = 0.
    const double umax = std::sqrt(dt);
    const double o[2] = {traj.origin.x, traj.origin.y};
    const double b[2] = {traj.drift.x, traj.drift.y};
    const double c[2] = {traj.spread.x, traj.spread.y};
    const double lo[2] = {d.x0, d.y0};
    const double hi[2] = {d.xM1, d.yM2};

    double u_axis[2];
    double edge[2];
    for (int ax = 0; ax < 2; ++ax) {
        const double ul = detail::smallest_positive_root(b[ax], c[ax], o[ax] - lo[ax], umax);
        const double uh = detail::smallest_positive_root(b[ax], c[ax], o[ax] - hi[ax], umax);
        u_axis[ax] = std::min(ul, uh);
        edge[ax] = ul <= uh ? lo[ax] : hi[ax];
    }

    if (!std::isfinite(u_axis[0]) && !std::isfinite(u_axis[1])) {
        const Point2 end = traj.position(dt);
        if (d.strictly_inside(end)) return {dt, end, false};
        // Root lost to rounding (touch at or just before dt).
        const double s = detail::bisect_first_crossing(traj, d, 0.0, dt);
        const auto [axis, e] = detail::nearest_edge(traj.position(s), d);
        return detail::snapped_exit(traj, d, s, axis, e);
    }

    // Ties within 1e-14 go to the x crossing.
    const int ax = u_axis[0] <= u_axis[1] + 1e-14 ? 0 : 1;
    const double u = u_axis[ax];
    double s = u >= umax ? dt : std::min(u * u, dt);

    const double resid = (b[ax] * u + c[ax]) * u + (o[ax] - edge[ax]);
    if (std::abs(resid) > 1e-10) {
        s = detail::bisect_first_crossing(traj, d, 0.0, s);
        const auto [axis, e] = detail::nearest_edge(traj.position(s), d);
        return detail::snapped_exit(traj, d, s, axis, e);
    }
    return detail::snapped_exit(traj, d, s, ax, edge[ax]);
}

struct BranchSet {
    std::array<BranchTrajectory, 4> trajectories;
    std::array<Point2, 4> endpoints;
    std::array<double, 4> tauhat{};
    std::array<bool, 4> exited{};
    RotationQuantities rotation;

    int exit_count() const noexcept {
        return static_cast<int>(exited[0]) + exited[1] + exited[2] + exited[3];
    }
};

inline BranchSet branch_set(Point2 node, const CoefficientSample& coeffs, const Domain& d, double dt) {
    BranchSet set;
    set.trajectories = branch_trajectories(node, coeffs);
    set.rotation = rotation_quantities(coeffs.rho);
    for (int k = 0; k < 4; ++k) {
        const ExitResult e = exit_time(set.trajectories[k], d, dt);
        set.tauhat[k] = e.tauhat;
        set.endpoints[k] = e.endpoint;
        set.exited[k] = e.exited;
    }
    return set;
}

struct WeightVector {
    std::array<double, 4> omega{};
};

/// Stopping-time adapted probabilities, evaluated through s_k = sqrt(tauhat_k).
inline WeightVector branch_weights(const std::array<double, 4>& tauhat) {
    for (double t : tauhat) {
        if (!(t > 0.0)) throw ArgumentError("branch_weights: every tauhat must be > 0");
    }
    const double s1 = std::sqrt(tauhat[0]), s2 = std::sqrt(tauhat[1]);
    const double s3 = std::sqrt(tauhat[2]), s4 = std::sqrt(tauhat[3]);
    const double cross = s1 * s3 + s2 * s4;
    const double d13 = (s1 + s3) * cross;
    const double d24 = (s2 + s4) * cross;
    WeightVector w;
    w.omega[0] = s2 * s3 * s4 / d13;
    w.omega[1] = s1 * s3 * s4 / d24;
    w.omega[2] = s1 * s2 * s4 / d13;
    w.omega[3] = s1 * s2 * s3 / d24;
    return w;
}

/// All four branches stopped together at the earliest exit.
struct UniformStop {
    double tauhat = 0.0;
    std::array<Point2, 4> endpoints;
    std::array<bool, 4> on_boundary{};
    /// Branch attaining the minimum (0-based).
    int stopping_branch = -1;

    bool stopped_early(double dt) const noexcept { return tauhat < dt; }
};

inline UniformStop uniform_stop(const BranchSet& set, const Domain& d) {
    UniformStop u;
    int kmin = 0;
    for (int k = 1; k < 4; ++k) {
        if (set.tauhat[k] < set.tauhat[kmin]) kmin = k;
    }
    u.tauhat = set.tauhat[kmin];
    u.stopping_branch = set.exited[kmin] ? kmin : -1;
    for (int k = 0; k < 4; ++k) {
        if (set.tauhat[k] == u.tauhat) {
            u.endpoints[k] = set.endpoints[k];
            u.on_boundary[k] = set.exited[k];
        } else {
            u.endpoints[k] = d.clamp(set.trajectories[k].position(u.tauhat));
            u.on_boundary[k] = false;
        }
    }
    return u;
}

}  // namespace fkwide
