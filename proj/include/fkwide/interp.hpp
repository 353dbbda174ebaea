#pragma once

// Positivity-preserving bilinear (space) and trilinear (space-time) interpolation,
// as evaluators and as explicit stencils for implicit assembly.

#include <array>
#include <cmath>
#include <string>

#include "fkwide/core.hpp"

namespace fkwide {

enum class StencilLevel {
    Current,   // t_n
    Next,      // t_{n+1}
    Boundary,  // Dirichlet node value f_b(point, time)
};

struct StencilEntry {
    int i = 0;
    int j = 0;
    StencilLevel level = StencilLevel::Next;
    double weight = 0.0;
    // Node coordinates and the time at which the entry is taken.
    Point2 point;
    double time = 0.0;
};

/// Lower-left corner of the cell owning a point along one axis, plus the local weight.
struct CellCoordinate {
    int index = 0;
    double weight = 0.0;  // fraction towards index + 1
};

namespace detail {

// A fractional index that is exactly an integer k belongs to cell k - 1.
inline CellCoordinate locate(double frac, int cells) {
    int i = static_cast<int>(std::ceil(frac)) - 1;
    i = std::clamp(i, 0, cells - 1);
    return {i, std::clamp(frac - i, 0.0, 1.0)};
}

inline void require_in_closure(const Grid& grid, Point2 p) {
    if (!grid.domain().in_closure(p)) {
        throw DomainError("interpolation point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                          ") outside the closed domain");
    }
}

}  // namespace detail

inline std::array<StencilEntry, 4> bilinear_stencil(const Grid& grid, Point2 p) {
    detail::require_in_closure(grid, p);
    const Domain& d = grid.domain();
    const auto cx = detail::locate((p.x - d.x0) / grid.h1(), grid.m1());
    const auto cy = detail::locate((p.y - d.y0) / grid.h2(), grid.m2());
    const double wx = cx.weight, wy = cy.weight;
    const int i = cx.index, j = cy.index;
    std::array<StencilEntry, 4> s;
    s[0] = {i, j, StencilLevel::Next, (1 - wx) * (1 - wy), grid.node(i, j), 0.0};
    s[1] = {i + 1, j, StencilLevel::Next, wx * (1 - wy), grid.node(i + 1, j), 0.0};
    s[2] = {i, j + 1, StencilLevel::Next, (1 - wx) * wy, grid.node(i, j + 1), 0.0};
    s[3] = {i + 1, j + 1, StencilLevel::Next, wx * wy, grid.node(i + 1, j + 1), 0.0};
    return s;
}

/// Bilinear interpolation of a nodal field at a point of the closed domain.
inline double bilinear_eval(const SolutionField& field, const Grid& grid, Point2 p) {
    detail::require_in_closure(grid, p);
    const Domain& d = grid.domain();
    const auto cx = detail::locate((p.x - d.x0) / grid.h1(), grid.m1());
    const auto cy = detail::locate((p.y - d.y0) / grid.h2(), grid.m2());
    const int i = cx.index, j = cy.index;
    const double wx = cx.weight, wy = cy.weight;
    return (1 - wx) * ((1 - wy) * field(i, j) + wy * field(i, j + 1)) +
           wx * ((1 - wy) * field(i + 1, j) + wy * field(i + 1, j + 1));
}

/// Space-time stencil with time weight alpha at level n and 1 - alpha at level n + 1.
/// With `dirichlet_nodes`, corners on the boundary become Boundary entries.
inline std::array<StencilEntry, 8> trilinear_stencil_weighted(const Grid& grid, Point2 p, double alpha, int n,
                                                              bool dirichlet_nodes) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("trilinear_stencil: alpha must lie in [0, 1]");
    const double tn = grid.t(n), tn1 = grid.t(n + 1);
    const auto spatial = bilinear_stencil(grid, p);
    std::array<StencilEntry, 8> s;
    for (int k = 0; k < 4; ++k) {
        for (int lv = 0; lv < 2; ++lv) {
            StencilEntry e = spatial[k];
            const bool current = lv == 0;
            e.weight *= current ? alpha : 1.0 - alpha;
            e.time = current ? tn : tn1;
            e.level = current ? StencilLevel::Current : StencilLevel::Next;
            if (dirichlet_nodes && grid.is_boundary_node(e.i, e.j)) e.level = StencilLevel::Boundary;
            s[2 * k + lv] = e;
        }
    }
    return s;
}

/// Space-time stencil at (p, tau), t_n < tau < t_{n+1}: bilinear weights at both levels
/// scaled by alpha = (t_{n+1} - tau)/dt at level n and 1 - alpha at level n + 1.
inline std::array<StencilEntry, 8> trilinear_stencil(const Grid& grid, Point2 p, double tau, int n,
                                                     bool dirichlet_nodes) {
    const double tn = grid.t(n), tn1 = grid.t(n + 1);
    if (!(tau > tn && tau < tn1)) {
        throw ArgumentError("trilinear_stencil: tau must lie strictly between t_n and t_{n+1}");
    }
    return trilinear_stencil_weighted(grid, p, (tn1 - tau) / grid.dt(), n, dirichlet_nodes);
}

}  // namespace fkwide
