#pragma once

// One-step engines of the expectation-based schemes:
//   step_nonuniform  - Dirichlet, each branch stops at its own exit time (explicit)
//   step_uniform     - Dirichlet, all branches stop at the earliest exit (implicit near the boundary)
//   step_reflective  - homogeneous Neumann via specular reflection (explicit)
//   step_periodic    - periodic wrapping (explicit)
// Each step maps level n + 1 to level n.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "fkwide/core.hpp"
#include "fkwide/interp.hpp"
#include "fkwide/kinematics.hpp"
#include "fkwide/parallel.hpp"
#include "fkwide/sparse.hpp"

namespace fkwide {

struct StepReport {
    int level = 0;
    long boundary_stopped_branches = 0;
    long implicit_nodes = 0;
    int solver_iterations = 0;
    double residual = 0.0;
    // Uniform scheme only: structure of the assembled matrix.
    bool m_matrix_ok = true;
    double worst_offdiag_ratio = 0.0;
    // Rows whose normalized off-diagonal mass exceeds 3/4 * alpha / (1 + r tauhat).
    long offdiag_bound_violations = 0;
};

struct StepOptions {
    unsigned threads = 1;
    double solver_tol = 1e-12;
    int solver_max_iters = 0;
};

namespace detail {

inline void require_boundary(const ProblemSpec& p, BoundaryKind kind, const char* scheme) {
    if (p.boundary_kind() != kind) {
        throw ConfigError(std::string(scheme) + " requires a " + std::string(to_string(kind)) +
                          " problem, got '" + p.name + "' (" + std::string(to_string(p.boundary_kind())) + ")");
    }
}

inline void require_level(const Grid& grid, const SolutionField& next, int n) {
    if (n < 0 || n >= grid.n()) throw ArgumentError("step: level n out of range");
    if (next.m1() != grid.m1() || next.m2() != grid.m2()) throw ArgumentError("step: field/grid size mismatch");
}

inline void fill_dirichlet_edges(const ProblemSpec& p, const Grid& grid, SolutionField& f, double t) {
    for (int i = 0; i <= grid.m1(); ++i) {
        f(i, 0) = p.boundary_value(grid.x(i), grid.y(0), t);
        f(i, grid.m2()) = p.boundary_value(grid.x(i), grid.y(grid.m2()), t);
    }
    for (int j = 1; j < grid.m2(); ++j) {
        f(0, j) = p.boundary_value(grid.x(0), grid.y(j), t);
        f(grid.m1(), j) = p.boundary_value(grid.x(grid.m1()), grid.y(j), t);
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Non-uniform stopping

/// Value of one interior node under the non-uniform stopping rule.
inline double nonuniform_node_update(const ProblemSpec& problem, const Grid& grid, const SolutionField& next,
                                     int n, int i, int j, int* exits = nullptr) {
    const double tn = grid.t(n);
    const Point2 node = grid.node(i, j);
    const auto c = evaluate_coefficients(problem, node.x, node.y, tn);
    const auto set = branch_set(node, c, grid.domain(), grid.dt());
    const auto w = branch_weights(set.tauhat);
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
        const Point2 e = set.endpoints[k];
        const double u = set.exited[k] ? problem.boundary_value(e.x, e.y, tn + set.tauhat[k])
                                       : bilinear_eval(next, grid, e);
        acc += w.omega[k] / (1.0 + c.r * set.tauhat[k]) * u;
    }
    if (exits != nullptr) *exits = set.exit_count();
    return acc;
}

inline SolutionField step_nonuniform(const ProblemSpec& problem, const Grid& grid, const SolutionField& next, int n,
                                     StepReport* report = nullptr, const StepOptions& opt = {}) {
    detail::require_boundary(problem, BoundaryKind::Dirichlet, "non-uniform stopping scheme");
    detail::require_level(grid, next, n);
    SolutionField out(grid, n);
    detail::fill_dirichlet_edges(problem, grid, out, grid.t(n));
    std::vector<long> exits(static_cast<std::size_t>(grid.m1() + 1), 0);
    parallel_for(1, grid.m1(), opt.threads, [&](int i) {
        for (int j = 1; j < grid.m2(); ++j) {
            int e = 0;
            out(i, j) = nonuniform_node_update(problem, grid, next, n, i, j, &e);
            exits[static_cast<std::size_t>(i)] += e;
        }
    });
    if (report != nullptr) {
        *report = StepReport{};
        report->level = n;
        for (long e : exits) report->boundary_stopped_branches += e;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Uniform stopping

namespace detail {

struct UniformNode {
    UniformStop stop;
    double r = 0.0;
    bool implicit = false;
    int exits = 0;
};

}  // namespace detail

/// Assembles the implicit rows of one uniform-stopping step. Exposed for inspection;
/// `explicit_values` must already hold level-n values of every explicit interior node.
struct UniformAssembly {
    SparseSystem system;
    // Row-normalized off-diagonal sums and their admissible bounds 3/4 alpha/(1 + r tauhat).
    std::vector<double> offdiag_sum;
    std::vector<double> offdiag_bound;
};

inline SolutionField step_uniform(const ProblemSpec& problem, const Grid& grid, const SolutionField& next, int n,
                                  StepReport* report = nullptr, const StepOptions& opt = {},
                                  UniformAssembly* assembly_out = nullptr) {
    detail::require_boundary(problem, BoundaryKind::Dirichlet, "uniform stopping scheme");
    detail::require_level(grid, next, n);
    const double tn = grid.t(n), tn1 = grid.t(n + 1), dt = grid.dt();
    const Domain& dom = grid.domain();

    SolutionField out(grid, n);
    detail::fill_dirichlet_edges(problem, grid, out, tn);

    std::vector<detail::UniformNode> nodes(grid.node_count());

    // Explicit nodes (tau = t_{n+1}) and classification.
    parallel_for(1, grid.m1(), opt.threads, [&](int i) {
        for (int j = 1; j < grid.m2(); ++j) {
            const Point2 node = grid.node(i, j);
            const auto c = evaluate_coefficients(problem, node.x, node.y, tn);
            const auto set = branch_set(node, c, dom, dt);
            auto& info = nodes[out.index(i, j)];
            info.stop = uniform_stop(set, dom);
            info.r = c.r;
            info.exits = set.exit_count();
            info.implicit = info.stop.stopped_early(dt);
            if (info.implicit) continue;
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) {
                const Point2 e = info.stop.endpoints[k];
                acc += info.stop.on_boundary[k] ? problem.boundary_value(e.x, e.y, tn1) : bilinear_eval(next, grid, e);
            }
            out(i, j) = acc / (4.0 * (1.0 + c.r * dt));
        }
    });

    // Row numbering of implicit nodes.
    std::vector<int> row_of(grid.node_count(), -1);
    int rows = 0;
    long exits = 0;
    for (int i = 1; i < grid.m1(); ++i) {
        for (int j = 1; j < grid.m2(); ++j) {
            const auto idx = out.index(i, j);
            exits += nodes[idx].exits;
            if (nodes[idx].implicit) row_of[idx] = rows++;
        }
    }

    UniformAssembly asmb;
    asmb.offdiag_sum.reserve(static_cast<std::size_t>(rows));
    asmb.offdiag_bound.reserve(static_cast<std::size_t>(rows));
    std::vector<std::pair<int, double>> entries;
    for (int i = 1; i < grid.m1(); ++i) {
        for (int j = 1; j < grid.m2(); ++j) {
            const auto idx = out.index(i, j);
            const auto& info = nodes[idx];
            if (!info.implicit) continue;
            const int row = row_of[idx];
            const double tauhat = info.stop.tauhat;
            const double tau = tn + tauhat;
            const double alpha = (dt - tauhat) / dt;
            const double disc = 1.0 / (4.0 * (1.0 + info.r * tauhat));
            entries.clear();
            entries.emplace_back(row, 1.0);
            double rhs = 0.0;
            for (int k = 0; k < 4; ++k) {
                const Point2 e = info.stop.endpoints[k];
                if (info.stop.on_boundary[k]) {
                    rhs += disc * problem.boundary_value(e.x, e.y, tau);
                    continue;
                }
                for (const auto& s : trilinear_stencil_weighted(grid, e, alpha, n, true)) {
                    if (s.weight == 0.0) continue;
                    const double w = disc * s.weight;
                    switch (s.level) {
                        case StencilLevel::Boundary:
                            rhs += w * problem.boundary_value(s.point.x, s.point.y, s.time);
                            break;
                        case StencilLevel::Next:
                            rhs += w * next(s.i, s.j);
                            break;
                        case StencilLevel::Current: {
                            const int col = row_of[out.index(s.i, s.j)];
                            if (col >= 0) entries.emplace_back(col, -w);
                            else rhs += w * out(s.i, s.j);
                            break;
                        }
                    }
                }
            }
            asmb.system.add_row(idx, entries, rhs);
            const auto r = static_cast<std::size_t>(row);
            double diag = 0.0, off = 0.0;
            for (std::size_t q = asmb.system.row_ptr[r]; q < asmb.system.row_ptr[r + 1]; ++q) {
                if (asmb.system.col[q] == row) diag += asmb.system.val[q];
                else off += std::abs(asmb.system.val[q]);
            }
            asmb.offdiag_sum.push_back(off / diag);
            asmb.offdiag_bound.push_back(0.75 * alpha / (1.0 + info.r * tauhat));
        }
    }

    const auto check = check_m_matrix(asmb.system);
    if (!check.ok) throw NumericError("uniform stopping step " + std::to_string(n) + ": " + check.failure);

    SolveStats stats;
    if (rows > 0) {
        std::vector<double> x(static_cast<std::size_t>(rows));
        for (int r = 0; r < rows; ++r) x[static_cast<std::size_t>(r)] = next.values()[asmb.system.node_of_row[r]];
        stats = solve_m_matrix(asmb.system, x, opt.solver_tol, opt.solver_max_iters);
        for (int r = 0; r < rows; ++r) out.values()[asmb.system.node_of_row[r]] = x[static_cast<std::size_t>(r)];
    }

    if (report != nullptr) {
        *report = StepReport{};
        report->level = n;
        report->boundary_stopped_branches = exits;
        report->implicit_nodes = rows;
        report->solver_iterations = stats.iterations;
        report->residual = stats.relative_residual;
        report->m_matrix_ok = check.ok;
        report->worst_offdiag_ratio = check.worst_offdiag_ratio;
        for (std::size_t r = 0; r < asmb.offdiag_sum.size(); ++r) {
            if (asmb.offdiag_sum[r] > asmb.offdiag_bound[r] + 1e-14) ++report->offdiag_bound_violations;
        }
    }
    if (assembly_out != nullptr) *assembly_out = std::move(asmb);
    return out;
}

// ---------------------------------------------------------------------------
// Reflection (homogeneous Neumann)

/// Per-axis mirror across the crossed edge; a point still outside afterwards is rejected.
inline Point2 reflect(Point2 p, const Domain& d) {
    auto mirror = [](double v, double lo, double hi) {
        if (v < lo) v = 2.0 * lo - v;
        else if (v > hi) v = 2.0 * hi - v;
        if (v < lo || v > hi) {
            throw ArgumentError("reflect: displacement overshoots the opposite edge; time step too coarse");
        }
        return v;
    };
    return {mirror(p.x, d.x0, d.xM1), mirror(p.y, d.y0, d.yM2)};
}

/// Neumann edge copy: x-edges first, then y-edges.
inline void copy_neumann_edges(SolutionField& f) {
    const int m1 = f.m1(), m2 = f.m2();
    for (int j = 0; j <= m2; ++j) {
        f(0, j) = f(1, j);
        f(m1, j) = f(m1 - 1, j);
    }
    for (int i = 0; i <= m1; ++i) {
        f(i, 0) = f(i, 1);
        f(i, m2) = f(i, m2 - 1);
    }
}

inline SolutionField step_reflective(const ProblemSpec& problem, const Grid& grid, const SolutionField& next, int n,
                                     StepReport* report = nullptr, const StepOptions& opt = {}) {
    detail::require_boundary(problem, BoundaryKind::Neumann, "reflective scheme");
    detail::require_level(grid, next, n);
    const double tn = grid.t(n), dt = grid.dt();
    const Domain& dom = grid.domain();
    SolutionField out(grid, n);
    std::vector<long> reflected(static_cast<std::size_t>(grid.m1() + 1), 0);
    parallel_for(1, grid.m1(), opt.threads, [&](int i) {
        for (int j = 1; j < grid.m2(); ++j) {
            const Point2 node = grid.node(i, j);
            const auto c = evaluate_coefficients(problem, node.x, node.y, tn);
            double acc = 0.0;
            for (const Point2 p : proposed_endpoints(node, c, dt)) {
                if (!dom.in_closure(p, 0.0)) ++reflected[static_cast<std::size_t>(i)];
                acc += bilinear_eval(next, grid, reflect(p, dom));
            }
            out(i, j) = acc / (4.0 * (1.0 + c.r * dt));
        }
    });
    copy_neumann_edges(out);
    if (report != nullptr) {
        *report = StepReport{};
        report->level = n;
        for (long v : reflected) report->boundary_stopped_branches += v;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Periodic wrapping

/// Positive modulo into [x0, x0 + Lx) x [y0, y0 + Ly).
inline Point2 wrap(Point2 p, const Domain& d) {
    auto mod = [](double v, double lo, double len) {
        double r = std::fmod(v - lo, len);
        if (r < 0.0) r += len;
        if (r >= len) r = 0.0;
        return lo + r;
    };
    return {mod(p.x, d.x0, d.period_x()), mod(p.y, d.y0, d.period_y())};
}

inline SolutionField step_periodic(const ProblemSpec& problem, const Grid& grid, const SolutionField& next, int n,
                                   StepReport* report = nullptr, const StepOptions& opt = {}) {
    detail::require_boundary(problem, BoundaryKind::Periodic, "periodic scheme");
    detail::require_level(grid, next, n);
    const double tn = grid.t(n), dt = grid.dt();
    const Domain& dom = grid.domain();
    SolutionField out(grid, n);
    std::vector<long> wrapped(static_cast<std::size_t>(grid.m1() + 1), 0);
    parallel_for(0, grid.m1() + 1, opt.threads, [&](int i) {
        for (int j = 0; j <= grid.m2(); ++j) {
            const Point2 node = grid.node(i, j);
            const auto c = evaluate_coefficients(problem, node.x, node.y, tn);
            double acc = 0.0;
            for (const Point2 p : proposed_endpoints(node, c, dt)) {
                if (!dom.in_closure(p, 0.0)) ++wrapped[static_cast<std::size_t>(i)];
                acc += bilinear_eval(next, grid, wrap(p, dom));
            }
            out(i, j) = acc / (4.0 * (1.0 + c.r * dt));
        }
    });
    if (report != nullptr) {
        *report = StepReport{};
        report->level = n;
        for (long v : wrapped) report->boundary_stopped_branches += v;
    }
    return out;
}

}  // namespace fkwide
