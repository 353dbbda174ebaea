#pragma once

// Backward time loop: f^N = phi, then one step per level down to t = 0.

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fkwide/lisl.hpp"
#include "fkwide/schemes.hpp"

namespace fkwide {

enum class Scheme {
    NonUniform,  // alg1
    Uniform,     // alg2
    Reflective,  // alg3
    Periodic,    // alg4
    LislExact,
    LislExtrapolation,
};

inline std::string_view to_string(Scheme s) {
    switch (s) {
        case Scheme::NonUniform: return "alg1";
        case Scheme::Uniform: return "alg2";
        case Scheme::Reflective: return "alg3";
        case Scheme::Periodic: return "alg4";
        case Scheme::LislExact: return "lisl-exact";
        case Scheme::LislExtrapolation: return "lisl-extrap";
    }
    return "?";
}

inline Scheme parse_scheme(std::string_view name) {
    for (Scheme s : {Scheme::NonUniform, Scheme::Uniform, Scheme::Reflective, Scheme::Periodic, Scheme::LislExact,
                     Scheme::LislExtrapolation}) {
        if (to_string(s) == name) return s;
    }
    throw LookupError("unknown scheme '" + std::string(name) +
                      "' (valid: alg1, alg2, alg3, alg4, lisl-exact, lisl-extrap)");
}

inline bool is_lisl(Scheme s) { return s == Scheme::LislExact || s == Scheme::LislExtrapolation; }

inline BoundaryKind required_boundary(Scheme s) {
    switch (s) {
        case Scheme::Reflective: return BoundaryKind::Neumann;
        case Scheme::Periodic: return BoundaryKind::Periodic;
        default: return BoundaryKind::Dirichlet;
    }
}

inline void check_compatible(const ProblemSpec& problem, Scheme s) {
    if (problem.boundary_kind() != required_boundary(s)) {
        throw ConfigError("scheme " + std::string(to_string(s)) + " needs a " +
                          std::string(to_string(required_boundary(s))) + " problem; '" + problem.name + "' is " +
                          std::string(to_string(problem.boundary_kind())));
    }
}

struct SolveOptions {
    StepOptions step;
    /// LISL stencil length as a multiple of sqrt(h).
    double lisl_k_factor = 1.0;
    /// Stop once this level is reached (0 = solve to t = 0; N returns the terminal field).
    int stop_level = 0;
    /// Called after every completed level with the new field.
    std::function<void(const SolutionField&, const StepReport&)> on_level;
};

struct SolveResult {
    SolutionField field;
    std::vector<StepReport> reports;
};

inline SolutionField terminal_field(const ProblemSpec& problem, const Grid& grid) {
    return sample_field(grid, grid.n(), [&](double x, double y) { return problem.terminal(x, y); });
}

inline SolveResult solve(const ProblemSpec& problem, const Grid& grid, Scheme scheme, const SolveOptions& opt = {}) {
    check_compatible(problem, scheme);
    check_periodic(problem);
    if (opt.stop_level < 0 || opt.stop_level > grid.n()) throw ArgumentError("solve: stop_level out of range");

    std::optional<LislConfig> lisl;
    if (is_lisl(scheme)) {
        lisl = LislConfig::for_grid(grid,
                                    scheme == Scheme::LislExact ? LislBoundary::Exact : LislBoundary::Extrapolation,
                                    opt.lisl_k_factor);
        const auto cfl = cfl_check(problem, grid, *lisl);
        if (!cfl.pass) {
            throw ConfigError("lisl CFL condition violated: dt (P/k^2 + r) = " + std::to_string(cfl.worst) + " > 1");
        }
    }

    SolveResult res;
    SolutionField current = terminal_field(problem, grid);
    for (int n = grid.n() - 1; n >= opt.stop_level; --n) {
        StepReport rep;
        rep.level = n;
        try {
            switch (scheme) {
                case Scheme::NonUniform: current = step_nonuniform(problem, grid, current, n, &rep, opt.step); break;
                case Scheme::Uniform: current = step_uniform(problem, grid, current, n, &rep, opt.step); break;
                case Scheme::Reflective: current = step_reflective(problem, grid, current, n, &rep, opt.step); break;
                case Scheme::Periodic: current = step_periodic(problem, grid, current, n, &rep, opt.step); break;
                case Scheme::LislExact:
                case Scheme::LislExtrapolation:
                    current = lisl_step(problem, grid, *lisl, current, n, opt.step.threads);
                    break;
            }
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " [" + std::string(to_string(scheme)) + ", level " +
                               std::to_string(n) + "]");
        }
        res.reports.push_back(rep);
        if (opt.on_level) opt.on_level(current, rep);
    }
    res.field = std::move(current);
    return res;
}

}  // namespace fkwide
