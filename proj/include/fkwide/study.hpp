#pragma once

// Refinement studies: solve a problem on a sequence of grids, measure errors at t = 0,
// attach observed rates, and serialize the table.

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "fkwide/analysis.hpp"
#include "fkwide/solver.hpp"

namespace fkwide {

struct GridLevel {
    int m = 0;
    int n = 0;
};

struct StudyConfig {
    std::string problem;
    Scheme scheme = Scheme::NonUniform;
    std::vector<GridLevel> levels;
    SolveOptions solve;
};

/// Default time step as a multiple of h: 1 for the stopping-time schemes, 1/4 for LISL.
inline double default_dt_ratio(Scheme s) { return is_lisl(s) ? 0.25 : 1.0; }

/// `count` doublings from `base_m` with N chosen so that dt = dt_ratio * h1.
inline std::vector<GridLevel> doubling_levels(const ProblemSpec& problem, int base_m, int count, double dt_ratio) {
    if (base_m < 2) throw ArgumentError("base M must be >= 2");
    if (count < 1) throw ArgumentError("level count must be >= 1");
    if (!(dt_ratio > 0.0)) throw ArgumentError("dt ratio must be > 0");
    std::vector<GridLevel> out;
    int m = base_m;
    for (int k = 0; k < count; ++k, m *= 2) {
        const double h = problem.domain.period_x() / m;
        const long n = std::lround(problem.horizon / (dt_ratio * h));
        if (n < 1) throw ArgumentError("dt ratio too large: fewer than one time step");
        out.push_back({m, static_cast<int>(n)});
    }
    return out;
}

struct StudyResult {
    std::string problem;
    Scheme scheme = Scheme::NonUniform;
    std::vector<ErrorReport> rows;
    bool has_l2 = true;
};

inline StudyResult run_study(const StudyConfig& cfg) {
    const ProblemSpec problem = builtin_problem(cfg.problem);
    check_compatible(problem, cfg.scheme);
    if (cfg.levels.empty()) throw ArgumentError("study needs at least one grid level");
    StudyResult res;
    res.problem = cfg.problem;
    res.scheme = cfg.scheme;
    res.has_l2 = !is_lisl(cfg.scheme);
    for (const auto& lv : cfg.levels) {
        const Grid grid(problem.domain, lv.m, lv.m, lv.n, problem.horizon);
        const auto sol = solve(problem, grid, cfg.scheme, cfg.solve);
        const auto e = error_norms(sol.field, problem, grid);
        ErrorReport row;
        row.m1 = grid.m1();
        row.m2 = grid.m2();
        row.n = grid.n();
        row.h = grid.h1();
        row.err_linf = e.linf;
        row.err_l2 = e.l2;
        res.rows.push_back(row);
    }
    if (res.rows.size() >= 2) res.rows = convergence_rates(std::move(res.rows));
    return res;
}

/// Scientific notation with ten significant digits.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9e", v);
    return buf;
}

inline std::string csv_header(bool has_l2) {
    return has_l2 ? "M1,M2,N,err_linf,rate_linf,err_l2,rate_l2" : "M1,M2,N,err_linf,rate_linf";
}

inline void write_csv(std::ostream& os, const StudyResult& res) {
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    os << csv_header(res.has_l2) << '\n';
    for (const auto& r : res.rows) {
        os << r.m1 << ',' << r.m2 << ',' << r.n << ',' << format_number(r.err_linf) << ',' << opt(r.rate_linf);
        if (res.has_l2) os << ',' << format_number(r.err_l2) << ',' << opt(r.rate_l2);
        os << '\n';
    }
}

}  // namespace fkwide
