// fkwide: command-line driver for single solves, refinement studies and Monte Carlo spot checks.
//
//   fkwide solve  --problem dirichlet-exp --scheme alg1 --m 40
//   fkwide study  --problem neumann-trig --scheme alg3 --levels 4 --format csv --out table.csv
//   fkwide oracle --problem periodic-trig --x 0.3 --y 0.7 --paths 100000 --seed 7
//
// Exit codes: 0 success, 2 configuration error, 3 numeric failure.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "fkwide/fkwide.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Common {
    std::string problem = "dirichlet-exp";
    std::string format = "csv";
    std::string out;
    unsigned threads = 1;
};

struct SchemeOpts {
    std::string scheme = "alg1";
    std::string lisl_boundary;
    double lisl_k = 1.0;
    double lisl_dt_ratio = 0.25;
};

fkwide::Scheme resolve_scheme(const SchemeOpts& o) {
    if (o.scheme == "lisl") {
        if (o.lisl_boundary.empty() || o.lisl_boundary == "exact") return fkwide::Scheme::LislExact;
        return fkwide::Scheme::LislExtrapolation;
    }
    const auto s = fkwide::parse_scheme(o.scheme);
    if (!o.lisl_boundary.empty()) {
        const auto want = o.lisl_boundary == "exact" ? fkwide::Scheme::LislExact : fkwide::Scheme::LislExtrapolation;
        if (s != want) {
            throw fkwide::ConfigError("--lisl-boundary " + o.lisl_boundary + " conflicts with --scheme " + o.scheme);
        }
    }
    return s;
}

double dt_ratio(const SchemeOpts& o, fkwide::Scheme s) {
    return fkwide::is_lisl(s) ? o.lisl_dt_ratio : fkwide::default_dt_ratio(s);
}

/// Writes to --out when given, stdout otherwise.
void emit(const Common& c, const std::string& text) {
    if (c.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(c.out);
    if (!f) throw fkwide::ConfigError("cannot open output file '" + c.out + "'");
    f << text;
}

ordered_json rate_json(const std::optional<double>& r) { return r ? ordered_json(*r) : ordered_json(nullptr); }

int run_solve(const Common& c, const SchemeOpts& so, int m, int n_override) {
    const auto problem = fkwide::builtin_problem(c.problem);
    const auto scheme = resolve_scheme(so);
    int n = n_override;
    if (n <= 0) n = fkwide::doubling_levels(problem, m, 1, dt_ratio(so, scheme)).front().n;
    const fkwide::Grid grid(problem.domain, m, m, n, problem.horizon);
    fkwide::SolveOptions opt;
    opt.step.threads = c.threads;
    opt.lisl_k_factor = so.lisl_k;
    const auto sol = fkwide::solve(problem, grid, scheme, opt);

    std::optional<fkwide::ErrorNorms> err;
    if (problem.exact) err = fkwide::error_norms(sol.field, problem, grid);

    std::ostringstream os;
    if (c.format == "json") {
        ordered_json j;
        j["problem"] = c.problem;
        j["scheme"] = std::string(fkwide::to_string(scheme));
        j["M1"] = m;
        j["M2"] = m;
        j["N"] = n;
        if (err) {
            j["err_linf"] = err->linf;
            j["err_l2"] = err->l2;
        }
        ordered_json nodes = ordered_json::array();
        for (int i = 0; i <= grid.m1(); ++i)
            for (int k = 0; k <= grid.m2(); ++k) nodes.push_back({grid.x(i), grid.y(k), sol.field(i, k)});
        j["field"] = std::move(nodes);
        os << j.dump(2) << '\n';
    } else {
        os << "# problem=" << c.problem << " scheme=" << fkwide::to_string(scheme) << " M1=" << m << " M2=" << m
           << " N=" << n;
        if (err) os << " err_linf=" << fkwide::format_number(err->linf) << " err_l2=" << fkwide::format_number(err->l2);
        os << "\nx,y,value\n";
        for (int i = 0; i <= grid.m1(); ++i)
            for (int k = 0; k <= grid.m2(); ++k)
                os << fkwide::format_number(grid.x(i)) << ',' << fkwide::format_number(grid.y(k)) << ','
                   << fkwide::format_number(sol.field(i, k)) << '\n';
    }
    emit(c, os.str());
    if (!c.out.empty() && err) {
        std::cerr << "err_linf=" << fkwide::format_number(err->linf) << " err_l2=" << fkwide::format_number(err->l2)
                  << '\n';
    }
    return 0;
}

int run_study(const Common& c, const SchemeOpts& so, int base_m, int levels, bool full) {
    const auto problem = fkwide::builtin_problem(c.problem);
    fkwide::StudyConfig cfg;
    cfg.problem = c.problem;
    cfg.scheme = resolve_scheme(so);
    if (full) levels = std::max(levels, 6);
    cfg.levels = fkwide::doubling_levels(problem, base_m, levels, dt_ratio(so, cfg.scheme));
    cfg.solve.step.threads = c.threads;
    cfg.solve.lisl_k_factor = so.lisl_k;
    const auto res = fkwide::run_study(cfg);

    std::ostringstream os;
    if (c.format == "json") {
        ordered_json j;
        j["problem"] = res.problem;
        j["scheme"] = std::string(fkwide::to_string(res.scheme));
        ordered_json rows = ordered_json::array();
        for (const auto& r : res.rows) {
            ordered_json row;
            row["M1"] = r.m1;
            row["M2"] = r.m2;
            row["N"] = r.n;
            row["err_linf"] = r.err_linf;
            row["rate_linf"] = rate_json(r.rate_linf);
            if (res.has_l2) {
                row["err_l2"] = r.err_l2;
                row["rate_l2"] = rate_json(r.rate_l2);
            }
            rows.push_back(std::move(row));
        }
        j["rows"] = std::move(rows);
        os << j.dump(2) << '\n';
    } else {
        fkwide::write_csv(os, res);
    }
    emit(c, os.str());
    return 0;
}

int run_oracle(const Common& c, double x, double y, double t, long paths, int substeps, std::uint64_t seed) {
    const auto problem = fkwide::builtin_problem(c.problem);
    const auto est = fkwide::mc_oracle(problem, x, y, t, paths, substeps, seed, c.threads);
    std::optional<double> exact, z;
    if (problem.exact) {
        exact = (*problem.exact)(x, y, t);
        if (est.std_error > 0.0) z = (est.mean - *exact) / est.std_error;
    }
    std::ostringstream os;
    if (c.format == "json") {
        ordered_json j;
        j["problem"] = c.problem;
        j["x"] = x;
        j["y"] = y;
        j["t"] = t;
        j["mean"] = est.mean;
        j["std_error"] = est.std_error;
        j["paths"] = est.paths;
        j["substeps"] = substeps;
        j["seed"] = est.seed;
        j["exact"] = exact ? ordered_json(*exact) : ordered_json(nullptr);
        j["z"] = z ? ordered_json(*z) : ordered_json(nullptr);
        os << j.dump(2) << '\n';
    } else {
        auto opt = [](const std::optional<double>& v) { return v ? fkwide::format_number(*v) : std::string(); };
        os << "problem,x,y,t,mean,std_error,paths,substeps,seed,exact,z\n"
           << c.problem << ',' << fkwide::format_number(x) << ',' << fkwide::format_number(y) << ','
           << fkwide::format_number(t) << ',' << fkwide::format_number(est.mean) << ','
           << fkwide::format_number(est.std_error) << ',' << est.paths << ',' << substeps << ',' << est.seed << ','
           << opt(exact) << ',' << opt(z) << '\n';
    }
    emit(c, os.str());
    return 0;
}

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--problem", c.problem, "Built-in problem")
        ->check(CLI::IsMember({"dirichlet-exp", "neumann-trig", "periodic-trig"}));
    cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--out", c.out, "Output path (default stdout)");
    cmd->add_option("--threads", c.threads, "Worker threads (0 = hardware concurrency)");
}

void add_scheme(CLI::App* cmd, SchemeOpts& s) {
    cmd->add_option("--scheme", s.scheme, "alg1, alg2, alg3, alg4, lisl, lisl-exact, lisl-extrap");
    cmd->add_option("--lisl-boundary", s.lisl_boundary, "LISL exterior treatment")
        ->check(CLI::IsMember({"exact", "extrap"}));
    cmd->add_option("--lisl-k", s.lisl_k, "LISL stencil length as a multiple of sqrt(h)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--lisl-dt-ratio", s.lisl_dt_ratio, "LISL time step as a multiple of h")
        ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feynman-Kac wide-stencil solvers for 2D parabolic problems"};
    app.require_subcommand(1);

    Common common;
    SchemeOpts scheme;

    int m = 40, n = 0;
    auto* solve = app.add_subcommand("solve", "Solve one grid and report errors at t = 0");
    add_common(solve, common);
    add_scheme(solve, scheme);
    solve->add_option("--m", m, "Cells per direction")->check(CLI::Range(2, 1 << 14));
    solve->add_option("--n", n, "Time steps (default from the scheme's mesh ratio)");

    int base_m = 20, levels = 4;
    bool full = false;
    auto* study = app.add_subcommand("study", "Refinement study with observed rates");
    add_common(study, common);
    add_scheme(study, scheme);
    study->add_option("--m", base_m, "Coarsest cells per direction")->check(CLI::Range(2, 1 << 14));
    study->add_option("--levels", levels, "Number of doublings")->check(CLI::Range(1, 12));
    study->add_flag("--full", full, "Extend the default study to M = 640");

    double x = 0.5, y = 0.5, t = 0.0;
    long paths = 100000;
    int substeps = 200;
    std::uint64_t seed = 1;
    auto* oracle = app.add_subcommand("oracle", "Monte Carlo estimate at one point");
    add_common(oracle, common);
    oracle->add_option("--x", x, "x coordinate");
    oracle->add_option("--y", y, "y coordinate");
    oracle->add_option("--t", t, "time");
    oracle->add_option("--paths", paths, "Sample paths")->check(CLI::PositiveNumber);
    oracle->add_option("--substeps", substeps, "Euler substeps over [t, T]")->check(CLI::PositiveNumber);
    oracle->add_option("--seed", seed, "RNG seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*solve) return run_solve(common, scheme, m, n);
        if (*study) return run_study(common, scheme, base_m, levels, full);
        return run_oracle(common, x, y, t, paths, substeps, seed);
    } catch (const fkwide::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const fkwide::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}
