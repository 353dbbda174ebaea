#pragma once

// Problem definitions, coefficient evaluation, the uniform space-time grid and
// the nodal solution field.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fkwide/errors.hpp"

namespace fkwide {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

/// Open rectangle (x0, xM1) x (y0, yM2).
struct Domain {
    double x0 = 0.0;
    double xM1 = 1.0;
    double y0 = 0.0;
    double yM2 = 1.0;

    double period_x() const noexcept { return xM1 - x0; }
    double period_y() const noexcept { return yM2 - y0; }

    void validate() const {
        if (!(x0 < xM1) || !(y0 < yM2)) {
            throw ArgumentError("domain: require x0 < xM1 and y0 < yM2");
        }
    }

    /// Absolute slack used when testing membership of the closure.
    double slack() const noexcept {
        return 1e-12 * std::max({1.0, std::abs(x0), std::abs(xM1), std::abs(y0), std::abs(yM2)});
    }

    bool in_closure(Point2 p, double tol = -1.0) const noexcept {
        if (tol < 0.0) tol = slack();
        return p.x >= x0 - tol && p.x <= xM1 + tol && p.y >= y0 - tol && p.y <= yM2 + tol;
    }

    bool strictly_inside(Point2 p) const noexcept {
        return p.x > x0 && p.x < xM1 && p.y > y0 && p.y < yM2;
    }

    bool on_boundary(Point2 p, double tol = -1.0) const noexcept {
        if (tol < 0.0) tol = slack();
        if (!in_closure(p, tol)) return false;
        return std::abs(p.x - x0) <= tol || std::abs(p.x - xM1) <= tol ||
               std::abs(p.y - y0) <= tol || std::abs(p.y - yM2) <= tol;
    }

    Point2 clamp(Point2 p) const noexcept {
        return {std::clamp(p.x, x0, xM1), std::clamp(p.y, y0, yM2)};
    }
};

/// Pointwise values of the PDE coefficients.
struct CoefficientSample {
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    double rho = 0.0;
    double b1 = 0.0;
    double b2 = 0.0;
    double r = 0.0;
};

enum class Ellipticity {
    /// sigma >= 0; needed by the built-in problems whose diffusion vanishes on parts of the domain.
    Degenerate,
    /// sigma > 0.
    Strict,
};

inline void validate(const CoefficientSample& c, Ellipticity mode = Ellipticity::Degenerate) {
    auto fail = [](const char* field, const std::string& why) {
        throw CoefficientError(field, std::string("coefficient ") + field + ": " + why);
    };
    const double values[] = {c.sigma1, c.sigma2, c.rho, c.b1, c.b2, c.r};
    const char* names[] = {"sigma1", "sigma2", "rho", "b1", "b2", "r"};
    for (int k = 0; k < 6; ++k) {
        if (!std::isfinite(values[k])) fail(names[k], "not finite");
    }
    if (mode == Ellipticity::Strict) {
        if (!(c.sigma1 > 0.0)) fail("sigma1", "must be > 0");
        if (!(c.sigma2 > 0.0)) fail("sigma2", "must be > 0");
    } else {
        if (c.sigma1 < 0.0) fail("sigma1", "must be >= 0");
        if (c.sigma2 < 0.0) fail("sigma2", "must be >= 0");
    }
    if (std::abs(c.rho) > 1.0) fail("rho", "must lie in [-1, 1]");
    if (c.r < 0.0) fail("r", "must be >= 0");
}

using CoefficientFn = std::function<CoefficientSample(double x, double y, double t)>;
using TerminalFn = std::function<double(double x, double y)>;
using SpaceTimeFn = std::function<double(double x, double y, double t)>;

struct DirichletBoundary {
    SpaceTimeFn value;
};
struct NeumannHomogeneous {};
struct PeriodicBoundary {};

using BoundarySpec = std::variant<DirichletBoundary, NeumannHomogeneous, PeriodicBoundary>;

enum class BoundaryKind { Dirichlet, Neumann, Periodic };

struct ProblemSpec {
    std::string name;
    Domain domain;
    double horizon = 1.0;
    CoefficientFn coefficients;
    TerminalFn terminal;
    BoundarySpec boundary;
    std::optional<SpaceTimeFn> exact;

    BoundaryKind boundary_kind() const noexcept {
        return static_cast<BoundaryKind>(boundary.index());
    }

    /// Dirichlet data; only valid for Dirichlet problems.
    double boundary_value(double x, double y, double t) const {
        const auto* d = std::get_if<DirichletBoundary>(&boundary);
        if (d == nullptr) throw ConfigError("problem '" + name + "' has no Dirichlet data");
        return d->value(x, y, t);
    }
};

inline std::string_view to_string(BoundaryKind kind) {
    switch (kind) {
        case BoundaryKind::Dirichlet: return "dirichlet";
        case BoundaryKind::Neumann: return "neumann";
        case BoundaryKind::Periodic: return "periodic";
    }
    return "?";
}

/// Coefficients at (x, y, t); rejects points outside the closed space-time cylinder
/// and validated samples that break the coefficient invariants.
inline CoefficientSample evaluate_coefficients(const ProblemSpec& problem, double x, double y, double t,
                                               Ellipticity mode = Ellipticity::Degenerate) {
    const Domain& d = problem.domain;
    if (!d.in_closure({x, y})) {
        throw DomainError("coefficient query (" + std::to_string(x) + ", " + std::to_string(y) +
                          ") outside the closed domain");
    }
    const double tt = 1e-12 * std::max(1.0, problem.horizon);
    if (t < -tt || t > problem.horizon + tt) {
        throw DomainError("coefficient query at t = " + std::to_string(t) + " outside [0, T]");
    }
    CoefficientSample c = problem.coefficients(x, y, t);
    validate(c, mode);
    return c;
}

// ---------------------------------------------------------------------------
// Grid and field

class Grid {
public:
    Grid(Domain domain, int m1, int m2, int n, double horizon)
        : domain_(domain), m1_(m1), m2_(m2), n_(n), horizon_(horizon) {
        domain_.validate();
        if (m1 < 2 || m2 < 2) throw ArgumentError("grid: M1 and M2 must be >= 2");
        if (n < 1) throw ArgumentError("grid: N must be >= 1");
        if (!(horizon > 0.0)) throw ArgumentError("grid: horizon must be > 0");
        h1_ = (domain_.xM1 - domain_.x0) / m1_;
        h2_ = (domain_.yM2 - domain_.y0) / m2_;
        dt_ = horizon_ / n_;
    }

    const Domain& domain() const noexcept { return domain_; }
    int m1() const noexcept { return m1_; }
    int m2() const noexcept { return m2_; }
    int n() const noexcept { return n_; }
    double horizon() const noexcept { return horizon_; }
    double h1() const noexcept { return h1_; }
    double h2() const noexcept { return h2_; }
    double dt() const noexcept { return dt_; }

    // Last nodes are pinned to the domain edge so node(M1, M2) is exact.
    double x(int i) const noexcept { return i == m1_ ? domain_.xM1 : domain_.x0 + i * h1_; }
    double y(int j) const noexcept { return j == m2_ ? domain_.yM2 : domain_.y0 + j * h2_; }
    double t(int n) const noexcept { return n == n_ ? horizon_ : n * dt_; }
    Point2 node(int i, int j) const noexcept { return {x(i), y(j)}; }

    bool is_boundary_node(int i, int j) const noexcept {
        return i == 0 || j == 0 || i == m1_ || j == m2_;
    }

    std::size_t node_count() const noexcept {
        return static_cast<std::size_t>(m1_ + 1) * static_cast<std::size_t>(m2_ + 1);
    }

private:
    Domain domain_;
    int m1_;
    int m2_;
    int n_;
    double horizon_;
    double h1_ = 0.0;
    double h2_ = 0.0;
    double dt_ = 0.0;
};

inline Grid make_grid(const Domain& domain, int m1, int m2, int n, double horizon) {
    return Grid(domain, m1, m2, n, horizon);
}

/// Nodal values (i = 0..M1, j = 0..M2) at one time level, stored row-major in i.
class SolutionField {
public:
    SolutionField() = default;
    SolutionField(int m1, int m2, int level, double fill = 0.0)
        : m1_(m1), m2_(m2), level_(level),
          values_(static_cast<std::size_t>(m1 + 1) * static_cast<std::size_t>(m2 + 1), fill) {}
    explicit SolutionField(const Grid& grid, int level, double fill = 0.0)
        : SolutionField(grid.m1(), grid.m2(), level, fill) {}

    int m1() const noexcept { return m1_; }
    int m2() const noexcept { return m2_; }
    int level() const noexcept { return level_; }
    void set_level(int level) noexcept { level_ = level; }

    std::size_t index(int i, int j) const noexcept {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(m2_ + 1) + static_cast<std::size_t>(j);
    }
    double& operator()(int i, int j) noexcept { return values_[index(i, j)]; }
    double operator()(int i, int j) const noexcept { return values_[index(i, j)]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    bool all_finite() const noexcept {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }
    double min() const noexcept { return *std::min_element(values_.begin(), values_.end()); }
    double max_abs() const noexcept {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    int m1_ = 0;
    int m2_ = 0;
    int level_ = 0;
    std::vector<double> values_;
};

/// Samples g(x_i, y_j) at every node.
template <class Fn>
SolutionField sample_field(const Grid& grid, int level, Fn&& g) {
    SolutionField f(grid, level);
    for (int i = 0; i <= grid.m1(); ++i)
        for (int j = 0; j <= grid.m2(); ++j) f(i, j) = g(grid.x(i), grid.y(j));
    return f;
}

// ---------------------------------------------------------------------------
// Built-in manufactured problems on the unit square, T = 1.

namespace detail {

inline ProblemSpec dirichlet_exp() {
    ProblemSpec p;
    p.name = "dirichlet-exp";
    p.domain = {0.0, 1.0, 0.0, 1.0};
    p.horizon = 1.0;
    p.coefficients = [](double x, double y, double t) {
        const double s = x * y * t;
        CoefficientSample c;
        c.sigma1 = std::abs(s);
        c.sigma2 = std::abs(s + 1.0);
        c.rho = 1.0;
        c.r = 1.0 + 0.5 * s * s + 0.5 * (s + 1.0) * (s + 1.0) + s * (s + 1.0);
        return c;
    };
    auto exact = [](double x, double y, double t) { return std::exp(t + x + y); };
    p.terminal = [exact](double x, double y) { return exact(x, y, 1.0); };
    p.boundary = DirichletBoundary{exact};
    p.exact = exact;
    return p;
}

inline ProblemSpec neumann_trig() {
    using std::numbers::pi;
    ProblemSpec p;
    p.name = "neumann-trig";
    p.domain = {0.0, 1.0, 0.0, 1.0};
    p.horizon = 1.0;
    p.coefficients = [](double x, double y, double) {
        const double sx = std::sin(pi * x - pi / 2), sy = std::sin(pi * y - pi / 2);
        const double cx = std::cos(pi * x - pi / 2), cy = std::cos(pi * y - pi / 2);
        const double s4 = sx * sx * sx * sx * sy * sy * sy * sy;
        CoefficientSample c;
        c.sigma1 = std::abs(x) / (2 * pi);
        c.sigma2 = sx * sx * sy * sy / (2 * pi);
        c.rho = 1.0;
        c.r = 1.0 - x * x / 8.0 - s4 / 8.0 + x * sx * sy * cx * cy / 4.0;
        return c;
    };
    auto exact = [](double x, double y, double t) {
        return std::exp(t) * std::sin(pi * x - pi / 2) * std::sin(pi * y - pi / 2);
    };
    p.terminal = [exact](double x, double y) { return exact(x, y, 1.0); };
    p.boundary = NeumannHomogeneous{};
    p.exact = exact;
    return p;
}

inline ProblemSpec periodic_trig() {
    using std::numbers::pi;
    ProblemSpec p;
    p.name = "periodic-trig";
    p.domain = {0.0, 1.0, 0.0, 1.0};
    p.horizon = 1.0;
    p.coefficients = [](double x, double y, double) {
        const double sx = std::sin(2 * pi * x), sy = std::sin(2 * pi * y);
        const double cx = std::cos(2 * pi * x), cy = std::cos(2 * pi * y);
        const double c4 = cx * cx * cx * cx * cy * cy * cy * cy;
        const double s4 = sx * sx * sx * sx * sy * sy * sy * sy;
        CoefficientSample c;
        c.b1 = sx * cy / (2 * pi);
        c.b2 = -sy * cx / (2 * pi);
        c.sigma1 = cx * cx * cy * cy / (4 * pi);
        c.sigma2 = sx * sx * sy * sy / (4 * pi);
        c.rho = 1.0;
        c.r = 1.0 - c4 / 8.0 - s4 / 8.0 + sx * sy * cx * cx * cx * cy * cy * cy / 4.0;
        return c;
    };
    auto exact = [](double x, double y, double t) {
        return std::exp(t) * std::sin(2 * pi * x) * std::sin(2 * pi * y);
    };
    p.terminal = [exact](double x, double y) { return exact(x, y, 1.0); };
    p.boundary = PeriodicBoundary{};
    p.exact = exact;
    return p;
}

}  // namespace detail

inline const std::vector<std::string>& builtin_problem_names() {
    static const std::vector<std::string> names{"dirichlet-exp", "neumann-trig", "periodic-trig"};
    return names;
}

inline ProblemSpec builtin_problem(std::string_view name) {
    if (name == "dirichlet-exp") return detail::dirichlet_exp();
    if (name == "neumann-trig") return detail::neumann_trig();
    if (name == "periodic-trig") return detail::periodic_trig();
    std::string valid;
    for (const auto& n : builtin_problem_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw LookupError("unknown problem '" + std::string(name) + "' (valid: " + valid + ")");
}

/// Largest deviation |c(x + Lx, y, t) - c(x, y, t)| (and the y-shift) of coefficients and
/// terminal data over random samples. Periodic problems should give ~0.
inline double periodicity_defect(const ProblemSpec& p, int samples = 200, unsigned seed = 7) {
    std::mt19937_64 rng(seed);
    const Domain& d = p.domain;
    std::uniform_real_distribution<double> ux(d.x0, d.xM1), uy(d.y0, d.yM2), ut(0.0, p.horizon);
    const double lx = d.period_x(), ly = d.period_y();
    double worst = 0.0;
    auto cmp = [&](const CoefficientSample& a, const CoefficientSample& b) {
        worst = std::max({worst, std::abs(a.sigma1 - b.sigma1), std::abs(a.sigma2 - b.sigma2),
                          std::abs(a.rho - b.rho), std::abs(a.b1 - b.b1), std::abs(a.b2 - b.b2),
                          std::abs(a.r - b.r)});
    };
    for (int s = 0; s < samples; ++s) {
        const double x = ux(rng), y = uy(rng), t = ut(rng);
        const auto base = p.coefficients(x, y, t);
        cmp(base, p.coefficients(x + lx, y, t));
        cmp(base, p.coefficients(x, y + ly, t));
        const double phi = p.terminal(x, y);
        worst = std::max({worst, std::abs(phi - p.terminal(x + lx, y)), std::abs(phi - p.terminal(x, y + ly))});
    }
    return worst;
}

inline void check_periodic(const ProblemSpec& p, double tol = 1e-10) {
    if (p.boundary_kind() != BoundaryKind::Periodic) return;
    const double defect = periodicity_defect(p);
    if (defect > tol) {
        throw ConfigError("problem '" + p.name + "' is not periodic (defect " + std::to_string(defect) + ")");
    }
}

}  // namespace fkwide
