// Defining a problem outside the built-in set and solving it with two schemes.
//
// Constant correlated diffusion with drift, zero discount. The affine solution
// f = x + 2y + (b1 + 2 b2)(T - t) is reproduced by both stopping-time schemes up to rounding.

#include <cstdio>

#include "fkwide/fkwide.hpp"

int main() {
    constexpr double b1 = 0.1, b2 = -0.2;

    fkwide::ProblemSpec p;
    p.name = "affine-drift";
    p.domain = {0.0, 1.0, 0.0, 1.0};
    p.horizon = 1.0;
    p.coefficients = [](double, double, double) {
        fkwide::CoefficientSample c;
        c.sigma1 = 0.6;
        c.sigma2 = 0.4;
        c.rho = 0.5;
        c.b1 = b1;
        c.b2 = b2;
        c.r = 0.0;
        return c;
    };
    auto exact = [](double x, double y, double t) { return x + 2.0 * y + (b1 + 2.0 * b2) * (1.0 - t); };
    p.terminal = [exact](double x, double y) { return exact(x, y, 1.0); };
    p.boundary = fkwide::DirichletBoundary{exact};
    p.exact = exact;

    const fkwide::Grid grid(p.domain, 32, 32, 32, p.horizon);
    for (auto scheme : {fkwide::Scheme::NonUniform, fkwide::Scheme::Uniform}) {
        const auto sol = fkwide::solve(p, grid, scheme);
        const auto err = fkwide::error_norms(sol.field, p, grid);
        std::printf("%-5s  max error %.3e   l2 error %.3e\n", std::string(fkwide::to_string(scheme)).c_str(), err.linf,
                    err.l2);
    }
    return 0;
}
