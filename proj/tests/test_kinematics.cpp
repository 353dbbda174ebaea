#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fkwide/kinematics.hpp"

using namespace fkwide;

namespace {

const Domain kUnit{0.0, 1.0, 0.0, 1.0};

bool outside_or_on(const Domain& d, Point2 p) { return !d.strictly_inside(p); }

// First s in (0, dt] with position(s) on or outside the boundary: scan in u = sqrt(s),
// then 60 bisection steps on the first bracketing interval. Returns dt when none.
double bisection_oracle(const BranchTrajectory& tr, const Domain& d, double dt) {
    const int scan = 4000;
    const double umax = std::sqrt(dt);
    double lo = 0.0;
    for (int k = 1; k <= scan; ++k) {
        const double u = umax * k / scan;
        if (outside_or_on(d, tr.position(u * u))) {
            double a = lo, b = u;
            for (int it = 0; it < 60; ++it) {
                const double m = 0.5 * (a + b);
                (outside_or_on(d, tr.position(m * m)) ? b : a) = m;
            }
            return b * b;
        }
        lo = u;
    }
    return dt;
}

CoefficientSample sample(double s1, double s2, double rho, double b1 = 0.0, double b2 = 0.0) {
    CoefficientSample c;
    c.sigma1 = s1;
    c.sigma2 = s2;
    c.rho = rho;
    c.b1 = b1;
    c.b2 = b2;
    return c;
}

}  // namespace

TEST(Rotation, Endpoints) {
    const auto z = rotation_quantities(0.0);
    EXPECT_DOUBLE_EQ(z.theta, 0.0);
    EXPECT_DOUBLE_EQ(z.alpha, 1.0);
    EXPECT_DOUBLE_EQ(z.beta, -1.0);
    const auto p = rotation_quantities(1.0);
    EXPECT_NEAR(p.theta, std::numbers::pi / 4, 1e-15);
    EXPECT_NEAR(p.alpha, std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(p.beta, 0.0, 1e-15);
    const auto m = rotation_quantities(-1.0);
    EXPECT_NEAR(m.theta, -std::numbers::pi / 4, 1e-15);
    EXPECT_NEAR(m.alpha, 0.0, 1e-15);
    EXPECT_NEAR(m.beta, -std::sqrt(2.0), 1e-15);
    EXPECT_THROW(rotation_quantities(1.0001), ArgumentError);
}

TEST(Rotation, Identities) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
        const double rho = u(rng);
        const auto q = rotation_quantities(rho);
        EXPECT_NEAR(q.alpha * q.alpha + q.beta * q.beta, 2.0, 1e-12);
        EXPECT_NEAR(q.alpha * q.alpha - q.beta * q.beta, 2.0 * rho, 1e-12);
        EXPECT_GE(q.alpha, 0.0);
        EXPECT_LE(q.beta, 0.0);
    }
}

TEST(Branches, RemarkConfiguration) {
    const Point2 node{0.4, 0.6};
    const double s = 0.01;
    const auto tr = branch_trajectories(node, sample(1.0, 1.0, 1.0));
    const double d = std::sqrt(2.0 * s);
    EXPECT_NEAR(tr[0].position(s).x, node.x + d, 1e-15);
    EXPECT_NEAR(tr[0].position(s).y, node.y + d, 1e-15);
    EXPECT_NEAR(tr[1].position(s).x, node.x, 1e-15);
    EXPECT_NEAR(tr[1].position(s).y, node.y, 1e-15);
    EXPECT_NEAR(tr[3].position(s).x, node.x, 1e-15);
    EXPECT_NEAR(tr[3].position(s).y, node.y, 1e-15);
    EXPECT_NEAR(tr[2].position(s).x, node.x - d, 1e-15);
    EXPECT_NEAR(tr[2].position(s).y, node.y - d, 1e-15);
    for (int k = 0; k < 4; ++k) {
        EXPECT_EQ(tr[k].branch_index, k + 1);
        EXPECT_EQ(tr[k].position(0.0), node);
    }
}

TEST(Branches, PureDrift) {
    for (double rho : {-1.0, 0.0, 0.4}) {
        const auto tr = branch_trajectories({0.2, 0.3}, sample(0.0, 0.0, rho, 1.0, 0.0));
        for (const auto& b : tr) {
            EXPECT_NEAR(b.position(0.05).x, 0.25, 1e-15);
            EXPECT_NEAR(b.position(0.05).y, 0.3, 1e-15);
        }
    }
}

TEST(Branches, SecondMomentsMatchDiffusionTensor) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 2.0), r(-1.0, 1.0);
    for (int k = 0; k < 500; ++k) {
        const auto c = sample(u(rng), u(rng), r(rng));
        const auto tr = branch_trajectories({0.5, 0.5}, c);
        double sxx = 0, sxy = 0, syy = 0;
        for (const auto& b : tr) {
            sxx += 0.25 * b.spread.x * b.spread.x;
            sxy += 0.25 * b.spread.x * b.spread.y;
            syy += 0.25 * b.spread.y * b.spread.y;
        }
        EXPECT_NEAR(sxx, c.sigma1 * c.sigma1, 1e-12);
        EXPECT_NEAR(syy, c.sigma2 * c.sigma2, 1e-12);
        EXPECT_NEAR(sxy, c.rho * c.sigma1 * c.sigma2, 1e-12);
    }
}

TEST(ExitTime, ClosedFormZeroDrift) {
    const BranchTrajectory tr{{0.9, 0.5}, {0.0, 0.0}, {std::sqrt(2.0), std::sqrt(2.0)}, 1};
    const auto e = exit_time(tr, kUnit, 0.05);
    EXPECT_TRUE(e.exited);
    EXPECT_NEAR(e.tauhat, 0.005, 1e-15);
    EXPECT_EQ(e.endpoint.x, 1.0);
    EXPECT_NEAR(e.endpoint.y, 0.6, 1e-14);
}

TEST(ExitTime, NoExit) {
    const BranchTrajectory tr{{0.5, 0.5}, {0.0, 0.0}, {std::sqrt(2.0), std::sqrt(2.0)}, 1};
    const auto e = exit_time(tr, kUnit, 0.05);
    EXPECT_FALSE(e.exited);
    EXPECT_EQ(e.tauhat, 0.05);
    EXPECT_EQ(e.endpoint, tr.position(0.05));
}

TEST(ExitTime, DriftAgainstSpreadMatchesBisection) {
    // x(s) = 0.99 + 2 s - sqrt(s) first dips, then returns to x = 1 near s = 0.26.
    const BranchTrajectory tr{{0.99, 0.5}, {2.0, 0.0}, {-1.0, 0.0}, 1};
    const auto short_step = exit_time(tr, kUnit, 0.05);
    EXPECT_FALSE(short_step.exited);
    EXPECT_EQ(short_step.tauhat, bisection_oracle(tr, kUnit, 0.05));
    const auto e = exit_time(tr, kUnit, 0.3);
    EXPECT_TRUE(e.exited);
    EXPECT_GT(e.tauhat, 0.25);
    EXPECT_NEAR(e.tauhat, bisection_oracle(tr, kUnit, 0.3), 1e-9);
    EXPECT_EQ(e.endpoint.x, 1.0);
}

TEST(ExitTime, RejectsBadArguments) {
    const BranchTrajectory tr{{1.5, 0.5}, {0.0, 0.0}, {1.0, 1.0}, 1};
    EXPECT_THROW(exit_time(tr, kUnit, 0.05), ArgumentError);
    const BranchTrajectory ok{{0.5, 0.5}, {0.0, 0.0}, {1.0, 1.0}, 1};
    EXPECT_THROW(exit_time(ok, kUnit, 0.0), ArgumentError);
}

TEST(ExitTime, TouchExactlyAtStepEndCountsAsExit) {
    // 0.75 + 0.5 * sqrt(0.25) = 1.0 at s = dt.
    const BranchTrajectory tr{{0.75, 0.5}, {0.0, 0.0}, {0.5, 0.0}, 1};
    const auto e = exit_time(tr, kUnit, 0.25);
    EXPECT_TRUE(e.exited);
    EXPECT_NEAR(e.tauhat, 0.25, 1e-15);
    EXPECT_EQ(e.endpoint.x, 1.0);
}

TEST(ExitTime, CornerTieGoesToX) {
    const BranchTrajectory tr{{0.9, 0.9}, {0.0, 0.0}, {1.0, 1.0}, 1};
    const auto e = exit_time(tr, kUnit, 0.05);
    EXPECT_TRUE(e.exited);
    EXPECT_NEAR(e.tauhat, 0.01, 1e-15);
    EXPECT_EQ(e.endpoint.x, 1.0);
    EXPECT_LE(e.endpoint.y, 1.0);
}

TEST(ExitTime, RandomCasesMatchBisectionAndStayInside) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pos(0.001, 0.999), sig(0.0, 2.0), rho(-1.0, 1.0), drift(-3.0, 3.0),
        step(1e-4, 0.1);
    int exits = 0;
    for (int k = 0; k < 1000; ++k) {
        const Point2 node{pos(rng), pos(rng)};
        const auto c = sample(sig(rng), sig(rng), rho(rng), drift(rng), drift(rng));
        const double dt = step(rng);
        const auto set = branch_set(node, c, kUnit, dt);
        for (int b = 0; b < 4; ++b) {
            const auto& tr = set.trajectories[b];
            EXPECT_NEAR(set.tauhat[b], bisection_oracle(tr, kUnit, dt), 1e-9) << "case " << k << " branch " << b;
            for (int q = 1; q < 100; ++q) {
                EXPECT_TRUE(kUnit.strictly_inside(tr.position(set.tauhat[b] * q / 100.0)));
            }
            if (set.exited[b]) {
                ++exits;
                EXPECT_TRUE(kUnit.on_boundary(set.endpoints[b], 1e-12));
            } else {
                EXPECT_EQ(set.tauhat[b], dt);
                EXPECT_TRUE(kUnit.strictly_inside(set.endpoints[b]));
            }
        }
    }
    EXPECT_GT(exits, 100);
}

TEST(BranchSetTest, FarFromBoundary) {
    const auto set = branch_set({0.5, 0.5}, sample(0.5, 0.5, 0.3), kUnit, 0.01);
    EXPECT_EQ(set.exit_count(), 0);
    for (double t : set.tauhat) EXPECT_EQ(t, 0.01);
}

TEST(BranchSetTest, RemarkNodeNearRightEdge) {
    const double dt = 0.01;
    const auto set = branch_set({0.95, 0.5}, sample(1.0, 1.0, 1.0), kUnit, dt);
    EXPECT_TRUE(set.exited[0]);
    EXPECT_LT(set.tauhat[0], dt);
    EXPECT_NEAR(set.tauhat[0], 0.05 * 0.05 / 2.0, 1e-15);
    for (int k = 1; k < 4; ++k) {
        EXPECT_FALSE(set.exited[k]);
        EXPECT_EQ(set.tauhat[k], dt);
    }
}

TEST(Weights, EqualTimes) {
    const auto w = branch_weights({0.02, 0.02, 0.02, 0.02});
    for (double o : w.omega) EXPECT_DOUBLE_EQ(o, 0.25);
}

TEST(Weights, SquaredStepExample) {
    const double dt = 0.01;
    const auto w = branch_weights({dt * dt, dt, dt, dt});
    EXPECT_NEAR(w.omega[0], 1.0 / 1.21, 1e-15);
    EXPECT_NEAR(w.omega[1], 0.1 / 2.2, 1e-15);
    EXPECT_NEAR(w.omega[2], 0.1 / 1.21, 1e-15);
    EXPECT_NEAR(w.omega[3], 0.1 / 2.2, 1e-15);
}

TEST(Weights, MomentIdentitiesRandom) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 100000; ++k) {
        std::array<double, 4> t;
        for (auto& v : t) v = 1.0 - u(rng);  // (0, 1]
        const auto w = branch_weights(t);
        double sum = 0.0;
        for (double o : w.omega) {
            ASSERT_GE(o, 0.0);
            sum += o;
        }
        ASSERT_NEAR(sum, 1.0, 1e-12);
        const double signed_t = w.omega[0] * t[0] - w.omega[1] * t[1] + w.omega[2] * t[2] - w.omega[3] * t[3];
        const double scale_t = w.omega[0] * t[0] + w.omega[1] * t[1] + w.omega[2] * t[2] + w.omega[3] * t[3];
        ASSERT_LE(std::abs(signed_t), 1e-12 * scale_t);
        const double a = w.omega[0] * std::sqrt(t[0]), c = w.omega[2] * std::sqrt(t[2]);
        const double b = w.omega[1] * std::sqrt(t[1]), d = w.omega[3] * std::sqrt(t[3]);
        ASSERT_LE(std::abs(a - c), 1e-12 * std::max(a, c));
        ASSERT_LE(std::abs(b - d), 1e-12 * std::max(b, d));
    }
}

TEST(Weights, SmallerStoppingTimeGetsLargerWeight) {
    const auto w = branch_weights({0.001, 0.02, 0.01, 0.02});
    EXPECT_GT(w.omega[0], w.omega[2]);
    EXPECT_DOUBLE_EQ(w.omega[1], w.omega[3]);
}

TEST(Weights, RejectNonPositive) {
    EXPECT_THROW(branch_weights({0.0, 0.1, 0.1, 0.1}), ArgumentError);
    EXPECT_THROW(branch_weights({0.1, 0.1, -0.1, 0.1}), ArgumentError);
}

TEST(UniformStopTest, NoExitIsIdentity) {
    const auto set = branch_set({0.5, 0.5}, sample(0.5, 0.7, -0.2, 0.3, 0.1), kUnit, 0.01);
    const auto u = uniform_stop(set, kUnit);
    EXPECT_EQ(u.tauhat, 0.01);
    EXPECT_FALSE(u.stopped_early(0.01));
    for (int k = 0; k < 4; ++k) EXPECT_EQ(u.endpoints[k], set.endpoints[k]);
}

TEST(UniformStopTest, RemarkConfiguration) {
    const double dt = 0.01;
    const Point2 node{0.95, 0.5};
    const auto set = branch_set(node, sample(1.0, 1.0, 1.0), kUnit, dt);
    const auto u = uniform_stop(set, kUnit);
    EXPECT_EQ(u.stopping_branch, 0);
    EXPECT_DOUBLE_EQ(u.tauhat, set.tauhat[0]);
    EXPECT_TRUE(u.stopped_early(dt));
    EXPECT_TRUE(u.on_boundary[0]);
    EXPECT_NEAR(u.endpoints[1].x, node.x, 1e-15);
    EXPECT_NEAR(u.endpoints[3].y, node.y, 1e-15);
    const double d = std::sqrt(2.0 * u.tauhat);
    EXPECT_NEAR(u.endpoints[2].x, node.x - d, 1e-15);
    EXPECT_NEAR(u.endpoints[2].y, node.y - d, 1e-15);
}

TEST(UniformStopTest, ReevaluatedEndpointsMatchTrajectories) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> pos(0.01, 0.99), sig(0.0, 2.0), rho(-1.0, 1.0), drift(-2.0, 2.0);
    for (int k = 0; k < 1000; ++k) {
        const auto set =
            branch_set({pos(rng), pos(rng)}, sample(sig(rng), sig(rng), rho(rng), drift(rng), drift(rng)), kUnit, 0.05);
        const auto u = uniform_stop(set, kUnit);
        for (int b = 0; b < 4; ++b) {
            if (set.tauhat[b] == u.tauhat) continue;
            const auto p = set.trajectories[b].position(u.tauhat);
            EXPECT_NEAR(u.endpoints[b].x, p.x, 1e-14);
            EXPECT_NEAR(u.endpoints[b].y, p.y, 1e-14);
            EXPECT_TRUE(kUnit.in_closure(u.endpoints[b]));
        }
    }
}
