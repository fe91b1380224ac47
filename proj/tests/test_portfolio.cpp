#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "scopt/portfolio.hpp"

using namespace scopt;
using scopt::testing::random_spd;

namespace {

Vector vec3(double a, double b, double c)
{
    Vector v(3);
    v << a, b, c;
    return v;
}

} // namespace

TEST(SolveMvo, TwoAssetClosedForm)
{
    // Sigma = diag(1, 4), returns equal: minimize w1^2 + 4 w2^2 on w1 + w2 = 1.
    // w = (0.8, 0.2), risk 0.64 + 0.16 = 0.8.
    Vector r = Vector::Constant(2, 0.01);
    const MvoInstance inst{SymMatrix::diagonal((Vector(2) << 1.0, 4.0).finished()), r, 0.01, 1.0};
    const Portfolio p = solve_mvo(inst);
    EXPECT_NEAR(p.weights(0), 0.8, 1e-6);
    EXPECT_NEAR(p.weights(1), 0.2, 1e-6);
    EXPECT_NEAR(p.trained_risk, 0.8, 1e-6);
}

TEST(SolveMvo, IdentityCovarianceGivesEqualWeights)
{
    const std::size_t n = 7;
    const MvoInstance inst{SymMatrix::identity(n), Vector::Constant(n, 0.02), 0.04, 2.0};
    const Portfolio p = solve_mvo(inst);
    EXPECT_LE((p.weights - Vector::Constant(n, 2.0 / 7.0)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(SolveMvo, ReturnConstraintBindsOnTarget)
{
    // Sigma = I, r = (0, 1), mu = 0.75 forces w = (0.25, 0.75).
    const MvoInstance inst{SymMatrix::identity(2), (Vector(2) << 0.0, 1.0).finished(), 0.75, 1.0};
    const Portfolio p = solve_mvo(inst);
    EXPECT_NEAR(p.weights(1), 0.75, 1e-8);
    EXPECT_LE(constraint_violation(inst, p.weights), 1e-10);
}

TEST(SolveMvo, InfeasibleTargetThrows)
{
    const MvoInstance inst{SymMatrix::identity(2), (Vector(2) << 0.0, 1.0).finished(), 2.0, 1.0};
    EXPECT_THROW(solve_mvo(inst), Infeasible);
}

TEST(SolveMvo, RiskFrontierIsMonotoneAboveMinimumVariance)
{
    const SymMatrix cov(random_spd(5, 3));
    const Vector r = (Vector(5) << 0.01, 0.02, 0.03, 0.04, 0.05).finished();
    double prev = -1.0;
    for (double mu = 0.035; mu <= 0.05 + 1e-12; mu += 0.003) {
        const Portfolio p = solve_mvo({cov, r, mu, 1.0});
        if (prev >= 0.0) {
            EXPECT_GE(p.trained_risk, prev - 1e-9);
        }
        prev = p.trained_risk;
    }
}

TEST(SolveMvo, KktHoldsOnRandomInstances)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.01, 0.02);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Eigen::Index n = 12;
        const MvoInstance inst{SymMatrix(random_spd(n, seed)), Vector::NullaryExpr(n, [&] { return u(rng); }), 0.0, 1.0};
        MvoInstance shifted = inst;
        shifted.target_return = inst.returns.mean();
        const Portfolio p = solve_mvo(shifted);
        EXPECT_LE(kkt_residual(shifted, p.weights), 1e-6);
        EXPECT_LE(kkt_sign_violation(shifted, p.weights), 1e-6);
        EXPECT_LE(constraint_violation(shifted, p.weights), 1e-9);
    }
}

TEST(KktSignViolation, VertexUsesFreeMultiplier)
{
    // Only feasible point is e_2; any minimizer certificate must accept it.
    const SymMatrix cov(random_spd(3, 4));
    const MvoInstance inst{cov, vec3(0.01, 0.02, 0.05), 0.05, 1.0};
    const Vector w = vec3(0.0, 0.0, 1.0);
    EXPECT_EQ(kkt_sign_violation(inst, w), 0.0);
    EXPECT_LE(kkt_residual(inst, w), 1e-15);
}

TEST(ProjectFeasible, FixedPointOnFeasibleSet)
{
    const Vector r = vec3(0.0, 1.0, 2.0);
    const Vector w = vec3(0.25, 0.5, 0.25);
    EXPECT_LE((project_feasible(w, r, 1.0, 1.0) - w).norm(), 1e-12);
}

TEST(ProjectFeasible, ResultIsFeasibleAndClosest)
{
    const Vector r = vec3(0.0, 1.0, 2.0);
    const Vector v = vec3(2.0, -1.0, 0.3);
    const Vector p = project_feasible(v, r, 0.8, 1.0);
    const MvoInstance inst{SymMatrix::identity(3), r, 0.8, 1.0};
    EXPECT_LE(constraint_violation(inst, p), 1e-12);
    // Feasible set is the segment w = (1 - 0.8 - t, ... ); brute force along it.
    double best = 1e300;
    for (int k = 0; k <= 100000; ++k) {
        const double w2 = 0.4 * k / 100000.0;
        const Vector w = vec3(1.0 - 0.8 + w2, 0.8 - 2.0 * w2, w2);
        if (w.minCoeff() >= 0.0) {
            best = std::min(best, (w - v).norm());
        }
    }
    EXPECT_LE((p - v).norm(), best + 1e-9);
}

TEST(EqualWeight, UniformAndRisk)
{
    const Portfolio p = equal_weight(4, 2.0);
    EXPECT_EQ(p.weights, Vector::Constant(4, 0.5));
    EXPECT_DOUBLE_EQ(oos_risk(p, SymMatrix::identity(4)), 1.0);
    EXPECT_THROW(oos_risk(p, SymMatrix::identity(3)), DimensionMismatch);
}

TEST(QuadraticRisk, Example)
{
    Matrix s(2, 2);
    s << 2.0, 0.5, 0.5, 1.0;
    EXPECT_DOUBLE_EQ(quadratic_risk((Vector(2) << 1.0, 2.0).finished(), SymMatrix(s)), 2.0 + 2.0 + 4.0);
}
