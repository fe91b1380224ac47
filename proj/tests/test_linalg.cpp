#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "scopt/errors.hpp"
#include "scopt/linalg.hpp"

using namespace scopt;

namespace {

Matrix random_spd(Eigen::Index n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Matrix a(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            a(i, j) = normal(rng);
        }
    }
    return a * a.transpose() + 0.5 * Matrix::Identity(n, n);
}

} // namespace

TEST(SymMatrix, RejectsAsymmetricInput)
{
    Matrix a(2, 2);
    a << 1.0, 2.0, 2.5, 1.0;
    EXPECT_THROW(SymMatrix{a}, AsymmetricInput);
    const SymMatrix s(a, SymmetryPolicy::Symmetrize);
    EXPECT_DOUBLE_EQ(s(0, 1), 2.25);
    EXPECT_DOUBLE_EQ(s(1, 0), 2.25);
}

TEST(SymMatrix, AcceptsRoundingLevelAsymmetry)
{
    Matrix a(2, 2);
    a << 1.0, 2.0, 2.0 + 1e-14, 1.0;
    EXPECT_NO_THROW(SymMatrix{a});
}

TEST(Vec, RoundTripsThroughMat)
{
    const SymMatrix s(random_spd(5, 3));
    const Vector v = vec(s);
    ASSERT_EQ(v.size(), 25);
    EXPECT_EQ(mat(v).data(), s.data());
}

TEST(Vec, ColumnMajorLayout)
{
    Matrix a(2, 2);
    a << 1.0, 2.0, 2.0, 5.0;
    const Vector v = vec(SymMatrix(a));
    EXPECT_EQ(v(0), 1.0);
    EXPECT_EQ(v(1), 2.0);
    EXPECT_EQ(v(2), 2.0);
    EXPECT_EQ(v(3), 5.0);
}

TEST(Mat, RejectsNonSquareLength)
{
    EXPECT_THROW(mat(Vector::Zero(5)), NonSquareLength);
    EXPECT_THROW(side_length(8), NonSquareLength);
    EXPECT_EQ(side_length(49), 7u);
}

TEST(Cholesky, ReconstructsInput)
{
    const Matrix a = random_spd(6, 11);
    const CholeskyFactor f = cholesky(SymMatrix(a));
    EXPECT_LE((f.reconstruct() - a).norm(), 1e-12 * a.norm());
}

TEST(Cholesky, ReportsFailingPivot)
{
    Matrix a = Matrix::Identity(3, 3);
    a(2, 2) = -1.0;
    try {
        cholesky(SymMatrix(a));
        FAIL() << "expected NotPositiveDefinite";
    } catch (const NotPositiveDefinite& e) {
        EXPECT_EQ(e.pivot(), 2u);
    }
}

TEST(LogDet, MatchesEigenvalues)
{
    const Matrix a = random_spd(7, 5);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
    const double expected = eig.eigenvalues().array().log().sum();
    EXPECT_NEAR(log_det(SymMatrix(a)), expected, 1e-10 * std::abs(expected));
}

TEST(LogDet, DiagonalExample)
{
    EXPECT_NEAR(log_det(SymMatrix::diagonal(Vector::Constant(3, std::exp(1.0)))), 3.0, 1e-14);
}

TEST(Inverse, ProducesIdentity)
{
    const Matrix a = random_spd(8, 9);
    const SymMatrix inv = inverse(cholesky(SymMatrix(a)));
    EXPECT_LE((a * inv.data() - Matrix::Identity(8, 8)).norm(), 1e-10);
    EXPECT_EQ(inv.data(), inv.data().transpose());
}

TEST(MinEigPower, IdentityGivesOne)
{
    EXPECT_DOUBLE_EQ(min_eig_power(SymMatrix::identity(4), 20), 1.0);
}

TEST(MinEigPower, ExchangeableMatrix)
{
    Matrix a(2, 2);
    a << 2.0, 1.0, 1.0, 2.0;
    EXPECT_NEAR(min_eig_power(SymMatrix(a), 20), 1.0, 1e-8);
}

TEST(MinEigPower, CloseToEigensolverOnRandomMatrices)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Matrix a = random_spd(10, seed);
        const double truth = Eigen::SelfAdjointEigenSolver<Matrix>(a).eigenvalues().minCoeff();
        const double est = min_eig_power(SymMatrix(a), 200);
        EXPECT_GE(est, truth * (1.0 - 1e-9));
        EXPECT_LE(est, truth * 1.05);
    }
}

TEST(MinEigPower, RejectsZeroIterations)
{
    EXPECT_THROW(min_eig_power(SymMatrix::identity(2), 0), InvalidArgument);
}
