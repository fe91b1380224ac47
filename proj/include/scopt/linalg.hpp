#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>

#include "scopt/errors.hpp"

namespace scopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Absolute tolerance on the largest |a_ij - a_ji| accepted by mat() and SymMatrix.
inline constexpr double kSymmetryTolerance = 1e-12;

enum class SymmetryPolicy
{
    Reject,      ///< throw AsymmetricInput if deviation exceeds kSymmetryTolerance
    Symmetrize,  ///< replace the input by (A + A^T) / 2 unconditionally
};

/// Dense symmetric n x n matrix. Symmetry is established on construction and
/// never broken afterwards (the type exposes only const access).
class SymMatrix
{
public:
    SymMatrix() = default;

    /// Validates symmetry within kSymmetryTolerance, then stores (A + A^T) / 2.
    explicit SymMatrix(const Matrix& data, SymmetryPolicy policy = SymmetryPolicy::Reject);

    static SymMatrix identity(std::size_t n);
    static SymMatrix zero(std::size_t n);
    static SymMatrix diagonal(const Vector& d);

    std::size_t dim() const noexcept { return static_cast<std::size_t>(data_.rows()); }
    const Matrix& data() const noexcept { return data_; }
    double operator()(std::size_t i, std::size_t j) const
    {
        return data_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

    /// True iff a Cholesky factorization succeeds.
    bool is_positive_definite() const;

private:
    Matrix data_;
};

/// Lower-triangular Cholesky factor: source = lower * lower^T.
class CholeskyFactor
{
public:
    explicit CholeskyFactor(Matrix lower) : lower_(std::move(lower)) {}

    std::size_t dim() const noexcept { return static_cast<std::size_t>(lower_.rows()); }
    const Matrix& lower() const noexcept { return lower_; }

    /// Solves (L L^T) x = b in place for every column of b.
    void solve_in_place(Eigen::Ref<Matrix> b) const;
    Vector solve(const Vector& b) const;

    double log_det() const;
    Matrix reconstruct() const { return lower_ * lower_.transpose(); }

private:
    Matrix lower_;
};

/// Column-stacking vectorization.
Vector vec(const SymMatrix& m);

/// Inverse of vec(). The length must be a perfect square; the resulting matrix
/// must be symmetric within kSymmetryTolerance and is then symmetrized.
SymMatrix mat(const Vector& v);

/// Integer square root of a vectorized matrix length; throws NonSquareLength.
std::size_t side_length(std::size_t length);

/// Zero-copy column-major view of a length n^2 vector as an n x n matrix.
inline Eigen::Map<const Matrix> as_matrix(const Vector& v, std::size_t n)
{
    return {v.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)};
}
inline Eigen::Map<Matrix> as_matrix(Vector& v, std::size_t n)
{
    return {v.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)};
}

/// Throws NotPositiveDefinite carrying the failing pivot.
CholeskyFactor cholesky(const SymMatrix& m);
CholeskyFactor cholesky(const Matrix& symmetric);

double log_det(const SymMatrix& m);
double log_det(const CholeskyFactor& factor);

SymMatrix inverse(const SymMatrix& m);
SymMatrix inverse(const CholeskyFactor& factor);

/// Default number of power iterations used for lambda_min estimates.
inline constexpr std::size_t kDefaultPowerIterations = 20;

/// Estimates lambda_min(M) by power iteration on M^{-1} (one Cholesky
/// factorization, then one pair of triangular solves per iteration). The
/// start vector is fixed, so the result is deterministic.
double min_eig_power(const SymMatrix& m, std::size_t iters = kDefaultPowerIterations);
double min_eig_power(const CholeskyFactor& factor, std::size_t iters = kDefaultPowerIterations);

/// Returns 1/2 (A + A^T) for an arbitrary square matrix.
Matrix symmetric_part(const Matrix& a);

/// Largest |a_ij - a_ji|.
double max_asymmetry(const Matrix& a);

} // namespace scopt
