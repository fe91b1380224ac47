#include "scopt/linalg.hpp"

#include <cmath>

namespace scopt {

namespace {

// Unblocked left-looking Cholesky. Only used to locate the failing pivot after
// the blocked factorization reports a problem, so speed is secondary.
Matrix cholesky_with_pivot_report(const Matrix& a)
{
    const Eigen::Index n = a.rows();
    Matrix lower = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double d = a(j, j) - lower.row(j).head(j).squaredNorm();
        if (!(d > 0.0) || !std::isfinite(d)) {
            throw NotPositiveDefinite(static_cast<std::size_t>(j));
        }
        const double ljj = std::sqrt(d);
        lower(j, j) = ljj;
        if (j + 1 < n) {
            const Eigen::Index rest = n - j - 1;
            lower.col(j).tail(rest) =
                (a.col(j).tail(rest) - lower.bottomLeftCorner(rest, j) * lower.row(j).head(j).transpose())
                / ljj;
        }
    }
    return lower;
}

} // namespace

Matrix symmetric_part(const Matrix& a)
{
    return 0.5 * (a + a.transpose());
}

double max_asymmetry(const Matrix& a)
{
    if (a.rows() == 0) {
        return 0.0;
    }
    return (a - a.transpose()).cwiseAbs().maxCoeff();
}

SymMatrix::SymMatrix(const Matrix& data, SymmetryPolicy policy)
{
    if (data.rows() != data.cols()) {
        throw DimensionMismatch("SymMatrix requires a square matrix");
    }
    if (policy == SymmetryPolicy::Reject) {
        const double dev = max_asymmetry(data);
        if (!(dev <= kSymmetryTolerance)) {
            throw AsymmetricInput(dev);
        }
    }
    data_ = symmetric_part(data);
}

SymMatrix SymMatrix::identity(std::size_t n)
{
    const auto k = static_cast<Eigen::Index>(n);
    return SymMatrix(Matrix::Identity(k, k));
}

SymMatrix SymMatrix::zero(std::size_t n)
{
    const auto k = static_cast<Eigen::Index>(n);
    return SymMatrix(Matrix::Zero(k, k));
}

SymMatrix SymMatrix::diagonal(const Vector& d)
{
    return SymMatrix(Matrix(d.asDiagonal()));
}

bool SymMatrix::is_positive_definite() const
{
    Eigen::LLT<Matrix> llt(data_);
    return llt.info() == Eigen::Success;
}

void CholeskyFactor::solve_in_place(Eigen::Ref<Matrix> b) const
{
    lower_.triangularView<Eigen::Lower>().solveInPlace(b);
    lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(b);
}

Vector CholeskyFactor::solve(const Vector& b) const
{
    Vector x = b;
    lower_.triangularView<Eigen::Lower>().solveInPlace(x);
    lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
}

double CholeskyFactor::log_det() const
{
    return 2.0 * lower_.diagonal().array().log().sum();
}

std::size_t side_length(std::size_t length)
{
    auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(length))));
    while (n * n > length) {
        --n;
    }
    while ((n + 1) * (n + 1) <= length) {
        ++n;
    }
    if (n * n != length) {
        throw NonSquareLength(length);
    }
    return n;
}

Vector vec(const SymMatrix& m)
{
    const Matrix& d = m.data();
    return Eigen::Map<const Vector>(d.data(), d.size());
}

SymMatrix mat(const Vector& v)
{
    const std::size_t n = side_length(static_cast<std::size_t>(v.size()));
    return SymMatrix(Matrix(as_matrix(v, n)), SymmetryPolicy::Reject);
}

CholeskyFactor cholesky(const Matrix& symmetric)
{
    Eigen::LLT<Matrix> llt(symmetric);
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite()
        && (llt.matrixLLT().diagonal().array() > 0.0).all()) {
        return CholeskyFactor(Matrix(llt.matrixL()));
    }
    // The blocked factorization failed; rerun the scalar recurrence to find
    // the pivot (or succeed if the failure was a rounding artefact).
    return CholeskyFactor(cholesky_with_pivot_report(symmetric));
}

CholeskyFactor cholesky(const SymMatrix& m)
{
    return cholesky(m.data());
}

double log_det(const CholeskyFactor& factor)
{
    return factor.log_det();
}

double log_det(const SymMatrix& m)
{
    return cholesky(m).log_det();
}

SymMatrix inverse(const CholeskyFactor& factor)
{
    const auto n = static_cast<Eigen::Index>(factor.dim());
    Matrix inv = Matrix::Identity(n, n);
    factor.solve_in_place(inv);
    return SymMatrix(inv, SymmetryPolicy::Symmetrize);
}

SymMatrix inverse(const SymMatrix& m)
{
    return inverse(cholesky(m));
}

double min_eig_power(const CholeskyFactor& factor, std::size_t iters)
{
    if (iters == 0) {
        throw InvalidArgument("min_eig_power needs at least one iteration");
    }
    const auto n = static_cast<Eigen::Index>(factor.dim());
    // Ramp start vector: never orthogonal to an eigenvector of an
    // exchangeable matrix (where all-ones would be).
    Vector v(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        v(j) = 1.0 + static_cast<double>(j) / static_cast<double>(n);
    }
    v.normalize();
    double rayleigh = 0.0;
    for (std::size_t k = 0; k < iters; ++k) {
        Vector w = factor.solve(v);
        rayleigh = v.dot(w) / v.dot(v);
        const double norm = w.norm();
        v = w / norm;
    }
    return 1.0 / rayleigh;
}

double min_eig_power(const SymMatrix& m, std::size_t iters)
{
    return min_eig_power(cholesky(m), iters);
}

} // namespace scopt
