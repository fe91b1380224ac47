#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "scopt/linalg.hpp"

namespace scopt {

/// One instance of the l1-regularized covariance problem
///
///   F(x) = 1/(2 rho) ||x - vec(S)||^2 - log det mat(x) + (lambda/rho) ||x||_1
///
/// where S is the sample covariance. The first two terms form the smooth,
/// self-concordant part f; the last is g.
class ProblemSpec
{
public:
    /// Throws InvalidArgument unless rho > 0, lambda >= 0 and sigma_hat is
    /// positive semidefinite (rank-deficient sample covariances are fine).
    ProblemSpec(SymMatrix sigma_hat, double rho, double lambda);

    const SymMatrix& sigma_hat() const noexcept { return sigma_hat_; }
    const Vector& sigma_hat_vec() const noexcept { return sigma_hat_vec_; }
    double rho() const noexcept { return rho_; }
    double lambda() const noexcept { return lambda_; }
    std::size_t dim() const noexcept { return sigma_hat_.dim(); }

    /// lambda / rho, the weight on ||x||_1.
    double l1_weight() const noexcept { return lambda_ / rho_; }

private:
    SymMatrix sigma_hat_;
    Vector sigma_hat_vec_;
    double rho_;
    double lambda_;
};

/// A point x in dom F together with everything the inner solver reuses:
/// the Cholesky factor of mat(x), Theta^{-1}, f(x), g(x) and grad f(x).
/// Immutable once built.
class Iterate
{
public:
    /// Throws NotPositiveDefinite if mat(x) is not positive definite.
    Iterate(const ProblemSpec& spec, Vector x);

    std::size_t dim() const noexcept { return n_; }
    const Vector& x() const noexcept { return x_; }
    const CholeskyFactor& factor() const noexcept { return factor_; }
    const Matrix& theta_inv() const noexcept { return theta_inv_; }
    double f_value() const noexcept { return f_value_; }
    double g_value() const noexcept { return g_value_; }
    double objective() const noexcept { return f_value_ + g_value_; }
    const Vector& grad() const noexcept { return grad_; }

private:
    std::size_t n_;
    Vector x_;
    CholeskyFactor factor_;
    Matrix theta_inv_;
    double f_value_;
    double g_value_;
    Vector grad_;
};

/// (1/N) sum_j x_j x_j^T, optionally after subtracting the sample mean.
SymMatrix sample_covariance(std::span<const Vector> samples, bool center = false);

/// f(x) = 1/(2 rho) ||x - vec(S)||^2 - log det mat(x). Throws NotPositiveDefinite.
double smooth_objective(const ProblemSpec& spec, const Vector& x);

/// g(x) = (lambda / rho) ||x||_1.
double l1_term(const ProblemSpec& spec, const Vector& x);

/// F = f + g. Throws NotPositiveDefinite outside dom F.
double objective(const ProblemSpec& spec, const Vector& x);

/// grad f(x) = (x - vec(S)) / rho - vec(mat(x)^{-1}).
const Vector& gradient_f(const ProblemSpec& spec, const Iterate& it);

/// v / rho + vec(Theta^{-1} mat(v) Theta^{-1}); two n x n products, the
/// n^2 x n^2 Hessian is never formed.
Vector hessian_apply(const ProblemSpec& spec, const Iterate& it, const Vector& v);

/// hessian_apply writing into `out`, with `scratch` as the n x n workspace.
void hessian_apply_into(const ProblemSpec& spec, const Iterate& it, const Vector& v, Vector& out, Matrix& scratch);

/// sqrt(v^T hess f(x) v).
double local_norm(const ProblemSpec& spec, const Iterate& it, const Vector& v);

/// Multiplier applied to power-method lambda_min estimates before they enter
/// the Lipschitz constant, so that L errs on the large side.
inline constexpr double kLambdaMinGuard = 0.99;

/// 1/rho + 1/(0.99 * lambda_min(Theta))^2 with lambda_min from min_eig_power.
double lipschitz_L(const ProblemSpec& spec, const Iterate& it,
                   std::size_t power_iters = kDefaultPowerIterations);

/// Random sparse SPD matrix with exactly k = round(sparsity * n^2) nonzeros
/// (k - n rounded down to even so the off-diagonal support is symmetric).
/// Off-diagonal values are Uniform(-1, 1); the matrix is shifted by
/// (|lambda_min| + 1) I and rescaled so that every diagonal entry equals
/// `diagonal_scale`.
SymMatrix synth_sparse_cov(std::size_t n, double sparsity, std::uint64_t seed,
                           double diagonal_scale = 1.0);

/// N draws from N(0, cov), computed as lower * z with z standard normal.
std::vector<Vector> gaussian_samples(const SymMatrix& cov, std::size_t count, std::uint64_t seed);

/// Number of entries with |a_ij| > threshold.
std::size_t count_nonzeros(const Matrix& a, double threshold = 0.0);

} // namespace scopt
