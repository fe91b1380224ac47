#include "scopt/covariance_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace scopt {

namespace {

void require_length(const ProblemSpec& spec, const Vector& v)
{
    const std::size_t n = spec.dim();
    if (static_cast<std::size_t>(v.size()) != n * n) {
        side_length(static_cast<std::size_t>(v.size()));
        throw DimensionMismatch("vector of length " + std::to_string(v.size())
                                + " does not match problem dimension " + std::to_string(n));
    }
}

} // namespace

ProblemSpec::ProblemSpec(SymMatrix sigma_hat, double rho, double lambda)
    : sigma_hat_(std::move(sigma_hat)), rho_(rho), lambda_(lambda)
{
    if (!(rho_ > 0.0) || !std::isfinite(rho_)) {
        throw InvalidArgument("rho must be positive");
    }
    if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) {
        throw InvalidArgument("lambda must be nonnegative");
    }
    if (sigma_hat_.dim() == 0) {
        throw InvalidArgument("sample covariance is empty");
    }
    if (!sigma_hat_.data().allFinite()) {
        throw InvalidArgument("sample covariance has non-finite entries");
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma_hat_.data(), Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    if (eig.eigenvalues().minCoeff() < -1e-10 * scale) {
        throw InvalidArgument("sample covariance is not positive semidefinite");
    }
    sigma_hat_vec_ = vec(sigma_hat_);
}

Iterate::Iterate(const ProblemSpec& spec, Vector x)
    : n_(spec.dim()), x_(std::move(x)), factor_(Matrix())
{
    require_length(spec, x_);
    const Matrix theta = symmetric_part(as_matrix(x_, n_));
    factor_ = cholesky(theta);
    theta_inv_ = inverse(factor_).data();

    const double rho = spec.rho();
    const Vector diff = x_ - spec.sigma_hat_vec();
    f_value_ = diff.squaredNorm() / (2.0 * rho) - factor_.log_det();
    g_value_ = spec.l1_weight() * x_.lpNorm<1>();
    grad_ = diff / rho;
    grad_ -= Eigen::Map<const Vector>(theta_inv_.data(), theta_inv_.size());
}

SymMatrix sample_covariance(std::span<const Vector> samples, bool center)
{
    if (samples.empty()) {
        throw EmptySampleSet();
    }
    const Eigen::Index n = samples.front().size();
    Matrix data(static_cast<Eigen::Index>(samples.size()), n);
    for (std::size_t j = 0; j < samples.size(); ++j) {
        if (samples[j].size() != n) {
            throw DimensionMismatch("sample " + std::to_string(j) + " has dimension "
                                    + std::to_string(samples[j].size()) + ", expected "
                                    + std::to_string(n));
        }
        data.row(static_cast<Eigen::Index>(j)) = samples[j].transpose();
    }
    if (center) {
        const Eigen::RowVectorXd mean = data.colwise().mean();
        data.rowwise() -= mean;
    }
    Matrix cov = Matrix::Zero(n, n);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(data.transpose());
    cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
    cov /= static_cast<double>(samples.size());
    return SymMatrix(cov, SymmetryPolicy::Symmetrize);
}

double smooth_objective(const ProblemSpec& spec, const Vector& x)
{
    require_length(spec, x);
    const std::size_t n = spec.dim();
    const CholeskyFactor factor = cholesky(symmetric_part(as_matrix(x, n)));
    return (x - spec.sigma_hat_vec()).squaredNorm() / (2.0 * spec.rho()) - factor.log_det();
}

double l1_term(const ProblemSpec& spec, const Vector& x)
{
    return spec.l1_weight() * x.lpNorm<1>();
}

double objective(const ProblemSpec& spec, const Vector& x)
{
    return smooth_objective(spec, x) + l1_term(spec, x);
}

const Vector& gradient_f(const ProblemSpec&, const Iterate& it)
{
    return it.grad();
}

Vector hessian_apply(const ProblemSpec& spec, const Iterate& it, const Vector& v)
{
    Vector out;
    Matrix scratch;
    hessian_apply_into(spec, it, v, out, scratch);
    return out;
}

void hessian_apply_into(const ProblemSpec& spec, const Iterate& it, const Vector& v, Vector& out, Matrix& scratch)
{
    require_length(spec, v);
    const std::size_t n = spec.dim();
    const Matrix& a = it.theta_inv();
    scratch.resize(a.rows(), a.cols());
    scratch.noalias() = a * as_matrix(v, n);
    out.resize(v.size());
    as_matrix(out, n).noalias() = scratch * a;
    out += v / spec.rho();
}

double local_norm(const ProblemSpec& spec, const Iterate& it, const Vector& v)
{
    const double q = v.dot(hessian_apply(spec, it, v));
    return std::sqrt(std::max(q, 0.0));
}

double lipschitz_L(const ProblemSpec& spec, const Iterate& it, std::size_t power_iters)
{
    const double lmin = kLambdaMinGuard * min_eig_power(it.factor(), power_iters);
    return 1.0 / spec.rho() + 1.0 / (lmin * lmin);
}

SymMatrix synth_sparse_cov(std::size_t n, double sparsity, std::uint64_t seed, double diagonal_scale)
{
    if (n == 0) {
        throw InvalidArgument("dimension must be positive");
    }
    if (!(sparsity > 0.0 && sparsity <= 1.0)) {
        throw InvalidArgument("sparsity must lie in (0, 1]");
    }
    if (!(diagonal_scale > 0.0)) {
        throw InvalidArgument("diagonal scale must be positive");
    }
    const auto k = static_cast<std::size_t>(std::llround(sparsity * static_cast<double>(n * n)));
    if (k < n) {
        throw SparsityTooLowForPD(k, n);
    }
    const std::size_t max_pairs = n * (n - 1) / 2;
    const std::size_t pairs = std::min((k - n) / 2, max_pairs);

    std::mt19937_64 rng(seed);

    // Partial Fisher-Yates over the strictly upper triangle.
    std::vector<std::size_t> slots(max_pairs);
    std::iota(slots.begin(), slots.end(), std::size_t{0});
    for (std::size_t s = 0; s < pairs; ++s) {
        std::uniform_int_distribution<std::size_t> pick(s, max_pairs - 1);
        std::swap(slots[s], slots[pick(rng)]);
    }

    // Upper-triangle slot index -> (row, col), row < col, rows enumerated in order.
    std::vector<std::size_t> row_start(n, 0);
    for (std::size_t i = 1; i < n; ++i) {
        row_start[i] = row_start[i - 1] + (n - i);
    }

    std::uniform_real_distribution<double> value(-1.0, 1.0);
    const auto ni = static_cast<Eigen::Index>(n);
    Matrix a = Matrix::Zero(ni, ni);
    for (std::size_t s = 0; s < pairs; ++s) {
        const std::size_t slot = slots[s];
        const auto row = static_cast<std::size_t>(
            std::upper_bound(row_start.begin(), row_start.end(), slot) - row_start.begin() - 1);
        const std::size_t col = row + 1 + (slot - row_start[row]);
        double v = 0.0;
        while (v == 0.0) {
            v = value(rng);
        }
        a(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = v;
        a(static_cast<Eigen::Index>(col), static_cast<Eigen::Index>(row)) = v;
    }

    const Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
    const double shift = std::abs(eig.eigenvalues().minCoeff()) + 1.0;
    a.diagonal().array() += shift;
    a *= diagonal_scale / shift;

    SymMatrix out(a, SymmetryPolicy::Symmetrize);
    cholesky(out); // construction-time check; throws if the shift was insufficient
    return out;
}

std::vector<Vector> gaussian_samples(const SymMatrix& cov, std::size_t count, std::uint64_t seed)
{
    const CholeskyFactor factor = cholesky(cov);
    const auto n = static_cast<Eigen::Index>(cov.dim());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Vector> out;
    out.reserve(count);
    Vector z(n);
    for (std::size_t j = 0; j < count; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            z(i) = normal(rng);
        }
        out.emplace_back(factor.lower().triangularView<Eigen::Lower>() * z);
    }
    return out;
}

std::size_t count_nonzeros(const Matrix& a, double threshold)
{
    return static_cast<std::size_t>((a.array().abs() > threshold).count());
}

} // namespace scopt
