#pragma once

#include <cstddef>
#include <functional>
#include <optional>

#include "scopt/covariance_model.hpp"

namespace scopt {

/// Everything the subproblem
///
///   min_d  G(d) = U(d, x_i) + (lambda/rho) ||d||_1
///        = 1/2 d^T H d + z^T d + (lambda/rho) ||d||_1 + const
///
/// needs at a fixed outer iterate x_i: the model (spec, iterate), the
/// Lipschitz constant L of the smooth part, and z = grad f(x_i) - H x_i.
class SubproblemContext
{
public:
    SubproblemContext(const ProblemSpec& spec, const Iterate& it, double lipschitz);

    /// L from lipschitz_L() with the given number of power iterations.
    static SubproblemContext with_power_lipschitz(const ProblemSpec& spec, const Iterate& it,
                                                  std::size_t power_iters = kDefaultPowerIterations);

    const ProblemSpec& spec() const noexcept { return *spec_; }
    const Iterate& iterate() const noexcept { return *it_; }
    double lipschitz() const noexcept { return lipschitz_; }
    double l1_weight() const noexcept { return spec_->l1_weight(); }
    const Vector& z() const noexcept { return z_; }

    Vector hessian(const Vector& v) const { return hessian_apply(*spec_, *it_, v); }

    /// grad phi(d) = H d + z, evaluated as grad f(x_i) + H (d - x_i).
    Vector grad_phi(const Vector& delta) const;

private:
    const ProblemSpec* spec_;
    const Iterate* it_;
    double lipschitz_;
    Vector z_;
};

/// Componentwise sign(x) max(|x| - t, 0).
Vector soft_threshold(const Vector& x, double t);

/// G(d) = f(x_i) + grad f(x_i)^T (d - x_i) + 1/2 (d - x_i)^T H (d - x_i) + g(d).
double surrogate_G(const SubproblemContext& ctx, const Vector& delta);

/// 1/2 d^T H d + z^T d + g(d): differs from surrogate_G by a constant.
double surrogate_reduced(const SubproblemContext& ctx, const Vector& delta);

/// Minimum-norm element of the subdifferential of G at d, given grad phi(d).
Vector min_norm_subgradient(const Vector& delta, const Vector& grad_phi, double l1_weight);

/// G is (1/rho)-strongly convex (H >= I/rho), so for any subgradient s at d,
/// G(d) - G* <= rho/2 ||s||^2 and ||d - d*|| <= rho ||s||.
double strong_convexity_gap_bound(double rho, double subgradient_norm);

struct SubproblemState
{
    Vector delta;        ///< current iterate d^k
    Vector momentum;     ///< extrapolated point y^k the next prox step starts from
    double t_momentum = 1.0;
    double lipschitz = 0.0;
    Vector z;
    std::size_t k = 0;

    static SubproblemState start(const SubproblemContext& ctx, const Vector& delta0);
};

/// One proximal-gradient (ISTA) step from state.delta:
/// d^{k+1} = S_{lambda/(L rho)}(d^k - grad phi(d^k) / L). Momentum is reset.
SubproblemState ista_step(const SubproblemState& st, const SubproblemContext& ctx);

/// One accelerated step from state.momentum (textbook FISTA update of t).
SubproblemState fista_step(const SubproblemState& st, const SubproblemContext& ctx);

struct InnerRecord
{
    std::size_t k;
    double gap_bound;
    double surrogate_value;  ///< G(d^k) minus the constant f(x_i)
    bool restarted;
};

struct InnerOptions
{
    /// Function-value restart of the momentum; off reproduces textbook FISTA.
    bool restart = true;
    /// Optional tighter goal. The solve stops at gap <= eps_target, or at
    /// gap <= eps once progress stalls. 0 means eps_target = eps.
    double eps_target = 0.0;
    /// Iterations without a 1% improvement of the best certificate that count as a stall.
    std::size_t stall_window = 200;
    /// When false, hitting max_inner returns the best certified iterate with
    /// reached_eps = false instead of throwing.
    bool throw_on_cap = true;
    std::function<void(const InnerRecord&)> on_iteration;
};

struct InnerResult
{
    Vector delta;
    std::size_t iterations = 0;
    double gap_bound = 0.0;   ///< certified upper bound on G(delta) - G(delta*)
    double c_used = 0.0;      ///< validated bound on ||delta* - delta0||^2
    std::size_t restarts = 0;
    bool certified_by_count = false;
    bool reached_eps = true;  ///< gap_bound <= eps
};

/// Solves the subproblem to certified accuracy eps with FISTA.
///
/// Two certificates are tracked and the first to reach eps wins:
///  - iteration count: K(c) = ceil(sqrt(2 L c / eps) - 1) iterations of
///    unrestarted FISTA give gap <= 2 L c / (K + 1)^2, where c >= ||d* - d0||^2
///    is obtained by doubling c0 = max(1, 2 ||d0||^2) until it covers the
///    strong-convexity distance bound at d0;
///  - residual: gap <= rho/2 ||s||^2 with s the minimum-norm subgradient
///    at the current iterate.
///
/// `warm_start` defaults to x_i. Throws MaxInnerIterations if max_inner
/// iterations pass without reaching eps, unless options.throw_on_cap is off.
InnerResult fista_solve(const SubproblemContext& ctx, const std::optional<Vector>& warm_start,
                        double eps, std::size_t max_inner, const InnerOptions& options = {});

/// Iteration count from the FISTA rate bound: ceil(sqrt(2 L c / eps) - 1), at least 0.
std::size_t fista_iteration_bound(double lipschitz, double c, double eps);

/// sqrt(2 gap_bound): certified local-norm distance to the exact subproblem solution.
double inexactness_norm_bound(const InnerResult& res);

} // namespace scopt
