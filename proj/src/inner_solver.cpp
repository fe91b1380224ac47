#include "scopt/inner_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scopt {

namespace {

// Iterates of the subproblem are symmetric in exact arithmetic; remove the
// rounding drift so that mat(d) stays exactly symmetric.
void symmetrize_in_place(Vector& d, std::size_t n)
{
    if (n < 2) {
        return;
    }
    auto m = as_matrix(d, n);
    const Eigen::Index k = m.rows();
    for (Eigen::Index j = 0; j < k; ++j) {
        for (Eigen::Index i = j + 1; i < k; ++i) {
            const double avg = 0.5 * (m(i, j) + m(j, i));
            m(i, j) = avg;
            m(j, i) = avg;
        }
    }
}

// G(d) - f(x_i), given hd = H (d - x_i).
double shifted_surrogate(const SubproblemContext& ctx, const Vector& d, const Vector& hd)
{
    const Vector disp = d - ctx.iterate().x();
    return ctx.iterate().grad().dot(disp) + 0.5 * disp.dot(hd) + ctx.l1_weight() * d.lpNorm<1>();
}

// Norm of min_norm_subgradient without materializing it.
double subgradient_norm(const Vector& delta, const Vector& grad_phi, double l1_weight)
{
    const auto d = delta.array();
    const auto g = grad_phi.array();
    const auto at_zero = (g.abs() - l1_weight).max(0.0);
    const auto s = (d > 0.0).select(g + l1_weight, (d < 0.0).select(g - l1_weight, at_zero));
    return std::sqrt(s.square().sum());
}

} // namespace

SubproblemContext::SubproblemContext(const ProblemSpec& spec, const Iterate& it, double lipschitz)
    : spec_(&spec), it_(&it), lipschitz_(lipschitz)
{
    if (!(lipschitz > 0.0) || !std::isfinite(lipschitz)) {
        throw InvalidArgument("Lipschitz constant must be positive and finite");
    }
    z_ = it.grad() - hessian_apply(spec, it, it.x());
}

SubproblemContext SubproblemContext::with_power_lipschitz(const ProblemSpec& spec, const Iterate& it,
                                                          std::size_t power_iters)
{
    return SubproblemContext(spec, it, lipschitz_L(spec, it, power_iters));
}

Vector SubproblemContext::grad_phi(const Vector& delta) const
{
    return it_->grad() + hessian(delta - it_->x());
}

Vector soft_threshold(const Vector& x, double t)
{
    if (t < 0.0) {
        throw InvalidArgument("soft-threshold level must be nonnegative");
    }
    return x.unaryExpr([t](double v) {
        const double mag = std::abs(v) - t;
        return mag > 0.0 ? std::copysign(mag, v) : 0.0;
    });
}

double surrogate_G(const SubproblemContext& ctx, const Vector& delta)
{
    const Vector disp = delta - ctx.iterate().x();
    return ctx.iterate().f_value() + shifted_surrogate(ctx, delta, ctx.hessian(disp));
}

double surrogate_reduced(const SubproblemContext& ctx, const Vector& delta)
{
    return 0.5 * delta.dot(ctx.hessian(delta)) + ctx.z().dot(delta)
         + ctx.l1_weight() * delta.lpNorm<1>();
}

Vector min_norm_subgradient(const Vector& delta, const Vector& grad_phi, double l1_weight)
{
    Vector s(delta.size());
    for (Eigen::Index j = 0; j < delta.size(); ++j) {
        const double gj = grad_phi(j);
        if (delta(j) > 0.0) {
            s(j) = gj + l1_weight;
        } else if (delta(j) < 0.0) {
            s(j) = gj - l1_weight;
        } else {
            const double mag = std::abs(gj) - l1_weight;
            s(j) = mag > 0.0 ? std::copysign(mag, gj) : 0.0;
        }
    }
    return s;
}

double strong_convexity_gap_bound(double rho, double subgradient_norm)
{
    return 0.5 * rho * subgradient_norm * subgradient_norm;
}

SubproblemState SubproblemState::start(const SubproblemContext& ctx, const Vector& delta0)
{
    SubproblemState st;
    st.delta = delta0;
    st.momentum = delta0;
    st.t_momentum = 1.0;
    st.lipschitz = ctx.lipschitz();
    st.z = ctx.z();
    st.k = 0;
    return st;
}

SubproblemState ista_step(const SubproblemState& st, const SubproblemContext& ctx)
{
    const double lip = st.lipschitz;
    const Vector grad = ctx.grad_phi(st.delta);
    SubproblemState next = st;
    next.delta = soft_threshold(st.delta - grad / lip, ctx.l1_weight() / lip);
    next.momentum = next.delta;
    next.t_momentum = 1.0;
    next.k = st.k + 1;
    return next;
}

SubproblemState fista_step(const SubproblemState& st, const SubproblemContext& ctx)
{
    const double lip = st.lipschitz;
    const Vector grad = ctx.grad_phi(st.momentum);
    SubproblemState next = st;
    next.delta = soft_threshold(st.momentum - grad / lip, ctx.l1_weight() / lip);
    next.t_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * st.t_momentum * st.t_momentum));
    next.momentum = next.delta + ((st.t_momentum - 1.0) / next.t_momentum) * (next.delta - st.delta);
    next.k = st.k + 1;
    return next;
}

std::size_t fista_iteration_bound(double lipschitz, double c, double eps)
{
    const double k = std::ceil(std::sqrt(2.0 * lipschitz * c / eps) - 1.0);
    if (!(k > 0.0)) {
        return 0;
    }
    if (k >= static_cast<double>(std::numeric_limits<std::size_t>::max() / 2)) {
        return std::numeric_limits<std::size_t>::max() / 2;
    }
    return static_cast<std::size_t>(k);
}

InnerResult fista_solve(const SubproblemContext& ctx, const std::optional<Vector>& warm_start,
                        double eps, std::size_t max_inner, const InnerOptions& options)
{
    if (!(eps > 0.0)) {
        throw InvalidArgument("inner accuracy must be positive");
    }
    const ProblemSpec& spec = ctx.spec();
    const Iterate& it = ctx.iterate();
    const std::size_t n = spec.dim();
    const double rho = spec.rho();
    const double weight = ctx.l1_weight();
    const double lip = ctx.lipschitz();
    const double target = options.eps_target > 0.0 ? std::min(options.eps_target, eps) : eps;
    const Vector& grad_x = it.grad();
    const Vector& x = it.x();

    Vector d = warm_start.value_or(x);
    if (static_cast<std::size_t>(d.size()) != n * n) {
        throw DimensionMismatch("warm start has the wrong length");
    }
    symmetrize_in_place(d, n);

    Matrix scratch;
    Vector disp = d - x;
    Vector hd;
    hessian_apply_into(spec, it, disp, hd, scratch);
    Vector grad_d = grad_x + hd;
    double g_d = grad_x.dot(disp) + 0.5 * disp.dot(hd) + weight * d.lpNorm<1>();
    const double dist0 = rho * subgradient_norm(d, grad_d, weight);
    double gap = strong_convexity_gap_bound(rho, dist0 / rho);

    InnerResult result;
    result.c_used = std::max(1.0, 2.0 * d.squaredNorm());
    while (result.c_used < dist0 * dist0) {
        result.c_used *= 2.0;
    }
    const std::size_t count_bound = fista_iteration_bound(lip, result.c_used, eps);

    result.delta = d;
    result.gap_bound = gap;
    if (options.on_iteration) {
        options.on_iteration({0, gap, g_d, false});
    }
    if (gap <= target) {
        return result;
    }

    Vector y = d;
    Vector hy = hd;
    Vector grad_y = grad_d;
    Vector d_new(d.size());
    Vector hd_new(d.size());
    double t = 1.0;
    bool ever_restarted = false;
    double stall_reference = gap;
    std::size_t last_improvement = 0;
    const double shrink = weight / lip;

    for (std::size_t k = 1; k <= max_inner; ++k) {
        d_new = y - grad_y / lip;
        d_new = d_new.array().sign() * (d_new.array().abs() - shrink).max(0.0);
        symmetrize_in_place(d_new, n);
        disp = d_new - x;
        hessian_apply_into(spec, it, disp, hd_new, scratch);
        grad_d = grad_x + hd_new;
        const double g_new = grad_x.dot(disp) + 0.5 * disp.dot(hd_new) + weight * d_new.lpNorm<1>();

        double gap_new = strong_convexity_gap_bound(rho, subgradient_norm(d_new, grad_d, weight));
        bool by_count = false;
        if (!ever_restarted && k >= count_bound) {
            const double kp1 = static_cast<double>(k + 1);
            const double count_gap = 2.0 * lip * result.c_used / (kp1 * kp1);
            if (count_gap < gap_new) {
                gap_new = count_gap;
                by_count = true;
            }
        }

        const bool restart = options.restart && g_new > g_d;
        const double t_new = restart ? 1.0 : 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        if (restart) {
            ++result.restarts;
            ever_restarted = true;
            y = d_new;
            hy = hd_new;
            grad_y = grad_d;
        } else {
            const double beta = (t - 1.0) / t_new;
            y = (1.0 + beta) * d_new - beta * d;
            hy = (1.0 + beta) * hd_new - beta * hd;
            grad_y = grad_x + hy;
        }
        t = t_new;
        d.swap(d_new);
        hd.swap(hd_new);
        g_d = g_new;

        if (options.on_iteration) {
            options.on_iteration({k, gap_new, g_new, restart});
        }
        result.iterations = k;
        if (gap_new < result.gap_bound) {
            result.delta = d;
            result.gap_bound = gap_new;
            result.certified_by_count = by_count;
        }
        if (result.gap_bound < 0.99 * stall_reference) {
            stall_reference = result.gap_bound;
            last_improvement = k;
        }
        if (result.gap_bound <= target) {
            return result;
        }
        if (result.gap_bound <= eps && k - last_improvement >= options.stall_window) {
            return result;
        }
    }
    if (result.gap_bound <= eps) {
        return result;
    }
    if (!options.throw_on_cap) {
        result.reached_eps = false;
        return result;
    }
    throw MaxInnerIterations(max_inner, result.gap_bound, eps);
}

double inexactness_norm_bound(const InnerResult& res)
{
    return std::sqrt(2.0 * res.gap_bound);
}

} // namespace scopt
