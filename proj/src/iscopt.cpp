#include "scopt/iscopt.hpp"

#include <algorithm>
#include <cmath>

namespace scopt {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr std::size_t kRefinementRounds = 4;

double next_inner_target(const SolverConfig& cfg, double epsilon)
{
    if (!cfg.adaptive_inner) {
        return cfg.eps_inner;
    }
    const double e2 = epsilon * epsilon;
    return std::clamp(0.005 * e2 * e2, cfg.eps_inner_floor, cfg.eps_inner);
}

struct SubproblemSolve
{
    InnerResult inner;
    double epsilon;
};

SubproblemSolve solve_subproblem(const SubproblemContext& ctx, const std::optional<Vector>& warm, double eps,
                                 double eps_target, const SolverConfig& cfg, TraceSink* sink, std::size_t index)
{
    InnerOptions options;
    options.restart = cfg.restart;
    options.eps_target = eps_target;
    options.throw_on_cap = false;
    if (sink != nullptr && sink->wants_inner()) {
        options.on_iteration = [sink, index](const InnerRecord& r) { sink->on_inner(index, r); };
    }
    SubproblemSolve out{fista_solve(ctx, warm, eps, cfg.max_inner, options), 0.0};
    out.epsilon = newton_decrement(ctx, out.inner.delta);
    return out;
}

} // namespace

void SolverConfig::validate() const
{
    if (!(eps_inner > 0.0)) {
        throw InvalidArgument("eps_inner must be positive");
    }
    if (!(gamma > 0.0)) {
        throw InvalidArgument("gamma must be positive");
    }
    if (!(sigma > 0.0 && sigma < 1.0)) {
        throw InvalidArgument("sigma must lie in (0, 1)");
    }
    if (power_iters == 0) {
        throw InvalidArgument("power_iters must be at least 1");
    }
    if (!(wall_clock_limit > 0.0)) {
        throw InvalidArgument("wall_clock_limit must be positive");
    }
    if (!(eps_inner_floor > 0.0) || eps_inner_floor > eps_inner) {
        throw InvalidArgument("eps_inner_floor must lie in (0, eps_inner]");
    }
    if (max_inner == 0 || fls_probes == 0) {
        throw InvalidArgument("iteration caps must be positive");
    }
}

std::string to_string(StepKind kind)
{
    switch (kind) {
    case StepKind::Damped: return "damped";
    case StepKind::Full: return "full";
    case StepKind::Fls: return "fls";
    case StepKind::None: return "none";
    }
    return "unknown";
}

std::string to_string(Termination t)
{
    switch (t) {
    case Termination::Converged: return "converged";
    case Termination::NoiseFloor: return "noise_floor";
    case Termination::MaxIterations: return "max_iterations";
    case Termination::WallClock: return "wall_clock";
    }
    return "unknown";
}

double newton_decrement(const SubproblemContext& ctx, const Vector& delta)
{
    return local_norm(ctx.spec(), ctx.iterate(), delta - ctx.iterate().x());
}

double damped_tau(double epsilon_i, double eps_inner)
{
    const double noise = std::sqrt(2.0 * eps_inner);
    if (epsilon_i < noise) {
        throw DecrementBelowNoise(epsilon_i, noise);
    }
    if (epsilon_i == 0.0) {
        return 1.0;
    }
    const double excess = epsilon_i - noise;
    return excess / (epsilon_i * (excess + 1.0));
}

double omega_star(double t)
{
    if (!(t >= 0.0 && t < 1.0)) {
        throw OmegaStarDomain(t);
    }
    return -t - std::log1p(-t);
}

double descent_xi(double tau, double epsilon_i, double eps_inner)
{
    const double noise = std::sqrt(2.0 * eps_inner);
    const double excess = epsilon_i - noise;
    return -omega_star(tau * epsilon_i)
         - tau * (eps_inner - 0.5 * excess * excess - 0.5 * epsilon_i * epsilon_i);
}

std::optional<double> contraction_bound(double epsilon_i, double tau, double eps_inner)
{
    const double s = std::sqrt(2.0 * eps_inner);
    const double u = s + epsilon_i;
    const double d1 = 1.0 - tau * epsilon_i - tau * s;
    const double d2 = 1.0 - 4.0 * tau * u + 2.0 * tau * tau * u * u;
    if (!(d1 > 0.0) || !(d2 > 0.0)) {
        return std::nullopt;
    }
    const double first = (1.0 - tau * epsilon_i + tau * s) / d1;
    const double second = (1.0 - tau * (1.0 - s) + (2.0 * tau * tau - tau) * epsilon_i) / d2;
    return first * second * u + s;
}

std::optional<double> contraction_check(double epsilon_next, double epsilon_i, double tau, double eps_inner)
{
    const auto bound = contraction_bound(epsilon_i, tau, eps_inner);
    if (!bound) {
        return std::nullopt;
    }
    return *bound - epsilon_next;
}

double quadratic_phase_bound(double epsilon_i, double eps_inner)
{
    return 14.0 * epsilon_i * epsilon_i + std::sqrt(2.0 * eps_inner);
}

LineSearchResult forward_line_search(const ProblemSpec& spec, const Iterate& it, const Vector& delta,
                                     double tau_base, std::size_t max_probes)
{
    if (!(tau_base > 0.0 && tau_base <= 1.0)) {
        throw InvalidArgument("tau_base must lie in (0, 1]");
    }
    const double f0 = it.objective();
    const Vector& x = it.x();
    LineSearchResult out;
    out.tau = tau_base;
    out.F_value = f0;

    auto probe = [&](double tau) -> std::optional<double> {
        ++out.probes;
        try {
            const double value = objective(spec, (1.0 - tau) * x + tau * delta);
            if (value < f0) {
                return value;
            }
        } catch (const NotPositiveDefinite&) {
        }
        return std::nullopt;
    };

    if (max_probes == 0 || tau_base >= 1.0) {
        return out;
    }
    if (const auto v = probe(1.0)) {
        out.tau = 1.0;
        out.F_value = *v;
        out.improved_on_base = true;
        return out;
    }
    double lo = tau_base;
    double hi = 1.0;
    while (out.probes < max_probes) {
        const double mid = 0.5 * (lo + hi);
        if (const auto v = probe(mid)) {
            lo = mid;
            out.tau = mid;
            out.F_value = *v;
            out.improved_on_base = true;
        } else {
            hi = mid;
        }
    }
    return out;
}

Vector default_start(const ProblemSpec& spec)
{
    const std::size_t n = spec.dim();
    const auto ni = static_cast<Eigen::Index>(n);
    const double fallback = std::sqrt(spec.rho());
    Matrix start = Matrix::Zero(ni, ni);
    for (Eigen::Index j = 0; j < ni; ++j) {
        const double s = spec.sigma_hat().data()(j, j);
        start(j, j) = s > 0.0 ? s : fallback;
    }
    return Eigen::Map<const Vector>(start.data(), start.size());
}

OuterStepOutcome outer_step(const ProblemSpec& spec, const OuterState& state, const SolverConfig& cfg,
                            TraceSink* sink, std::size_t index)
{
    const Iterate& it = state.iterate;
    const SubproblemContext ctx = SubproblemContext::with_power_lipschitz(spec, it, cfg.power_iters);

    OuterStepOutcome out;
    double eps_hard = cfg.eps_inner;
    SubproblemSolve sub = solve_subproblem(ctx, state.warm_start, eps_hard, state.eps_target, cfg, sink, index);
    // The error of d_i enters epsilon_{i+1} additively; keep it below epsilon_i^2.
    for (std::size_t round = 0; round < kRefinementRounds; ++round) {
        const double wanted = next_inner_target(cfg, sub.epsilon);
        if (sub.inner.gap_bound <= wanted || !sub.inner.reached_eps) {
            break;
        }
        sub = solve_subproblem(ctx, sub.inner.delta, eps_hard, wanted, cfg, sink, index);
    }

    OuterRecord& rec = out.record;
    rec.i = index;
    rec.F_value = it.objective();
    rec.F_next = rec.F_value;

    auto finish = [&](OuterStepOutcome::Status status) {
        out.status = status;
        out.inner = sub.inner;
        rec.epsilon = sub.epsilon;
        rec.inner_iterations = sub.inner.iterations;
        rec.inner_gap = sub.inner.gap_bound;
        rec.step_kind = StepKind::None;
        return out;
    };

    if (sub.epsilon <= cfg.gamma) {
        return finish(OuterStepOutcome::Status::Converged);
    }
    if (!sub.inner.reached_eps && sub.epsilon < std::sqrt(2.0 * sub.inner.gap_bound)) {
        throw MaxInnerIterations(cfg.max_inner, sub.inner.gap_bound, eps_hard);
    }
    if (sub.epsilon < std::sqrt(2.0 * sub.inner.gap_bound)) {
        // Below the inexactness level the decrement carries no information.
        // Tighten once and look again.
        out.tightened = true;
        eps_hard *= 1e-2;
        const double retry_target = std::min(eps_hard, 1e-2 * sub.inner.gap_bound);
        sub = solve_subproblem(ctx, sub.inner.delta, eps_hard, retry_target, cfg, sink, index);
        if (sub.epsilon <= cfg.gamma) {
            return finish(OuterStepOutcome::Status::Converged);
        }
        if (sub.epsilon < std::sqrt(2.0 * sub.inner.gap_bound)) {
            if (!sub.inner.reached_eps) {
                throw MaxInnerIterations(cfg.max_inner, sub.inner.gap_bound, eps_hard);
            }
            return finish(OuterStepOutcome::Status::NoiseFloor);
        }
    }

    const InnerResult& inner = sub.inner;
    const double eps_i = sub.epsilon;
    const double eps_eff = inner.gap_bound;
    if (!inner.reached_eps) {
        if (!(std::sqrt(2.0 * eps_eff) <= 0.1 * eps_i * eps_i)) {
            throw MaxInnerIterations(cfg.max_inner, eps_eff, eps_hard);
        }
        rec.inner_capped = true;
    }
    rec.epsilon = eps_i;
    rec.inner_iterations = inner.iterations;
    rec.inner_gap = eps_eff;

    double tau = 1.0;
    StepKind kind = StepKind::Full;
    std::optional<double> fls_value;
    if (eps_i > cfg.sigma) {
        tau = damped_tau(eps_i, eps_eff);
        kind = StepKind::Damped;
        rec.tau_formula = tau;
        if (cfg.fls_enabled) {
            const LineSearchResult ls = forward_line_search(spec, it, inner.delta, tau, cfg.fls_probes);
            if (ls.improved_on_base && ls.tau > tau) {
                tau = ls.tau;
                kind = StepKind::Fls;
                fls_value = ls.F_value;
            }
        }
    } else {
        rec.tau_formula = 1.0;
    }

    std::optional<Iterate> next;
    for (std::size_t h = 0; h <= cfg.max_halvings; ++h) {
        try {
            next.emplace(spec, (1.0 - tau) * it.x() + tau * inner.delta);
            break;
        } catch (const NotPositiveDefinite&) {
            if (h == cfg.max_halvings) {
                throw Error("step left dom F after " + std::to_string(cfg.max_halvings) + " halvings");
            }
            tau *= 0.5;
            ++rec.halvings;
        }
    }

    rec.tau = tau;
    rec.step_kind = kind;
    rec.F_next = next->objective();
    if (kind == StepKind::Damped && rec.halvings == 0) {
        const double xi = descent_xi(tau, eps_i, eps_eff);
        rec.descent_xi = xi;
        rec.descent_residual = rec.F_value - xi - rec.F_next;
    }

    out.status = OuterStepOutcome::Status::Stepped;
    out.inner = inner;
    out.next = OuterState{std::move(*next), inner.delta, next_inner_target(cfg, eps_i)};
    return out;
}

SolveResult solve(const ProblemSpec& spec, const SolverConfig& cfg, const std::optional<Vector>& x0,
                  TraceSink* sink)
{
    cfg.validate();
    const auto start = Clock::now();

    std::optional<Iterate> first;
    if (x0) {
        try {
            first.emplace(spec, *x0);
        } catch (const NotPositiveDefinite&) {
            throw NotPositiveDefiniteStart();
        }
    } else {
        first.emplace(spec, default_start(spec));
    }

    OuterState state{std::move(*first), std::nullopt, cfg.eps_inner};
    OuterTrace trace;
    AuditCounters& audits = trace.audits;
    std::optional<OuterRecord> pending;
    std::optional<std::size_t> first_below_sigma;

    auto emit = [&](OuterRecord rec) {
        if (sink != nullptr) {
            sink->on_outer(rec);
        }
        trace.records.push_back(std::move(rec));
    };

    // Fill the audits of the previous record that need epsilon_{i+1}.
    auto settle_pending = [&](double eps_next) {
        if (!pending) {
            return;
        }
        OuterRecord& prev = *pending;
        const double eps_audit = std::max(cfg.eps_inner, prev.inner_gap);
        const auto residual = contraction_check(eps_next, prev.epsilon, prev.tau, eps_audit);
        prev.contraction_residual = residual;
        if (residual) {
            ++audits.contraction_checks;
            if (*residual < 0.0) {
                ++audits.contraction_failures;
            }
        } else {
            ++audits.contraction_not_applicable;
        }
        const bool full_region = prev.step_kind == StepKind::Full && prev.epsilon <= 3.0 / 40.0;
        const bool damped_region = prev.step_kind == StepKind::Damped && prev.epsilon <= 3.0 / 20.0;
        if (full_region || damped_region) {
            const double q = quadratic_phase_bound(prev.epsilon, eps_audit) - eps_next;
            prev.quadratic_residual = q;
            ++audits.quadratic_checks;
            if (q < 0.0) {
                ++audits.quadratic_failures;
            }
        }
        emit(std::move(prev));
        pending.reset();
    };

    auto finalize = [&](Termination why, const Iterate& at, double eps_last) {
        trace.termination = why;
        trace.final_F = at.objective();
        trace.final_epsilon = eps_last;
        trace.elapsed = seconds_since(start);
        if (first_below_sigma) {
            trace.steps_after_sigma = trace.iterations - *first_below_sigma;
        }
        SolveResult result;
        result.x = at.x();
        result.solution = SymMatrix(as_matrix(at.x(), spec.dim()), SymmetryPolicy::Symmetrize);
        result.trace = std::move(trace);
        return result;
    };

    double last_epsilon = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0;; ++i) {
        if (seconds_since(start) > cfg.wall_clock_limit) {
            if (pending) {
                emit(std::move(*pending));
                pending.reset();
            }
            throw WallClockExceeded(finalize(Termination::WallClock, state.iterate, last_epsilon));
        }
        if (i >= cfg.i_max) {
            if (pending) {
                emit(std::move(*pending));
                pending.reset();
            }
            return finalize(Termination::MaxIterations, state.iterate, last_epsilon);
        }

        OuterStepOutcome step = outer_step(spec, state, cfg, sink, i);
        if (step.tightened) {
            ++audits.noise_floor_retries;
        }
        last_epsilon = step.record.epsilon;
        settle_pending(step.record.epsilon);
        if (!first_below_sigma && step.record.epsilon <= cfg.sigma) {
            first_below_sigma = i;
        }

        if (step.status != OuterStepOutcome::Status::Stepped) {
            step.record.elapsed = seconds_since(start);
            emit(step.record);
            return finalize(step.status == OuterStepOutcome::Status::Converged ? Termination::Converged
                                                                               : Termination::NoiseFloor,
                            state.iterate, last_epsilon);
        }

        OuterRecord& rec = step.record;
        ++audits.descent_checks;
        if (rec.F_next > rec.F_value + kDescentAuditRelSlack * std::abs(rec.F_value)) {
            ++audits.descent_failures;
        }
        if (rec.halvings > 0) {
            ++audits.domain_guard_activations;
        }
        if (rec.inner_capped) {
            ++audits.inner_caps;
        }
        if (rec.step_kind == StepKind::Damped) {
            if (rec.descent_residual) {
                ++audits.xi_checks;
                if (*rec.descent_residual < -kXiAuditSlack) {
                    ++audits.xi_failures;
                }
            } else {
                ++audits.xi_not_applicable;
            }
        }
        rec.elapsed = seconds_since(start);
        pending = rec;
        ++trace.iterations;
        state = std::move(*step.next);
    }
}

} // namespace scopt
