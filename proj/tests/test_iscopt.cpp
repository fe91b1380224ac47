#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "scopt/iscopt.hpp"

using namespace scopt;
using scopt::testing::random_spd;

namespace {

ProblemSpec random_problem(Eigen::Index n, std::uint64_t seed, double rho, double lambda)
{
    const SymMatrix sigma = synth_sparse_cov(static_cast<std::size_t>(n), 0.2, seed, 1.0);
    const auto xs = gaussian_samples(sigma, static_cast<std::size_t>(2 * n), seed + 1000);
    return ProblemSpec(sample_covariance(xs), rho, lambda);
}

/// Largest violation of 0 in grad f(x) + (lambda/rho) d||x||_1.
double optimality_violation(const ProblemSpec& spec, const Vector& x)
{
    const Iterate it(spec, x);
    const Vector& g = gradient_f(spec, it);
    const double w = spec.l1_weight();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double v = x(j) != 0.0 ? std::abs(g(j) + w * (x(j) > 0.0 ? 1.0 : -1.0))
                                     : std::max(0.0, std::abs(g(j)) - w);
        worst = std::max(worst, v);
    }
    return worst;
}

class RecordingSink : public TraceSink
{
public:
    void on_outer(const OuterRecord& r) override { records.push_back(r); }
    bool wants_inner() const override { return true; }
    void on_inner(std::size_t, const InnerRecord&) override { ++inner; }

    std::vector<OuterRecord> records;
    std::size_t inner = 0;
};

} // namespace

TEST(DampedTau, Examples)
{
    EXPECT_DOUBLE_EQ(damped_tau(1.0, 0.0), 0.5);
    EXPECT_NEAR(damped_tau(0.5, 0.005), 0.4 / (0.5 * 1.4), 1e-15);
    EXPECT_THROW(damped_tau(0.01, 1e-2), DecrementBelowNoise);
}

TEST(DampedTau, ExactSolvesReduceToClassicStep)
{
    for (const double e : {0.1, 0.5, 2.0, 10.0}) {
        EXPECT_NEAR(damped_tau(e, 0.0), 1.0 / (1.0 + e), 1e-15);
    }
}

TEST(OmegaStar, ValuesAndDomain)
{
    EXPECT_NEAR(omega_star(0.5), std::log(2.0) - 0.5, 1e-15);
    EXPECT_DOUBLE_EQ(omega_star(0.0), 0.0);
    EXPECT_THROW(omega_star(1.0), OmegaStarDomain);
    EXPECT_THROW(omega_star(-0.1), OmegaStarDomain);
}

TEST(DescentXi, ZeroAtZeroStepAndPositiveAtDampedStep)
{
    EXPECT_DOUBLE_EQ(descent_xi(0.0, 0.7, 1e-8), 0.0);
    for (const double e : {0.2, 1.0, 5.0}) {
        const double tau = damped_tau(e, 0.0);
        // Exact case: xi = tau e^2 - omega_*(tau e) = e - log(1 + e).
        EXPECT_NEAR(descent_xi(tau, e, 0.0), e - std::log1p(e), 1e-12);
        EXPECT_GT(descent_xi(damped_tau(e, 1e-8), e, 1e-8), 0.0);
    }
}

TEST(ContractionBound, FullStepExactCase)
{
    for (const double e : {0.01, 0.05, 0.1}) {
        const double expected = e * e / (1.0 - 4.0 * e + 2.0 * e * e);
        EXPECT_NEAR(*contraction_bound(e, 1.0, 0.0), expected, 1e-15);
    }
    EXPECT_FALSE(contraction_bound(2.0, 1.0, 0.0).has_value());
    EXPECT_NEAR(*contraction_check(0.001, 0.05, 1.0, 0.0), 0.0025 / (1.0 - 0.2 + 0.005) - 0.001, 1e-15);
}

TEST(QuadraticPhaseBound, Formula)
{
    EXPECT_NEAR(quadratic_phase_bound(0.1, 0.0), 0.14, 1e-15);
    EXPECT_NEAR(quadratic_phase_bound(0.0, 2e-8), 2e-4, 1e-18);
}

TEST(SolverConfig, Validation)
{
    SolverConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.eps_inner = 0.0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.power_iters = 0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.sigma = 1.5;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(Solve, ScalarClosedForm)
{
    for (const double rho : {1.0, 0.25, 4.0}) {
        for (const double lambda : {0.0, 0.3}) {
            const ProblemSpec spec(SymMatrix::zero(1), rho, lambda);
            const SolveResult res = solve(spec, {});
            const double expected = (-lambda + std::sqrt(lambda * lambda + 4.0 * rho)) / 2.0;
            EXPECT_NEAR(res.x(0), expected, 1e-9) << "rho=" << rho << " lambda=" << lambda;
            EXPECT_EQ(res.trace.termination, Termination::Converged);
        }
    }
}

TEST(Solve, LargePenaltyGivesDiagonalClosedForm)
{
    const ProblemSpec base = random_problem(6, 3, 0.1, 0.0);
    const Matrix& s = base.sigma_hat().data();
    const double off_max = (s - Matrix(s.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
    const double lambda = off_max * 1.01;
    const ProblemSpec spec(base.sigma_hat(), 0.1, lambda);
    const SolveResult res = solve(spec, {});
    for (Eigen::Index i = 0; i < 6; ++i) {
        const double a = s(i, i) - lambda;
        EXPECT_NEAR(res.solution.data()(i, i), (a + std::sqrt(a * a + 0.4)) / 2.0, 1e-8);
        for (Eigen::Index j = 0; j < 6; ++j) {
            if (i != j) {
                EXPECT_EQ(res.solution.data()(i, j), 0.0);
            }
        }
    }
}

TEST(Solve, SatisfiesOptimalityConditions)
{
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const ProblemSpec spec = random_problem(8, seed, 0.1, 0.05);
        const SolveResult res = solve(spec, {});
        EXPECT_EQ(res.trace.termination, Termination::Converged);
        EXPECT_LE(optimality_violation(spec, res.x), 1e-6);
        EXPECT_TRUE(res.solution.is_positive_definite());
        EXPECT_EQ(res.trace.audits.total_failures(), 0u);
    }
}

TEST(Solve, FlsReachesSameObjective)
{
    const ProblemSpec spec = random_problem(10, 7, 0.1, 0.1);
    SolverConfig plain;
    SolverConfig fls;
    fls.fls_enabled = true;
    const SolveResult a = solve(spec, plain);
    const SolveResult b = solve(spec, fls);
    EXPECT_NEAR(a.trace.final_F, b.trace.final_F, 1e-8 * std::abs(a.trace.final_F));
    EXPECT_LE(b.trace.iterations, a.trace.iterations);
}

TEST(Solve, ObjectiveIsMonotone)
{
    const ProblemSpec spec = random_problem(10, 11, 0.1, 0.2);
    const SolveResult res = solve(spec, {});
    ASSERT_FALSE(res.trace.records.empty());
    for (const OuterRecord& r : res.trace.records) {
        EXPECT_LE(r.F_next, r.F_value + 1e-12 * std::abs(r.F_value));
    }
}

TEST(Solve, IterationCapStopsLoop)
{
    const ProblemSpec spec = random_problem(10, 12, 0.1, 0.2);
    SolverConfig cfg;
    cfg.i_max = 1;
    const SolveResult res = solve(spec, cfg);
    EXPECT_EQ(res.trace.termination, Termination::MaxIterations);
    EXPECT_EQ(res.trace.iterations, 1u);
}

TEST(Solve, WallClockThrowsWithPartialResult)
{
    const ProblemSpec spec = random_problem(10, 13, 0.1, 0.2);
    SolverConfig cfg;
    cfg.wall_clock_limit = 1e-12;
    try {
        solve(spec, cfg);
        FAIL() << "expected WallClockExceeded";
    } catch (const WallClockExceeded& e) {
        EXPECT_EQ(e.partial().trace.termination, Termination::WallClock);
        EXPECT_EQ(e.partial().x.size(), 100);
    }
}

TEST(Solve, RejectsNonInteriorStart)
{
    const ProblemSpec spec(SymMatrix::identity(2), 0.1, 0.1);
    EXPECT_THROW(solve(spec, {}, Vector::Zero(4)), NotPositiveDefiniteStart);
}

TEST(Solve, SinkSeesEveryRecord)
{
    const ProblemSpec spec = random_problem(5, 14, 0.1, 0.1);
    RecordingSink sink;
    const SolveResult res = solve(spec, {}, std::nullopt, &sink);
    EXPECT_EQ(sink.records.size(), res.trace.records.size());
    EXPECT_GT(sink.inner, 0u);
    for (std::size_t i = 0; i < sink.records.size(); ++i) {
        EXPECT_EQ(sink.records[i].i, i);
    }
}

TEST(DefaultStart, UsesDiagonalAndSqrtRho)
{
    Matrix s = Matrix::Zero(2, 2);
    s(0, 0) = 2.0;
    const ProblemSpec spec(SymMatrix(s), 0.25, 0.1);
    const Vector x0 = default_start(spec);
    EXPECT_DOUBLE_EQ(x0(0), 2.0);
    EXPECT_DOUBLE_EQ(x0(1), 0.0);
    EXPECT_DOUBLE_EQ(x0(2), 0.0);
    EXPECT_DOUBLE_EQ(x0(3), 0.5);
}

TEST(ForwardLineSearch, NeverWorseThanBase)
{
    const ProblemSpec spec = random_problem(6, 15, 0.1, 0.1);
    const Iterate it(spec, default_start(spec));
    const SubproblemContext ctx = SubproblemContext::with_power_lipschitz(spec, it);
    const InnerResult inner = fista_solve(ctx, std::nullopt, 1e-10, 50000);
    const double e = newton_decrement(ctx, inner.delta);
    const double base = e > 3.0 / 40.0 ? damped_tau(e, 1e-10) : 1.0;
    const LineSearchResult ls = forward_line_search(spec, it, inner.delta, base);
    EXPECT_GE(ls.tau, base);
    EXPECT_LE(ls.tau, 1.0);
    EXPECT_LE(ls.probes, 12u);
    if (ls.improved_on_base) {
        EXPECT_LT(ls.F_value, it.objective());
        const Vector x = (1.0 - ls.tau) * it.x() + ls.tau * inner.delta;
        EXPECT_NEAR(objective(spec, x), ls.F_value, 1e-12 * std::abs(ls.F_value));
    }
    EXPECT_THROW(forward_line_search(spec, it, inner.delta, 0.0), InvalidArgument);
}
