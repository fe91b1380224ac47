#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "scopt/inner_solver.hpp"

namespace scopt {

struct SolverConfig
{
    double eps_inner = 1e-8;        ///< certified accuracy of every subproblem solve
    double gamma = 1e-10;           ///< stop once the Newton decrement is <= gamma
    std::size_t i_max = 500;
    double sigma = 3.0 / 40.0;      ///< full steps once the decrement is <= sigma
    std::size_t power_iters = kDefaultPowerIterations;
    bool fls_enabled = false;
    double wall_clock_limit = 3600.0;  ///< seconds, checked between outer iterations

    std::size_t max_inner = 50000;
    bool restart = true;            ///< momentum restart in FISTA
    /// Shrink the inner target with the decrement, eps_i = 0.005 * decrement^4
    /// clamped to [eps_inner_floor, eps_inner], so inexactness stays below the
    /// quadratic contraction of the next step.
    bool adaptive_inner = true;
    double eps_inner_floor = 1e-24;
    std::size_t max_halvings = 30;
    std::size_t fls_probes = 12;

    /// Throws InvalidArgument on out-of-range fields.
    void validate() const;
};

enum class StepKind
{
    Damped,
    Full,
    Fls,
    None,  ///< terminal record: no step was taken
};

std::string to_string(StepKind kind);

enum class Termination
{
    Converged,       ///< decrement <= gamma
    NoiseFloor,      ///< decrement below sqrt(2 eps) even after tightening eps
    MaxIterations,
    WallClock,
};

std::string to_string(Termination t);

struct OuterRecord
{
    std::size_t i = 0;
    double epsilon = 0.0;            ///< Newton decrement ||d_i - x_i||_{x_i}
    double tau = 0.0;                ///< step actually taken
    double tau_formula = 0.0;        ///< damped step from the closed form (1 for full steps)
    double F_value = 0.0;            ///< F(x_i)
    double F_next = 0.0;             ///< F(x_{i+1}); equals F_value for the terminal record
    StepKind step_kind = StepKind::None;
    std::size_t inner_iterations = 0;
    double inner_gap = 0.0;          ///< certified subproblem accuracy of this iteration
    bool inner_capped = false;       ///< subproblem stopped at max_inner above eps_inner
    std::size_t halvings = 0;        ///< domain-guard halvings of tau
    std::optional<double> descent_xi;            ///< guaranteed decrease on damped steps
    std::optional<double> descent_residual;      ///< F_value - xi - F_next (>= 0 means it held)
    std::optional<double> contraction_residual;  ///< bound on epsilon_{i+1} minus epsilon_{i+1}
    std::optional<double> quadratic_residual;    ///< 14 eps_i^2 + sqrt(2 eps) - epsilon_{i+1}
    double elapsed = 0.0;            ///< seconds since solve start, at the end of this iteration
};

struct AuditCounters
{
    std::size_t descent_checks = 0;
    std::size_t descent_failures = 0;
    std::size_t xi_checks = 0;
    std::size_t xi_failures = 0;
    std::size_t xi_not_applicable = 0;
    std::size_t contraction_checks = 0;
    std::size_t contraction_failures = 0;
    std::size_t contraction_not_applicable = 0;
    std::size_t quadratic_checks = 0;
    std::size_t quadratic_failures = 0;
    std::size_t domain_guard_activations = 0;
    std::size_t noise_floor_retries = 0;
    std::size_t inner_caps = 0;          ///< steps taken on a subproblem solve that stopped at max_inner

    std::size_t total_failures() const noexcept
    {
        return descent_failures + xi_failures + contraction_failures + quadratic_failures;
    }
};

/// Absolute slack in the damped-step decrease audit, and relative slack in the
/// monotone-descent audit.
inline constexpr double kXiAuditSlack = 1e-10;
inline constexpr double kDescentAuditRelSlack = 1e-12;

struct OuterTrace
{
    std::vector<OuterRecord> records;
    AuditCounters audits;
    Termination termination = Termination::MaxIterations;
    std::size_t iterations = 0;      ///< completed outer steps
    double final_F = 0.0;
    double final_epsilon = 0.0;
    double elapsed = 0.0;
    /// Outer steps between the first decrement <= sigma and termination.
    std::optional<std::size_t> steps_after_sigma;
};

/// Receives trace records as they are finalized. Called from the solving thread only.
class TraceSink
{
public:
    virtual ~TraceSink() = default;
    virtual void on_outer(const OuterRecord&) {}
    virtual bool wants_inner() const { return false; }
    virtual void on_inner(std::size_t /*outer*/, const InnerRecord&) {}
};

struct SolveResult
{
    SymMatrix solution;
    Vector x;
    OuterTrace trace;
};

class WallClockExceeded : public Error
{
public:
    explicit WallClockExceeded(SolveResult partial)
        : Error("wall-clock limit exceeded"), partial_(std::move(partial))
    {}

    const SolveResult& partial() const noexcept { return partial_; }

private:
    SolveResult partial_;
};

/// ||d - x_i||_{x_i}.
double newton_decrement(const SubproblemContext& ctx, const Vector& delta);

/// (eps_i - sqrt(2 eps)) / (eps_i (eps_i - sqrt(2 eps) + 1)).
/// Throws DecrementBelowNoise when eps_i < sqrt(2 eps).
double damped_tau(double epsilon_i, double eps_inner);

/// omega_*(t) = -t - ln(1 - t) on [0, 1); throws OmegaStarDomain elsewhere.
double omega_star(double t);

/// xi(tau) = -omega_*(tau eps_i) - tau (eps - (eps_i - sqrt(2 eps))^2 / 2 - eps_i^2 / 2).
double descent_xi(double tau, double epsilon_i, double eps_inner);

/// Right-hand side of the one-step contraction bound on eps_{i+1}; nullopt when
/// one of its denominators is not positive.
std::optional<double> contraction_bound(double epsilon_i, double tau, double eps_inner);

/// contraction_bound - epsilon_next (nullopt when the bound is not applicable).
std::optional<double> contraction_check(double epsilon_next, double epsilon_i, double tau, double eps_inner);

/// 14 eps_i^2 + sqrt(2 eps), the quadratic-region bound for full steps at
/// eps_i <= 3/40 and damped steps at eps_i <= 3/20.
double quadratic_phase_bound(double epsilon_i, double eps_inner);

struct LineSearchResult
{
    double tau = 0.0;
    double F_value = 0.0;       ///< F at the accepted point (F(x_i) on fallback without improvement)
    std::size_t probes = 0;
    bool improved_on_base = false;
};

/// Forward binary search for the largest tau in [tau_base, 1] with
/// F((1 - tau) x_i + tau d) < F(x_i). Probes outside dom F count as
/// non-improving. Falls back to tau_base.
LineSearchResult forward_line_search(const ProblemSpec& spec, const Iterate& it, const Vector& delta,
                                     double tau_base, std::size_t max_probes = 12);

struct OuterState
{
    Iterate iterate;
    std::optional<Vector> warm_start;  ///< previous subproblem solution; x_i when empty
    double eps_target;                 ///< inner target for the next solve
};

struct OuterStepOutcome
{
    enum class Status { Stepped, Converged, NoiseFloor };

    Status status = Status::Stepped;
    std::optional<OuterState> next;   ///< set when status == Stepped
    OuterRecord record;
    InnerResult inner;
    bool tightened = false;           ///< the noise-floor retry was used
};

/// One outer iteration: subproblem solve, decrement, damped/full/FLS step with
/// domain guard. Does not fill the audit fields that need epsilon_{i+1}.
/// A subproblem that stops at max_inner above eps_inner is still used when
/// its certified error sqrt(2 gap) is below epsilon_i^2 / 10; the step then
/// runs with eps = gap. Otherwise MaxInnerIterations propagates.
OuterStepOutcome outer_step(const ProblemSpec& spec, const OuterState& state, const SolverConfig& cfg,
                            TraceSink* sink = nullptr, std::size_t index = 0);

/// vec(diag(S)), with non-positive diagonal entries replaced by sqrt(rho),
/// the minimizer of the unpenalized one-dimensional problem at S_jj = 0.
Vector default_start(const ProblemSpec& spec);

/// Runs outer iterations until the decrement is <= gamma, the noise floor is
/// reached, i_max steps were taken, or the wall clock ran out (throws
/// WallClockExceeded with the partial result). Throws NotPositiveDefiniteStart
/// if `x0` is not interior.
SolveResult solve(const ProblemSpec& spec, const SolverConfig& cfg, const std::optional<Vector>& x0 = std::nullopt,
                  TraceSink* sink = nullptr);

} // namespace scopt
