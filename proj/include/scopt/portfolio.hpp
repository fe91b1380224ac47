#pragma once

#include <cstddef>
#include <optional>

#include "scopt/linalg.hpp"

namespace scopt {

/// minimize w^T cov w  subject to  r^T w = mu, sum w = C, w >= 0.
/// Only the training estimate is carried; the ground truth enters through oos_risk().
struct MvoInstance
{
    SymMatrix cov;
    Vector returns;
    double target_return = 0.0;
    double capital = 1.0;
};

struct Portfolio
{
    Vector weights;
    double trained_risk = 0.0;
    std::optional<double> oos_risk;
};

struct MvoOptions
{
    std::size_t max_iterations = 100000;
    double kkt_tolerance = 1e-6;   ///< relative to 1 + ||cov w||
    std::size_t check_every = 25;
};

/// Projected gradient (accelerated, with restart) using the exact Euclidean
/// projection onto the feasible set, finished by an active-set solve on the
/// support. Throws Infeasible when mu / C lies outside [min r, max r] and
/// NotConverged when the KKT residual is still above tolerance at the cap.
Portfolio solve_mvo(const MvoInstance& inst, const MvoOptions& options = {});

/// w_i = C / n; trained_risk is left at 0 (there is no training covariance).
Portfolio equal_weight(std::size_t n, double capital = 1.0);

/// w^T sigma_true w. Throws DimensionMismatch.
double oos_risk(const Portfolio& p, const SymMatrix& sigma_true);
double quadratic_risk(const Vector& w, const SymMatrix& cov);

/// Euclidean projection of v onto {w >= 0, r^T w = mu, sum w = C}.
/// Throws Infeasible when the set is empty.
Vector project_feasible(const Vector& v, const Vector& returns, double target_return, double capital);

/// Projection of 2 cov w onto the null space of the equality constraints,
/// restricted to coordinates with w_i > 1e-8, divided by 1 + ||cov w||.
double kkt_residual(const MvoInstance& inst, const Vector& w);

/// Largest violation of the sign condition on coordinates at zero: with
/// multipliers fitted on the support, min(0, (2 cov w)_i - a r_i - b) over
/// w_i <= 1e-8, divided by 1 + ||cov w||. Zero at a minimizer.
double kkt_sign_violation(const MvoInstance& inst, const Vector& w);

/// max(|r^T w - mu|, |sum w - C|, max(0, -min w)).
double constraint_violation(const MvoInstance& inst, const Vector& w);

} // namespace scopt
