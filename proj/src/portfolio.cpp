#include "scopt/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "scopt/errors.hpp"

namespace scopt {

namespace {

constexpr double kSupportThreshold = 1e-8;

// Projection onto {w >= 0, sum w = C}.
Vector simplex_projection(const Vector& u, double capital)
{
    const Eigen::Index n = u.size();
    std::vector<double> sorted(u.data(), u.data() + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double running = 0.0;
    double theta = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        running += sorted[static_cast<std::size_t>(j)];
        const double candidate = (running - capital) / static_cast<double>(j + 1);
        if (sorted[static_cast<std::size_t>(j)] - candidate > 0.0) {
            theta = candidate;
        }
    }
    return (u.array() - theta).max(0.0).matrix();
}

bool returns_degenerate(const Vector& r)
{
    const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
    return r.maxCoeff() - r.minCoeff() <= 1e-14 * scale;
}

void check_instance(const MvoInstance& inst)
{
    const auto n = static_cast<Eigen::Index>(inst.cov.dim());
    if (inst.returns.size() != n) {
        throw DimensionMismatch("return vector has length " + std::to_string(inst.returns.size())
                                + ", covariance is " + std::to_string(n) + "x" + std::to_string(n));
    }
    if (!(inst.capital > 0.0) || !std::isfinite(inst.capital)) {
        throw InvalidArgument("capital must be positive");
    }
    if (!inst.returns.allFinite() || !std::isfinite(inst.target_return)) {
        throw InvalidArgument("returns and target must be finite");
    }
}

void check_feasible(const Vector& r, double mu, double capital)
{
    const double level = mu / capital;
    const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
    if (level < r.minCoeff() - 1e-12 * scale || level > r.maxCoeff() + 1e-12 * scale) {
        throw Infeasible("target return per unit capital " + std::to_string(level) + " outside ["
                         + std::to_string(r.minCoeff()) + ", " + std::to_string(r.maxCoeff()) + "]");
    }
}

std::vector<Eigen::Index> support_of(const Vector& w, double threshold)
{
    std::vector<Eigen::Index> s;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w(i) > threshold) {
            s.push_back(i);
        }
    }
    return s;
}

struct MultiplierFit
{
    double a = 0.0;        ///< multiplier of r^T w = mu
    double b = 0.0;        ///< multiplier of sum w = C
    double residual = 0.0; ///< ||g_S - a r_S - b 1||
};

MultiplierFit fit_multipliers(const Vector& grad, const Vector& r, const std::vector<Eigen::Index>& support)
{
    MultiplierFit fit;
    const auto m = static_cast<Eigen::Index>(support.size());
    if (m == 0) {
        return fit;
    }
    Matrix basis(m, 2);
    Vector g(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        basis(k, 0) = r(support[static_cast<std::size_t>(k)]);
        basis(k, 1) = 1.0;
        g(k) = grad(support[static_cast<std::size_t>(k)]);
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(basis);
    cod.setThreshold(1e-12);
    const Vector coef = cod.solve(g);
    fit.a = coef(0);
    fit.b = coef(1);
    fit.residual = (g - basis * coef).norm();
    return fit;
}

double objective_scale(const MvoInstance& inst, const Vector& w)
{
    return 1.0 + (inst.cov.data() * w).norm();
}

bool certified(const MvoInstance& inst, const Vector& w, double tol)
{
    return kkt_residual(inst, w) <= tol && kkt_sign_violation(inst, w) <= tol
        && constraint_violation(inst, w) <= 1e-10 * std::max(1.0, inst.capital);
}

// Primal active-set method started from a feasible point. Returns nothing if
// the equality-constrained systems turn out inconsistent or it cycles.
std::optional<Vector> active_set_polish(const MvoInstance& inst, const Vector& start, double tol)
{
    const Matrix& sigma = inst.cov.data();
    const Vector& r = inst.returns;
    const Eigen::Index n = r.size();
    const double mu = inst.target_return;
    const double capital = inst.capital;
    const bool degenerate = returns_degenerate(r);

    Vector w = start;
    std::vector<char> in_support(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (w(i) > kSupportThreshold * capital) {
            in_support[static_cast<std::size_t>(i)] = 1;
        } else {
            w(i) = 0.0;
        }
    }

    const std::size_t max_rounds = 3 * static_cast<std::size_t>(n) + 10;
    for (std::size_t round = 0; round < max_rounds; ++round) {
        std::vector<Eigen::Index> s;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (in_support[static_cast<std::size_t>(i)] != 0) {
                s.push_back(i);
            }
        }
        const auto m = static_cast<Eigen::Index>(s.size());
        if (m == 0) {
            return std::nullopt;
        }
        const Eigen::Index rows = degenerate ? 1 : 2;
        Matrix kkt = Matrix::Zero(m + rows, m + rows);
        Vector rhs = Vector::Zero(m + rows);
        for (Eigen::Index a = 0; a < m; ++a) {
            for (Eigen::Index b = 0; b < m; ++b) {
                kkt(a, b) = 2.0 * sigma(s[static_cast<std::size_t>(a)], s[static_cast<std::size_t>(b)]);
            }
            kkt(a, m) = 1.0;
            kkt(m, a) = 1.0;
            if (!degenerate) {
                kkt(a, m + 1) = r(s[static_cast<std::size_t>(a)]);
                kkt(m + 1, a) = r(s[static_cast<std::size_t>(a)]);
            }
        }
        rhs(m) = capital;
        if (!degenerate) {
            rhs(m + 1) = mu;
        }
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(kkt);
        const Vector sol = cod.solve(rhs);
        if ((kkt * sol - rhs).norm() > 1e-9 * (1.0 + rhs.norm() + kkt.norm())) {
            return std::nullopt;
        }
        Vector candidate = Vector::Zero(n);
        for (Eigen::Index a = 0; a < m; ++a) {
            candidate(s[static_cast<std::size_t>(a)]) = sol(a);
        }

        if (candidate.minCoeff() < 0.0) {
            // Walk from w toward the candidate until the first coordinate hits zero.
            double t = 1.0;
            Eigen::Index blocking = -1;
            for (const Eigen::Index i : s) {
                if (candidate(i) < 0.0) {
                    const double ti = w(i) / (w(i) - candidate(i));
                    if (ti < t) {
                        t = ti;
                        blocking = i;
                    }
                }
            }
            w += t * (candidate - w);
            if (blocking >= 0) {
                w(blocking) = 0.0;
                in_support[static_cast<std::size_t>(blocking)] = 0;
            }
            w = w.cwiseMax(0.0);
            continue;
        }

        w = candidate;
        const Vector grad = 2.0 * (sigma * w);
        const MultiplierFit fit = fit_multipliers(grad, r, s);
        const double scale = objective_scale(inst, w);
        double worst = 0.0;
        Eigen::Index entering = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (in_support[static_cast<std::size_t>(i)] == 0) {
                const double eta = grad(i) - fit.a * r(i) - fit.b;
                if (eta < worst) {
                    worst = eta;
                    entering = i;
                }
            }
        }
        if (entering < 0 || -worst <= 0.1 * tol * scale) {
            return w;
        }
        in_support[static_cast<std::size_t>(entering)] = 1;
    }
    return std::nullopt;
}

} // namespace

Vector project_feasible(const Vector& v, const Vector& returns, double target_return, double capital)
{
    if (v.size() != returns.size()) {
        throw DimensionMismatch("point and return vector differ in length");
    }
    if (v.size() == 0) {
        throw InvalidArgument("empty portfolio");
    }
    if (!(capital > 0.0)) {
        throw InvalidArgument("capital must be positive");
    }
    check_feasible(returns, target_return, capital);
    const Vector& r = returns;
    if (returns_degenerate(r)) {
        return simplex_projection(v, capital);
    }

    auto at = [&](double alpha) { return simplex_projection(v + alpha * r, capital); };
    auto h = [&](double alpha) { return r.dot(at(alpha)) - target_return; };

    // h is nondecreasing in alpha: bracket its root, then regula falsi (Illinois).
    const double span = r.maxCoeff() - r.minCoeff();
    double step = (1.0 + v.cwiseAbs().maxCoeff()) / span;
    double lo = -step;
    double hi = step;
    double h_lo = h(lo);
    double h_hi = h(hi);
    for (int k = 0; k < 200 && h_lo > 0.0; ++k) {
        hi = lo;
        h_hi = h_lo;
        step *= 2.0;
        lo -= step;
        h_lo = h(lo);
    }
    for (int k = 0; k < 200 && h_hi < 0.0; ++k) {
        lo = hi;
        h_lo = h_hi;
        step *= 2.0;
        hi += step;
        h_hi = h(hi);
    }

    const double tol = 1e-15 * (std::abs(target_return) + capital * r.cwiseAbs().maxCoeff());
    double alpha = std::abs(h_lo) < std::abs(h_hi) ? lo : hi;
    int side = 0;
    for (int k = 0; k < 300; ++k) {
        if (std::min(std::abs(h_lo), std::abs(h_hi)) <= tol || hi - lo <= 1e-15 * (std::abs(lo) + std::abs(hi))) {
            break;
        }
        double mid = (lo * h_hi - hi * h_lo) / (h_hi - h_lo);
        if (!(mid > lo && mid < hi)) {
            mid = 0.5 * (lo + hi);
        }
        const double h_mid = h(mid);
        if (h_mid > 0.0) {
            hi = mid;
            h_hi = h_mid;
            if (side == -1) {
                h_lo *= 0.5;
            }
            side = -1;
        } else {
            lo = mid;
            h_lo = h_mid;
            if (side == 1) {
                h_hi *= 0.5;
            }
            side = 1;
        }
        alpha = std::abs(h_lo) < std::abs(h_hi) ? lo : hi;
    }
    Vector w = at(alpha);

    // Snap to the exact solution of the final piece: on the support,
    // w = v + alpha r + beta with both equalities holding.
    const std::vector<Eigen::Index> s = support_of(w, 0.0);
    double sr = 0.0, srr = 0.0, sv = 0.0, srv = 0.0;
    for (const Eigen::Index i : s) {
        sr += r(i);
        srr += r(i) * r(i);
        sv += v(i);
        srv += r(i) * v(i);
    }
    const double m = static_cast<double>(s.size());
    const double det = srr * m - sr * sr;
    if (std::abs(det) > 1e-12 * (srr * m + sr * sr)) {
        const double a = ((target_return - srv) * m - (capital - sv) * sr) / det;
        const double b = ((capital - sv) - a * sr) / m;
        Vector exact = (v.array() + a * r.array() + b).max(0.0).matrix();
        bool consistent = true;
        for (const Eigen::Index i : s) {
            consistent = consistent && v(i) + a * r(i) + b >= 0.0;
        }
        if (consistent && std::abs(r.dot(exact) - target_return) <= std::abs(r.dot(w) - target_return)) {
            w = exact;
        }
    }
    return w;
}

double quadratic_risk(const Vector& w, const SymMatrix& cov)
{
    if (w.size() != static_cast<Eigen::Index>(cov.dim())) {
        throw DimensionMismatch("weights have length " + std::to_string(w.size()) + ", covariance is "
                                + std::to_string(cov.dim()) + "x" + std::to_string(cov.dim()));
    }
    return w.dot(cov.data() * w);
}

double oos_risk(const Portfolio& p, const SymMatrix& sigma_true)
{
    return quadratic_risk(p.weights, sigma_true);
}

Portfolio equal_weight(std::size_t n, double capital)
{
    if (n == 0) {
        throw InvalidArgument("equal-weight portfolio needs at least one asset");
    }
    Portfolio p;
    p.weights = Vector::Constant(static_cast<Eigen::Index>(n), capital / static_cast<double>(n));
    return p;
}

double kkt_residual(const MvoInstance& inst, const Vector& w)
{
    check_instance(inst);
    const Vector grad = 2.0 * (inst.cov.data() * w);
    const auto s = support_of(w, kSupportThreshold);
    if (returns_degenerate(inst.returns)) {
        // Only the budget constraint is active.
        double mean = 0.0;
        for (const Eigen::Index i : s) {
            mean += grad(i);
        }
        mean /= std::max<double>(1.0, static_cast<double>(s.size()));
        double sq = 0.0;
        for (const Eigen::Index i : s) {
            sq += (grad(i) - mean) * (grad(i) - mean);
        }
        return std::sqrt(sq) / objective_scale(inst, w);
    }
    return fit_multipliers(grad, inst.returns, s).residual / objective_scale(inst, w);
}

double kkt_sign_violation(const MvoInstance& inst, const Vector& w)
{
    check_instance(inst);
    const Vector grad = 2.0 * (inst.cov.data() * w);
    const Vector& r = inst.returns;
    const auto s = support_of(w, kSupportThreshold);
    MultiplierFit fit;
    if (returns_degenerate(r)) {
        for (const Eigen::Index i : s) {
            fit.b += grad(i);
        }
        fit.b /= std::max<double>(1.0, static_cast<double>(s.size()));
    } else {
        fit = fit_multipliers(grad, r, s);
    }
    std::vector<Eigen::Index> zeros;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (!(w(i) > kSupportThreshold)) {
            zeros.push_back(i);
        }
    }
    // slack_i - t d_i is the sign condition along the family of multipliers
    // (a + t, b - t r_s); the family is a single point unless r is constant on
    // the support and r is not constant overall.
    std::vector<double> slack;
    std::vector<double> d;
    for (const Eigen::Index i : zeros) {
        slack.push_back(grad(i) - fit.a * r(i) - fit.b);
        d.push_back(0.0);
    }
    if (!s.empty() && !returns_degenerate(r)) {
        double lo = r(s.front());
        double hi = lo;
        for (const Eigen::Index i : s) {
            lo = std::min(lo, r(i));
            hi = std::max(hi, r(i));
        }
        if (hi - lo <= 1e-14 * std::max(1.0, r.cwiseAbs().maxCoeff())) {
            for (std::size_t k = 0; k < zeros.size(); ++k) {
                d[k] = r(zeros[k]) - lo;
            }
        }
    }
    auto violation = [&](double t) {
        double worst = 0.0;
        for (std::size_t k = 0; k < slack.size(); ++k) {
            worst = std::max(worst, t * d[k] - slack[k]);
        }
        return worst;
    };
    // The violation is convex and piecewise linear in t: find where the
    // increasing and decreasing envelopes cross.
    double t = 0.0;
    const bool rising = std::any_of(d.begin(), d.end(), [](double x) { return x > 0.0; });
    const bool falling = std::any_of(d.begin(), d.end(), [](double x) { return x < 0.0; });
    if (rising && falling) {
        auto envelope_gap = [&](double x) {
            double up = -std::numeric_limits<double>::infinity();
            double down = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < slack.size(); ++k) {
                const double line = x * d[k] - slack[k];
                if (d[k] > 0.0) {
                    up = std::max(up, line);
                } else if (d[k] < 0.0) {
                    down = std::max(down, line);
                }
            }
            return up - down;
        };
        double lo = -1.0;
        double hi = 1.0;
        while (envelope_gap(lo) > 0.0) {
            lo *= 2.0;
        }
        while (envelope_gap(hi) < 0.0) {
            hi *= 2.0;
        }
        for (int k = 0; k < 200; ++k) {
            const double mid = 0.5 * (lo + hi);
            (envelope_gap(mid) < 0.0 ? lo : hi) = mid;
        }
        t = 0.5 * (lo + hi);
    } else if (rising) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < slack.size(); ++k) {
            best = std::min(best, d[k] > 0.0 ? slack[k] / d[k] : best);
        }
        t = std::min(0.0, best);
    } else if (falling) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < slack.size(); ++k) {
            best = std::max(best, d[k] < 0.0 ? slack[k] / d[k] : best);
        }
        t = std::max(0.0, best);
    }
    return violation(t) / objective_scale(inst, w);
}

double constraint_violation(const MvoInstance& inst, const Vector& w)
{
    return std::max({std::abs(inst.returns.dot(w) - inst.target_return), std::abs(w.sum() - inst.capital),
                     std::max(0.0, -w.minCoeff())});
}

Portfolio solve_mvo(const MvoInstance& inst, const MvoOptions& options)
{
    check_instance(inst);
    const std::size_t n = inst.cov.dim();
    if (n == 0) {
        throw InvalidArgument("empty portfolio");
    }
    check_feasible(inst.returns, inst.target_return, inst.capital);
    const Matrix& sigma = inst.cov.data();
    const Vector& r = inst.returns;
    const double mu = inst.target_return;
    const double capital = inst.capital;
    const double tol = options.kkt_tolerance;

    auto finish = [&](Vector w) {
        Portfolio p;
        p.trained_risk = w.dot(sigma * w);
        p.weights = std::move(w);
        return p;
    };

    const Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma, Eigen::EigenvaluesOnly);
    const double lmax = eig.eigenvalues().maxCoeff();
    Vector w = project_feasible(Vector::Constant(static_cast<Eigen::Index>(n), capital / static_cast<double>(n)),
                                r, mu, capital);
    if (!(lmax > 0.0)) {
        return finish(std::move(w));
    }
    const double lip = 2.0 * lmax;

    Vector y = w;
    double t = 1.0;
    double f = w.dot(sigma * w);
    std::size_t k = 0;
    for (; k < options.max_iterations; ++k) {
        Vector w_new = project_feasible(y - (2.0 / lip) * (sigma * y), r, mu, capital);
        const double f_new = w_new.dot(sigma * w_new);
        if (f_new > f) {
            y = w;
            t = 1.0;
            continue;
        }
        const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = w_new + ((t - 1.0) / t_new) * (w_new - w);
        t = t_new;
        w = std::move(w_new);
        f = f_new;

        if ((k + 1) % options.check_every == 0) {
            if (certified(inst, w, tol)) {
                break;
            }
            if ((k + 1) % (20 * options.check_every) == 0) {
                if (auto polished = active_set_polish(inst, w, tol)) {
                    if (certified(inst, *polished, tol) && polished->dot(sigma * *polished) <= f + 1e-12 * (1.0 + f)) {
                        return finish(std::move(*polished));
                    }
                }
            }
        }
    }

    if (auto polished = active_set_polish(inst, w, tol)) {
        if (certified(inst, *polished, tol) && polished->dot(sigma * *polished) <= f + 1e-12 * (1.0 + f)) {
            return finish(std::move(*polished));
        }
    }
    if (certified(inst, w, tol)) {
        return finish(std::move(w));
    }
    throw NotConverged(k, std::max(kkt_residual(inst, w), kkt_sign_violation(inst, w)));
}

} // namespace scopt
