#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>
#include <vector>

#include "mfghc/banded.hpp"
#include "mfghc/coupling.hpp"
#include "mfghc/grid.hpp"
#include "mfghc/params.hpp"
#include "mfghc/solver_common.hpp"
#include "mfghc/transform.hpp"

namespace mfghc {

namespace detail {

/// (g^2 + eps^2)^((r-2)/2) g; the unregularized flux sign(g)|g|^(r-1) when eps = 0.
inline double rflux(double g, double r, double eps)
{
    if (eps == 0.0) return signed_power(g, r - 1.0);
    return std::pow(g * g + eps * eps, 0.5 * (r - 2.0)) * g;
}

/// d rflux / dg, eps > 0.
inline double rflux_derivative(double g, double r, double eps)
{
    const double q = g * g + eps * eps;
    return std::pow(q, 0.5 * (r - 4.0)) * ((r - 1.0) * g * g + eps * eps);
}

inline double mass_of_power(const GridFunction& phi, double r)
{
    const Grid& grid = phi.grid();
    double s = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) s += grid.node_weight(i) * std::pow(phi[i], r);
    return s;
}

inline void normalize_power(GridFunction& phi, double r)
{
    const double scale = std::pow(mass_of_power(phi, r), -1.0 / r);
    for (auto& v : phi.mutable_values()) v *= scale;
}

}  // namespace detail

/// E(phi) = (mu/r) int (|Dphi|^2 + eps^2)^(r/2) + (1/r) int F(x, phi^r),
/// with the gradient term on midpoints and the potential term on nodes.
inline double discrete_energy(const GridFunction& phi, const HamiltonianParams& params, const Coupling& f,
                              double eps)
{
    if (!phi.at_nodes()) throw ShapeError("discrete_energy: expects nodal phi");
    const Grid& grid = phi.grid();
    const double h = grid.spacing();
    const double r = params.r();
    long double dirichlet = 0.0L;
    for (std::size_t k = 0; k < grid.cells(); ++k) {
        const double g = (phi[k + 1] - phi[k]) / h;
        dirichlet += static_cast<long double>(grid.midpoint_weight(k) * std::pow(g * g + eps * eps, 0.5 * r));
    }
    long double potential = 0.0L;
    for (std::size_t i = 0; i < grid.size(); ++i)
        potential += static_cast<long double>(grid.node_weight(i) * f.primitive(grid.node(i), std::pow(phi[i], r)));
    return static_cast<double>(params.mu() / r * dirichlet + potential / r);
}

/// E(next) - E(prev) accumulated termwise so that increments far below the
/// resolution of E itself are still resolved.  A nonzero `multiplier` also
/// subtracts (multiplier/r) times the change of int phi^r; on the constraint
/// set this is the same quantity, but it cancels the first-order effect of
/// rounding in the normalization.
inline double energy_difference(const GridFunction& prev, const GridFunction& next, const HamiltonianParams& params,
                                const Coupling& f, double eps, double multiplier = 0.0)
{
    require_same_grid(prev, next, "energy_difference");
    const Grid& grid = prev.grid();
    const double h = grid.spacing();
    const double r = params.r();
    long double dirichlet = 0.0L;
    for (std::size_t k = 0; k < grid.cells(); ++k) {
        const double g0 = (prev[k + 1] - prev[k]) / h;
        const double g1 = (next[k + 1] - next[k]) / h;
        const double q0 = g0 * g0 + eps * eps;
        const double dq = (g1 - g0) * (g1 + g0);
        double term;
        if (q0 == 0.0) {
            term = std::pow(dq, 0.5 * r);
        } else {
            term = std::pow(q0, 0.5 * r) * std::expm1(0.5 * r * std::log1p(dq / q0));
        }
        dirichlet += static_cast<long double>(grid.midpoint_weight(k) * term);
    }
    long double potential = 0.0L;
    long double mass = 0.0L;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.node(i);
        const double m0 = std::pow(prev[i], r);
        const double dm = m0 * std::expm1(r * std::log1p((next[i] - prev[i]) / prev[i]));
        const double m1 = m0 + dm;
        double term;
        if (std::abs(dm) <= 1e-2 * std::min(m0, m1)) {
            // Simpson's rule on the primitive's derivative.
            term = dm / 6.0 * (f(x, m0) + 4.0 * f(x, m0 + 0.5 * dm) + f(x, m1));
        } else {
            term = f.primitive(x, m1) - f.primitive(x, m0);
        }
        potential += static_cast<long double>(grid.node_weight(i) * term);
        mass += static_cast<long double>(grid.node_weight(i) * dm);
    }
    return static_cast<double>(params.mu() / r * dirichlet + (potential - multiplier * mass) / r);
}

/// Gradient of discrete_energy with respect to the nodal values.  Against the
/// hat basis this is the weak form of the r-Laplace equation without lambda.
inline std::vector<double> energy_gradient(const GridFunction& phi, const HamiltonianParams& params,
                                           const Coupling& f, double eps)
{
    const Grid& grid = phi.grid();
    const double h = grid.spacing();
    const double r = params.r();
    const double mu = params.mu();
    std::vector<double> grad(grid.size(), 0.0);
    for (std::size_t k = 0; k < grid.cells(); ++k) {
        const double g = (phi[k + 1] - phi[k]) / h;
        const double a = mu * grid.flux_weight(k) * detail::rflux(g, r, eps);
        grad[k] -= a;
        grad[k + 1] += a;
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double p = std::pow(phi[i], r - 1.0);
        grad[i] += grid.node_weight(i) * f(grid.node(i), p * phi[i]) * p;
    }
    return grad;
}

/// Weak residual of -mu Delta_r phi + (f(x,phi^r) - lambda) phi^(r-1) against
/// every nodal hat function, boundary hats included.
inline std::vector<double> rlaplace_weak_form(const GridFunction& phi, double lambda, const HamiltonianParams& params,
                                              const Coupling& f, double eps)
{
    std::vector<double> res = energy_gradient(phi, params, f, eps);
    const Grid& grid = phi.grid();
    for (std::size_t i = 0; i < res.size(); ++i)
        res[i] -= lambda * grid.node_weight(i) * std::pow(phi[i], params.r() - 1.0);
    return res;
}

/// lambda = mu int |Dphi|^r + int f(x,phi^r) phi^r, from testing the weak form with phi.
inline double lambda_from_phi(const GridFunction& phi, const HamiltonianParams& params, const Coupling& f)
{
    const double r = params.r();
    const double mass = detail::mass_of_power(phi, r);
    if (!(std::abs(mass - 1.0) <= 1e-8))
        throw PreconditionError("lambda_from_phi: phi^r integrates to " + std::to_string(mass) + ", expected 1");
    const Grid& grid = phi.grid();
    const double h = grid.spacing();
    double gradient = 0.0;
    for (std::size_t k = 0; k < grid.cells(); ++k)
        gradient += grid.midpoint_weight(k) * std::pow(std::abs(phi[k + 1] - phi[k]) / h, r);
    double potential = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double m = std::pow(phi[i], r);
        potential += grid.node_weight(i) * f(grid.node(i), m) * m;
    }
    return params.mu() * gradient + potential;
}

namespace detail {

/// Projected-gradient descent on {int phi^r = 1} for one regularization level.
class RLaplaceStage {
public:
    RLaplaceStage(const HamiltonianParams& params, const Coupling& f, const SolverConfig& cfg, double eps)
        : params_(params), f_(f), cfg_(cfg), eps_(eps)
    {
    }

    /// Returns true when the projected gradient dropped below grad_tol.  The
    /// recorded energies start from a direct evaluation and then accumulate
    /// the committed (nonpositive) increments.
    bool run(GridFunction& phi, SolveTrace::Stage& stage, SolveTrace& trace)
    {
        double energy = discrete_energy(phi, params_, f_, eps_);
        double& lambda = lambda_;
        std::vector<double> res = residual(phi, lambda);
        stage.energy.push_back(energy);
        stage.lambda.push_back(lambda);
        stage.residual.push_back(sup(res));
        double gradient_step = cfg_.step0;

        for (std::size_t it = 0; it < cfg_.max_iters; ++it) {
            if (stage.residual.back() <= cfg_.grad_tol) return true;
            const double floor = rounding_floor(phi);
            if (stage.residual.back() <= floor) {
                trace.rounding_limited = true;
                trace.rounding_floor = std::max(trace.rounding_floor, floor);
                return true;
            }

            bool committed = false;
            std::vector<double> dir;
            if (newton_direction(phi, lambda, dir) && dot(res, dir) < 0.0)
                committed = line_search(phi, res, dir, 1.0, nullptr);
            if (!committed) {
                ++stage.gradient_fallbacks;
                preconditioned_gradient(phi, res, dir);
                committed = line_search(phi, res, dir, gradient_step, &gradient_step);
            }
            if (!committed) {
                trace.message = "line search stalled at projected-gradient norm " + std::to_string(stage.residual.back());
                return false;
            }
            energy += last_decrease_;
            res = residual(phi, lambda);
            stage.energy.push_back(energy);
            stage.lambda.push_back(lambda);
            stage.residual.push_back(sup(res));
            ++stage.iterations;
        }
        trace.message = "iteration limit reached";
        return stage.residual.back() <= cfg_.grad_tol;
    }

private:
    static double sup(const std::vector<double>& v)
    {
        double s = 0.0;
        for (double x : v) s = std::max(s, std::abs(x));
        return s;
    }

    static double dot(const std::vector<double>& a, const std::vector<double>& b)
    {
        return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
    }

    /// Energy gradient minus its component along the constraint normal; the
    /// multiplier is lambda = <phi, grad E> because int phi^r = 1.
    std::vector<double> residual(const GridFunction& phi, double& lambda) const
    {
        std::vector<double> grad = energy_gradient(phi, params_, f_, eps_);
        lambda = 0.0;
        for (std::size_t i = 0; i < grad.size(); ++i) lambda += phi[i] * grad[i];
        const Grid& grid = phi.grid();
        for (std::size_t i = 0; i < grad.size(); ++i)
            grad[i] -= lambda * grid.node_weight(i) * std::pow(phi[i], params_.r() - 1.0);
        return grad;
    }

    /// Size of the projected gradient that rounding of phi alone produces:
    /// unit roundoff times the row sums of |Jacobian| |phi|.  Only exceeds
    /// grad_tol where the regularized flux is very stiff (r < 2, |Dphi| ~ eps).
    double rounding_floor(const GridFunction& phi) const
    {
        const Grid& grid = phi.grid();
        const double h = grid.spacing();
        const double r = params_.r();
        std::vector<double> row(grid.size(), 0.0);
        for (std::size_t k = 0; k < grid.cells(); ++k) {
            const double g = (phi[k + 1] - phi[k]) / h;
            const double c = params_.mu() * grid.flux_weight(k) * rflux_derivative(g, r, eps_) / h *
                             (std::abs(phi[k]) + std::abs(phi[k + 1]));
            row[k] += c;
            row[k + 1] += c;
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < row.size(); ++i) {
            const double m = std::pow(phi[i], r);
            const double x = grid.node(i);
            row[i] += grid.node_weight(i) * (std::abs(f_(x, m)) + std::abs(lambda_) + std::abs(f_.derivative(x, m)) * m) *
                      std::pow(phi[i], r - 1.0);
            worst = std::max(worst, row[i]);
        }
        return 8.0 * std::numeric_limits<double>::epsilon() * worst;
    }

    /// Newton step on (residual = 0, linearized constraint) in the unknowns (dphi, dlambda).
    bool newton_direction(const GridFunction& phi, double lambda, std::vector<double>& dir) const
    {
        const Grid& grid = phi.grid();
        const std::size_t n = grid.size();
        const double h = grid.spacing();
        const double r = params_.r();
        const double mu = params_.mu();
        BorderedBandedMatrix jac(n - 1, 2, 1, 1);
        for (std::size_t k = 0; k < grid.cells(); ++k) {
            const double g = (phi[k + 1] - phi[k]) / h;
            const double c = mu * grid.flux_weight(k) * rflux_derivative(g, r, eps_) / h;
            jac.add(k, k, c);
            jac.add(k + 1, k + 1, c);
            jac.add(k, k + 1, -c);
            jac.add(k + 1, k, -c);
        }
        std::vector<double> rhs(n + 1, 0.0);
        double lam_unused = 0.0;
        const std::vector<double> res = residual(phi, lam_unused);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = grid.node(i);
            const double w = grid.node_weight(i);
            const double p1 = std::pow(phi[i], r - 1.0);
            const double p2 = std::pow(phi[i], r - 2.0);
            const double m = p1 * phi[i];
            jac.add(i, i, w * (f_.derivative(x, m) * r * p1 * p1 + (f_(x, m) - lambda) * (r - 1.0) * p2));
            jac.add(i, n, -w * p1);
            jac.add(n, i, r * w * p1);
            rhs[i] = -res[i];
        }
        try {
            std::vector<double> sol = jac.solve(rhs);
            sol.resize(n);
            for (double v : sol)
                if (!std::isfinite(v)) return false;
            dir = std::move(sol);
            return true;
        } catch (const SingularMatrixError&) {
            return false;
        }
    }

    /// Solves P d = -res with P a symmetric positive definite stiffness-plus-mass matrix.
    void preconditioned_gradient(const GridFunction& phi, const std::vector<double>& res,
                                 std::vector<double>& dir) const
    {
        const Grid& grid = phi.grid();
        const std::size_t n = grid.size();
        const double h = grid.spacing();
        const double r = params_.r();
        const double mu = params_.mu();
        BorderedBandedMatrix p(n, 0, 1, 1);
        for (std::size_t k = 0; k < grid.cells(); ++k) {
            const double g = (phi[k + 1] - phi[k]) / h;
            const double c = mu * grid.flux_weight(k) * std::max(rflux_derivative(g, r, eps_), 1e-8) / h;
            p.add(k, k, c);
            p.add(k + 1, k + 1, c);
            p.add(k, k + 1, -c);
            p.add(k + 1, k, -c);
        }
        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i) {
            p.add(i, i, grid.node_weight(i) * (1.0 + std::pow(phi[i], r - 2.0)));
            rhs[i] = -res[i];
        }
        dir = p.solve(rhs);
    }

    /// Backtracking along phi + s dir followed by renormalization; commits the
    /// first candidate satisfying the Armijo condition.
    bool line_search(GridFunction& phi, const std::vector<double>& res, const std::vector<double>& dir, double s,
                     double* adaptive)
    {
        const double slope = dot(res, dir);
        const double r = params_.r();
        GridFunction trial = phi;
        for (int attempt = 0; attempt < 60; ++attempt, s *= 0.5) {
            bool positive = true;
            for (std::size_t i = 0; i < phi.size(); ++i) {
                trial[i] = phi[i] + s * dir[i];
                if (!(trial[i] > cfg_.positivity_floor)) positive = false;
            }
            if (!positive) continue;
            normalize_power(trial, r);
            if (!(trial.min() > cfg_.positivity_floor)) continue;
            const double de = energy_difference(phi, trial, params_, f_, eps_, lambda_);
            if (de <= 1e-4 * s * slope) {
                phi = std::move(trial);
                last_decrease_ = de;
                if (adaptive) *adaptive = std::min(2.0 * s, 1.0);
                return true;
            }
        }
        return false;
    }

    const HamiltonianParams& params_;
    const Coupling& f_;
    const SolverConfig& cfg_;
    double eps_;
    double last_decrease_ = 0.0;
    double lambda_ = 0.0;
};

}  // namespace detail

/// Solves -mu Delta_r phi + (f(x,phi^r) - lambda) phi^(r-1) = 0, int phi^r = 1,
/// phi > 0 with zero-flux boundaries, by constrained energy descent with
/// continuation in the gradient regularization.
inline std::pair<PhiSolution, SolveTrace> solve_rlaplace(const DomainSpec& domain, const HamiltonianParams& params,
                                                         const Coupling& f, const SolverConfig& cfg)
{
    cfg.validate();
    const Grid grid(domain, cfg.n);
    const double r = params.r();
    GridFunction phi = GridFunction::constant(grid, std::pow(domain.volume(), -1.0 / r));
    detail::normalize_power(phi, r);

    SolveTrace trace;
    trace.uniqueness_guaranteed = f.monotone;
    bool ok = false;
    for (double eps : cfg.eps_schedule) {
        trace.stages.push_back({});
        SolveTrace::Stage& stage = trace.stages.back();
        stage.eps = eps;
        ok = detail::RLaplaceStage(params, f, cfg, eps).run(phi, stage, trace);
        if (phi.min() <= cfg.positivity_floor) {
            trace.final_residual = stage.residual.back();
            throw PositivityFailure("solve_rlaplace: phi fell below the positivity floor", std::move(trace));
        }
        if (!ok) {
            trace.final_residual = stage.residual.back();
            std::ostringstream msg;
            msg << "solve_rlaplace: stage eps=" << eps << " did not converge (" << trace.message << ")";
            throw NonConvergenceError(msg.str(), std::move(trace));
        }
    }
    trace.final_residual = trace.stages.back().residual.back();
    trace.converged = ok;
    if (!f.monotone) trace.message = "uniqueness not guaranteed: coupling is not monotone";
    const double lambda = lambda_from_phi(phi, params, f);
    return {PhiSolution{std::move(phi), lambda}, std::move(trace)};
}

}  // namespace mfghc
