#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
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

enum class DriftRegularity {
    Smooth,         ///< r' >= 2: DH is C^1
    SingularDrift,  ///< 1 < r' < 2: DH is only Hoelder at Du = 0
};

inline DriftRegularity smooth_hamiltonian_guard(const HamiltonianParams& params)
{
    return params.r_conj() >= 2.0 ? DriftRegularity::Smooth : DriftRegularity::SingularDrift;
}

inline const char* to_string(DriftRegularity d)
{
    return d == DriftRegularity::Smooth ? "smooth" : "singular-drift";
}

namespace detail {

/// Conservative Laplacian (w u')' / w on the dual cell of node i; boundary
/// cells carry no outer flux (Neumann, or the origin of a ball).
inline double laplacian_at(const Grid& grid, std::span<const double> u, std::size_t i)
{
    const double h = grid.spacing();
    double flux = 0.0;
    if (i + 1 < grid.size()) flux += grid.flux_weight(i) * (u[i + 1] - u[i]) / h;
    if (i > 0) flux -= grid.flux_weight(i - 1) * (u[i] - u[i - 1]) / h;
    return flux / grid.node_weight(i);
}

/// Central difference; zero at the end nodes by reflection.
inline double gradient_at(const Grid& grid, std::span<const double> u, std::size_t i)
{
    if (i == 0 || i + 1 == grid.size()) return 0.0;
    return (u[i + 1] - u[i - 1]) / (2.0 * grid.spacing());
}

/// Kolmogorov flux nu Dm + mean(m) DH(Du) on cell k.
inline double kolmogorov_flux(const Grid& grid, std::span<const double> u, std::span<const double> m, std::size_t k,
                              const HamiltonianParams& params)
{
    const double h = grid.spacing();
    const double g = (u[k + 1] - u[k]) / h;
    return params.nu() * (m[k + 1] - m[k]) / h + 0.5 * (m[k] + m[k + 1]) * params.drift(g);
}

}  // namespace detail

/// Pointwise residual -nu Lap u + H(Du) + lambda - f(x, m) at the nodes.
inline GridFunction hjb_residual(const GridFunction& u, const GridFunction& m, double lambda,
                                 const HamiltonianParams& params, const Coupling& f)
{
    require_same_grid(u, m, "hjb_residual");
    if (!u.at_nodes()) throw ShapeError("hjb_residual: expects nodal values");
    const Grid& grid = u.grid();
    std::vector<double> res(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        res[i] = -params.nu() * detail::laplacian_at(grid, u.values(), i) +
                 params.hamiltonian(detail::gradient_at(grid, u.values(), i)) + lambda - f(grid.node(i), m[i]);
    }
    return {grid, std::move(res)};
}

/// nu int Dm . Dxi + int m DH(Du) . Dxi for every nodal hat xi, boundary hats included.
inline std::vector<double> kolmogorov_weak_residual(const GridFunction& u, const GridFunction& m,
                                                    const HamiltonianParams& params)
{
    require_same_grid(u, m, "kolmogorov_weak_residual");
    if (!u.at_nodes()) throw ShapeError("kolmogorov_weak_residual: expects nodal values");
    const Grid& grid = u.grid();
    std::vector<double> res(grid.size(), 0.0);
    for (std::size_t k = 0; k < grid.cells(); ++k) {
        const double w = grid.flux_weight(k) * detail::kolmogorov_flux(grid, u.values(), m.values(), k, params);
        res[k] -= w;
        res[k + 1] += w;
    }
    return res;
}

namespace detail {

/// Newton iteration for the discrete coupled system in the unknowns
/// (u_0, m_0, u_1, m_1, ..., u_{n-1}, m_{n-1}, lambda).  Rows: HJB_i at 2i,
/// Kolmogorov_i at 2i+1 except the last, which is replaced by the mass
/// constraint, and the gauge int u = 0 at 2n.
class CoupledNewton {
public:
    CoupledNewton(const Grid& grid, const HamiltonianParams& params, const SolverConfig& cfg)
        : grid_(grid), params_(params), cfg_(cfg), n_(grid.size())
    {
        jac_eps_ = smooth_hamiltonian_guard(params) == DriftRegularity::Smooth ? 0.0 : cfg.final_eps();
    }

    std::size_t unknowns() const { return 2 * n_ + 1; }

    std::vector<double> residual(const std::vector<double>& z, const Coupling& f) const
    {
        std::vector<double> u(n_), m(n_);
        split(z, u, m);
        const double lambda = z[2 * n_];
        std::vector<double> res(unknowns(), 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            res[2 * i] = -params_.nu() * laplacian_at(grid_, u, i) + params_.hamiltonian(gradient_at(grid_, u, i)) +
                         lambda - f(grid_.node(i), m[i]);
        }
        for (std::size_t k = 0; k < grid_.cells(); ++k) {
            const double w = grid_.flux_weight(k) * kolmogorov_flux(grid_, u, m, k, params_);
            res[2 * k + 1] -= w;
            if (k + 1 < n_ - 1) res[2 * k + 3] += w;
        }
        double mass = 0.0, mean = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            mass += grid_.node_weight(i) * m[i];
            mean += grid_.node_weight(i) * u[i];
        }
        res[2 * n_ - 1] = mass - 1.0;
        res[2 * n_] = mean;
        return res;
    }

    BorderedBandedMatrix jacobian(const std::vector<double>& z, const Coupling& f) const
    {
        const std::size_t core = 2 * n_ - 2;
        BorderedBandedMatrix jac(core, 3, 3, 2);
        std::vector<double> u(n_), m(n_);
        split(z, u, m);
        const double h = grid_.spacing();
        const double nu = params_.nu();
        const std::size_t lam = 2 * n_;
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t row = 2 * i;
            const double vol = grid_.node_weight(i);
            if (i + 1 < n_) {
                const double c = nu * grid_.flux_weight(i) / (h * vol);
                jac.add(row, 2 * i, c);
                jac.add(row, 2 * (i + 1), -c);
            }
            if (i > 0) {
                const double c = nu * grid_.flux_weight(i - 1) / (h * vol);
                jac.add(row, 2 * i, c);
                jac.add(row, 2 * (i - 1), -c);
            }
            if (i > 0 && i + 1 < n_) {
                const double dh = params_.drift(gradient_at(grid_, u, i)) / (2.0 * h);
                jac.add(row, 2 * (i + 1), dh);
                jac.add(row, 2 * (i - 1), -dh);
            }
            jac.add(row, 2 * i + 1, -f.derivative(grid_.node(i), m[i]));
            jac.add(row, lam, 1.0);
        }
        for (std::size_t k = 0; k < grid_.cells(); ++k) {
            const double w = grid_.flux_weight(k);
            const double g = (u[k + 1] - u[k]) / h;
            const double drift = params_.drift(g);
            const double mbar = 0.5 * (m[k] + m[k + 1]);
            const double ddrift = params_.drift_derivative(g, jac_eps_);
            // dF/d(u_k, u_{k+1}, m_k, m_{k+1})
            const double du0 = -mbar * ddrift / h, du1 = mbar * ddrift / h;
            const double dm0 = -nu / h + 0.5 * drift, dm1 = nu / h + 0.5 * drift;
            const auto add_row = [&](std::size_t row, double sign) {
                jac.add(row, 2 * k, sign * w * du0);
                jac.add(row, 2 * k + 2, sign * w * du1);
                jac.add(row, 2 * k + 1, sign * w * dm0);
                jac.add(row, 2 * k + 3, sign * w * dm1);
            };
            add_row(2 * k + 1, -1.0);
            if (k + 1 < n_ - 1) add_row(2 * k + 3, 1.0);
        }
        for (std::size_t i = 0; i < n_; ++i) {
            jac.add(2 * n_ - 1, 2 * i + 1, grid_.node_weight(i));
            jac.add(2 * n_, 2 * i, grid_.node_weight(i));
        }
        return jac;
    }

    /// Residual size that rounding of z alone produces: unit roundoff times
    /// the largest row sum of |terms|.  Dominated by nu |u| / h^2 on fine grids.
    double rounding_floor(const std::vector<double>& z, const Coupling& f) const
    {
        std::vector<double> u(n_), m(n_);
        split(z, u, m);
        const double h = grid_.spacing();
        const double nu = params_.nu();
        const double lambda = std::abs(z[2 * n_]);
        double worst = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            double diffusion = 0.0;
            if (i + 1 < n_) diffusion += grid_.flux_weight(i) * (std::abs(u[i + 1]) + std::abs(u[i]));
            if (i > 0) diffusion += grid_.flux_weight(i - 1) * (std::abs(u[i]) + std::abs(u[i - 1]));
            diffusion *= nu / (h * grid_.node_weight(i));
            const double g = gradient_at(grid_, u, i);
            const double row = diffusion + params_.hamiltonian(g) + std::abs(params_.drift(g)) * std::abs(g) + lambda +
                               std::abs(f(grid_.node(i), m[i])) + std::abs(f.derivative(grid_.node(i), m[i]) * m[i]);
            worst = std::max(worst, row);
        }
        for (std::size_t k = 0; k < grid_.cells(); ++k) {
            const double g = (u[k + 1] - u[k]) / h;
            const double mbar = 0.5 * (m[k] + m[k + 1]);
            const double row = grid_.flux_weight(k) * (nu * (m[k] + m[k + 1]) / h + 2.0 * mbar * std::abs(params_.drift(g)));
            worst = std::max(worst, 2.0 * row);
        }
        return 8.0 * std::numeric_limits<double>::epsilon() * worst;
    }

    /// Runs damped Newton from z; returns true on convergence.  Stops early,
    /// flagging the trace, when the residual is at its rounding floor.
    bool run(std::vector<double>& z, const Coupling& f, SolveTrace::Stage& stage, SolveTrace& trace,
             std::string& why) const
    {
        std::vector<double> res = residual(z, f);
        double norm = sup(res);
        stage.residual.push_back(norm);
        stage.lambda.push_back(z[2 * n_]);
        for (std::size_t it = 0; it < cfg_.newton_max_iters; ++it) {
            if (norm <= cfg_.newton_tol) return true;
            const double floor = rounding_floor(z, f);
            if (norm <= floor) {
                trace.rounding_limited = true;
                trace.rounding_floor = std::max(trace.rounding_floor, floor);
                return true;
            }
            std::vector<double> rhs(res.size());
            for (std::size_t i = 0; i < res.size(); ++i) rhs[i] = -res[i];
            std::vector<double> step;
            try {
                step = jacobian(z, f).solve(rhs);
            } catch (const SingularMatrixError& e) {
                why = std::string("singular Jacobian (is the coupling monotone?): ") + e.what();
                throw;
            }
            double s = 1.0;
            bool accepted = false;
            std::vector<double> trial(z.size());
            for (int attempt = 0; attempt < 40; ++attempt, s *= 0.5) {
                bool positive = true;
                for (std::size_t i = 0; i < z.size(); ++i) trial[i] = z[i] + s * step[i];
                for (std::size_t i = 0; i < n_; ++i)
                    if (!(trial[2 * i + 1] > 0.0)) positive = false;
                if (!positive) continue;
                std::vector<double> tres = residual(trial, f);
                const double tnorm = sup(tres);
                if (tnorm <= (1.0 - 1e-4 * s) * norm || (tnorm <= 10.0 * cfg_.newton_tol && tnorm < norm)) {
                    z = trial;
                    res = std::move(tres);
                    norm = tnorm;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                why = "damping failed at residual " + to_text(norm);
                return false;
            }
            ++stage.iterations;
            stage.residual.push_back(norm);
            stage.lambda.push_back(z[2 * n_]);
        }
        why = "Newton iteration limit reached at residual " + to_text(norm);
        return norm <= cfg_.newton_tol;
    }

    void split(const std::vector<double>& z, std::vector<double>& u, std::vector<double>& m) const
    {
        for (std::size_t i = 0; i < n_; ++i) {
            u[i] = z[2 * i];
            m[i] = z[2 * i + 1];
        }
    }

    static double sup(const std::vector<double>& v)
    {
        double s = 0.0;
        for (double x : v) s = std::max(s, std::abs(x));
        return s;
    }

    double jacobian_eps() const { return jac_eps_; }

private:
    static std::string to_text(double v)
    {
        std::ostringstream os;
        os << v;
        return os.str();
    }

    const Grid& grid_;
    const HamiltonianParams& params_;
    const SolverConfig& cfg_;
    std::size_t n_;
    double jac_eps_ = 0.0;
};

/// f_theta(x, m) = theta f(x, m) + (1 - theta) m: at theta = 0 constants solve the system.
inline Coupling blend_with_linear(const Coupling& f, double theta)
{
    Coupling g;
    g.name = f.name;
    g.eval = [f, theta](double x, double m) { return theta * f(x, m) + (1.0 - theta) * m; };
    g.primitive = [f, theta](double x, double m) { return theta * f.primitive(x, m) + (1.0 - theta) * 0.5 * m * m; };
    g.derivative = [f, theta](double x, double m) { return theta * f.derivative(x, m) + (1.0 - theta); };
    g.monotone = f.monotone;
    return g;
}

}  // namespace detail

/// Direct Newton solve of the coupled stationary system with analytic
/// Jacobian.  The additive constant of u is fixed by int u = 0.
inline std::pair<MFGSolution, SolveTrace> solve_coupled(const DomainSpec& domain, const HamiltonianParams& params,
                                                        const Coupling& f, const SolverConfig& cfg)
{
    cfg.validate();
    const Grid grid(domain, cfg.n);
    const std::size_t n = grid.size();
    detail::CoupledNewton newton(grid, params, cfg);

    SolveTrace trace;
    trace.uniqueness_guaranteed = f.monotone;
    trace.first_order_only = smooth_hamiltonian_guard(params) == DriftRegularity::SingularDrift;

    const double m0 = 1.0 / domain.volume();
    std::vector<double> cold(newton.unknowns(), 0.0);
    double lambda0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cold[2 * i + 1] = m0;
        lambda0 += grid.node_weight(i) * f(grid.node(i), m0);
    }
    cold[2 * n] = lambda0 / domain.volume();

    std::string why;
    const auto attempt = [&](std::vector<double>& z, const Coupling& g, double theta) {
        trace.stages.push_back({});
        trace.stages.back().eps = newton.jacobian_eps();
        trace.stages.back().theta = theta;
        try {
            return newton.run(z, g, trace.stages.back(), trace, why);
        } catch (const SingularMatrixError&) {
            return false;
        }
    };

    std::vector<double> z = cold;
    bool ok = attempt(z, f, 1.0);
    if (!ok) {
        // Continuation from the x-independent linear coupling, whose solution is constant.
        z = cold;
        z[2 * n] = m0;
        double theta = 0.0, dtheta = 0.25;
        std::vector<double> last = z;
        while (theta < 1.0) {
            const double next = std::min(1.0, theta + dtheta);
            std::vector<double> trial = last;
            const Coupling g = detail::blend_with_linear(f, next);
            if (attempt(trial, g, next)) {
                last = std::move(trial);
                theta = next;
                dtheta = std::min(2.0 * dtheta, 0.5);
            } else {
                dtheta *= 0.5;
                if (dtheta < 1.0 / 1024.0) break;
            }
        }
        ok = theta >= 1.0;
        z = std::move(last);
    }

    trace.final_residual = trace.stages.back().residual.back();
    if (!ok) {
        trace.message = why;
        const bool singular = why.rfind("singular", 0) == 0;
        std::string what = "solve_coupled: " + why;
        if (singular) throw SingularJacobianError(what, std::move(trace));
        if (why.rfind("damping", 0) == 0) throw PositivityFailure(what, std::move(trace));
        throw NonConvergenceError(what, std::move(trace));
    }
    trace.converged = true;
    if (!f.monotone) trace.message = "uniqueness not guaranteed: coupling is not monotone";

    std::vector<double> u(n), m(n);
    newton.split(z, u, m);
    MFGSolution sol{GridFunction(grid, std::move(u)), GridFunction(grid, std::move(m)), z[2 * n]};
    if (!(sol.m.min() > 0.0)) throw PositivityFailure("solve_coupled: density lost positivity", std::move(trace));
    return {std::move(sol), std::move(trace)};
}

}  // namespace mfghc
