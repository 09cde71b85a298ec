#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mfghc/errors.hpp"
#include "mfghc/grid.hpp"
#include "mfghc/params.hpp"

namespace mfghc {

/// A discrete solution (u, m, lambda) of the stationary MFG system.
struct MFGSolution {
    GridFunction u;
    GridFunction m;
    double lambda = 0.0;

    /// Throws unless m > 0 everywhere and integrates to one within `mass_tol`.
    void check_invariants(double mass_tol = 1e-8) const
    {
        require_same_grid(u, m, "MFGSolution");
        if (!(m.min() > 0.0)) throw PositivityError("MFGSolution: density is not strictly positive");
        const double mass = integrate(m);
        if (!(std::abs(mass - 1.0) <= mass_tol))
            throw PreconditionError("MFGSolution: density has mass " + std::to_string(mass));
    }
};

/// A discrete solution (phi, lambda) of the normalized r-Laplace problem.
struct PhiSolution {
    GridFunction phi;
    double lambda = 0.0;

    void check_invariants(double r, double mass_tol = 1e-8) const
    {
        if (!(phi.min() > 0.0)) throw PositivityError("PhiSolution: phi is not strictly positive");
        std::vector<double> p(phi.size());
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::pow(phi[i], r);
        const double mass = integrate(GridFunction(phi.grid(), std::move(p)));
        if (!(std::abs(mass - 1.0) <= mass_tol))
            throw PreconditionError("PhiSolution: phi^r has mass " + std::to_string(mass));
    }
};

/// The vector field F = nu Dm + h0 m |Du|^(r'-2) Du sampled at cell midpoints.
struct AlignmentReport {
    GridFunction flux;
    double sup_norm = 0.0;
    double rel_sup_norm = 0.0;
};

class AlignmentError : public PreconditionError {
public:
    AlignmentError(const std::string& what, AlignmentReport report)
        : PreconditionError(what), report_(std::move(report))
    {
    }
    const AlignmentReport& report() const { return report_; }

private:
    AlignmentReport report_;
};

/// Relative tolerance on the alignment flux below which the forward map is admissible.
inline constexpr double default_alignment_tol = 1e-4;

/// Evaluates the flux with midpoint differences and arithmetic-mean densities.
/// The relative norm divides by the larger of its two terms' sup norms.
inline AlignmentReport check_gradient_alignment(const MFGSolution& sol, const HamiltonianParams& params)
{
    require_same_grid(sol.u, sol.m, "check_gradient_alignment");
    const Grid& grid = sol.u.grid();
    const double h = grid.spacing();
    const double nu = params.nu();
    std::vector<double> flux(grid.cells());
    double diffusive = 0.0;
    double transport = 0.0;
    double sup = 0.0;
    for (std::size_t k = 0; k < grid.cells(); ++k) {
        const double dm = (sol.m[k + 1] - sol.m[k]) / h;
        const double du = (sol.u[k + 1] - sol.u[k]) / h;
        const double mbar = 0.5 * (sol.m[k] + sol.m[k + 1]);
        const double drift = params.drift(du);
        flux[k] = nu * dm + mbar * drift;
        diffusive = std::max(diffusive, nu * std::abs(dm));
        transport = std::max(transport, std::abs(mbar * drift));
        sup = std::max(sup, std::abs(flux[k]));
    }
    const double scale = std::max({diffusive, transport, 1e-300});
    return {GridFunction(grid, std::move(flux), GridFunction::Location::Midpoints), sup, sup / scale};
}

/// (u, m, lambda) -> (m^(1/r), lambda).  Requires the alignment flux to vanish
/// up to `tol` in the relative norm.
inline PhiSolution forward_transform(const MFGSolution& sol, const HamiltonianParams& params,
                                     double tol = default_alignment_tol)
{
    require_same_grid(sol.u, sol.m, "forward_transform");
    if (!(sol.m.min() > 0.0)) throw PositivityError("forward_transform: density must be strictly positive");
    AlignmentReport report = check_gradient_alignment(sol, params);
    if (report.rel_sup_norm > tol)
        throw AlignmentError("forward_transform: alignment flux " + std::to_string(report.rel_sup_norm) +
                                 " exceeds tolerance " + std::to_string(tol),
                             std::move(report));
    const double inv_r = 1.0 / params.r();
    std::vector<double> phi(sol.m.size());
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = std::pow(sol.m[i], inv_r);
    return {GridFunction(sol.m.grid(), std::move(phi)), sol.lambda};
}

/// Midpoint field b = -nu D(phi^r) / (h0 mean(phi^r)), the discrete form of
/// -nu r Dphi / (h0 phi).  Invariant under phi -> c phi.
inline GridFunction reconstruction_field(const GridFunction& phi, const HamiltonianParams& params)
{
    if (!phi.at_nodes()) throw ShapeError("reconstruction_field: expects nodal phi");
    if (!(phi.min() > 0.0)) throw PositivityError("reconstruction_field: phi must be strictly positive");
    const Grid& grid = phi.grid();
    const double h = grid.spacing();
    const double r = params.r();
    std::vector<double> b(grid.cells());
    for (std::size_t k = 0; k < grid.cells(); ++k) {
        const double m0 = std::pow(phi[k], r);
        const double m1 = std::pow(phi[k + 1], r);
        b[k] = -params.nu() * (m1 - m0) / (h * params.h0() * 0.5 * (m0 + m1));
    }
    return {grid, std::move(b), GridFunction::Location::Midpoints};
}

/// (phi, lambda) -> (u, phi^r, lambda).  u is accumulated from the left end
/// (rho = 0 for balls) with u = 0 there; on each cell Du = sign(b)|b|^(1/(r'-1)).
inline MFGSolution inverse_transform(const PhiSolution& phi_sol, const HamiltonianParams& params)
{
    const GridFunction& phi = phi_sol.phi;
    const GridFunction b = reconstruction_field(phi, params);
    const Grid& grid = phi.grid();
    const double h = grid.spacing();
    const double s = 1.0 / (params.r_conj() - 1.0);
    std::vector<double> u(grid.size(), 0.0);
    for (std::size_t k = 0; k < grid.cells(); ++k) u[k + 1] = u[k] + h * signed_power(b[k], s);
    std::vector<double> m(grid.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::pow(phi[i], params.r());
    return {GridFunction(grid, std::move(u)), GridFunction(grid, std::move(m)), phi_sol.lambda};
}

/// Normalized Gibbs density exp(-h0 u / nu) / integral, the quadratic Hopf-Cole density.
inline GridFunction quadratic_hopfcole_reference(const GridFunction& u, const HamiltonianParams& params)
{
    if (std::abs(params.r() - 2.0) > 1e-12)
        throw DomainError("quadratic_hopfcole_reference: requires r = 2, got " + std::to_string(params.r()));
    if (!u.at_nodes()) throw ShapeError("quadratic_hopfcole_reference: expects nodal u");
    const double umin = u.min();
    std::vector<double> g(u.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::exp(-params.h0() * (u[i] - umin) / params.nu());
    GridFunction gibbs(u.grid(), std::move(g));
    const double z = integrate(gibbs);
    for (auto& v : gibbs.mutable_values()) v /= z;
    return gibbs;
}

}  // namespace mfghc
