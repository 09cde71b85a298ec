#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>

#include "mfghc/errors.hpp"

namespace mfghc {

/// Lagrangian growth exponent r of L(a) = (l0/r)|a|^r.
struct LagrangianExponent {
    double value;
};
/// Hamiltonian growth exponent r' = r/(r-1) of H(p) = (h0/r')|p|^r'.
struct HamiltonianExponent {
    double value;
};
struct HamiltonianCoefficient {
    double value;
};
struct LagrangianCoefficient {
    double value;
};

/// Conjugate exponent r/(r-1). Symmetric: applying it twice returns r.
inline double conjugate_exponent(double r)
{
    if (!(r > 1.0)) throw DomainError("conjugate_exponent: exponent must exceed 1, got " + std::to_string(r));
    return r / (r - 1.0);
}

/// Diffusivity of the transformed r-Laplace problem, nu (nu r / h0)^(r-1).
inline double mu_coefficient(double nu, double r, double h0)
{
    if (!(nu > 0.0)) throw DomainError("mu_coefficient: viscosity must be positive");
    if (!(h0 > 0.0)) throw DomainError("mu_coefficient: Hamiltonian coefficient must be positive");
    if (!(r > 1.0)) throw DomainError("mu_coefficient: exponent must exceed 1");
    return nu * std::pow(nu * r / h0, r - 1.0);
}

/// sign(x)|x|^s, continuous at 0 for s > 0.
inline double signed_power(double x, double s)
{
    if (x == 0.0) return 0.0;
    return std::copysign(std::pow(std::abs(x), s), x);
}

/// Parameters of the power Hamiltonian H(p) = (h0/r')|p|^r' together with the
/// viscosity and everything derived from them.  Immutable after construction.
class HamiltonianParams {
public:
    using Exponent = std::variant<LagrangianExponent, HamiltonianExponent>;
    using Coefficient = std::variant<HamiltonianCoefficient, LagrangianCoefficient>;

    HamiltonianParams(double nu, Exponent exponent, Coefficient coefficient)
        : nu_(nu)
    {
        if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("HamiltonianParams: viscosity must be positive");
        if (const auto* lag = std::get_if<LagrangianExponent>(&exponent)) {
            r_ = lag->value;
            r_conj_ = conjugate_exponent(r_);
        } else {
            r_conj_ = std::get<HamiltonianExponent>(exponent).value;
            r_ = conjugate_exponent(r_conj_);
        }
        if (const auto* hc = std::get_if<HamiltonianCoefficient>(&coefficient)) {
            h0_ = hc->value;
            if (!(h0_ > 0.0) || !std::isfinite(h0_)) throw DomainError("HamiltonianParams: h0 must be positive");
        } else {
            const double l0 = std::get<LagrangianCoefficient>(coefficient).value;
            if (!(l0 > 0.0) || !std::isfinite(l0)) throw DomainError("HamiltonianParams: l0 must be positive");
            l0_ = l0;
            h0_ = std::pow(l0, 1.0 - r_conj_);
        }
        mu_ = mu_coefficient(nu_, r_, h0_);
    }

    static HamiltonianParams quadratic(double nu = 1.0, double h0 = 1.0)
    {
        return {nu, LagrangianExponent{2.0}, HamiltonianCoefficient{h0}};
    }

    double nu() const { return nu_; }
    double r() const { return r_; }
    double r_conj() const { return r_conj_; }
    double h0() const { return h0_; }
    std::optional<double> l0() const { return l0_; }
    double mu() const { return mu_; }

    /// H(p) = (h0/r')|p|^r'.
    double hamiltonian(double p) const { return h0_ / r_conj_ * std::pow(std::abs(p), r_conj_); }

    /// DH(p) = h0|p|^(r'-2) p, written so that p = 0 never divides by zero.
    double drift(double p) const { return h0_ * signed_power(p, r_conj_ - 1.0); }

    /// d/dp of the eps-regularized drift h0 (p^2+eps^2)^((r'-2)/2) p.
    double drift_derivative(double p, double eps) const
    {
        const double q = p * p + eps * eps;
        if (q == 0.0) return r_conj_ >= 2.0 ? (r_conj_ == 2.0 ? h0_ : 0.0) : std::numeric_limits<double>::infinity();
        return h0_ * std::pow(q, 0.5 * (r_conj_ - 4.0)) * ((r_conj_ - 1.0) * p * p + eps * eps);
    }

private:
    double nu_ = 1.0;
    double r_ = 2.0;
    double r_conj_ = 2.0;
    double h0_ = 1.0;
    std::optional<double> l0_;
    double mu_ = 2.0;
};

}  // namespace mfghc
