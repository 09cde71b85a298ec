#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mfghc/rlaplace.hpp"
#include "support.hpp"

using namespace mfghc;
using testing_support::config_with_n;
using testing_support::params_r;
using testing_support::quadratic_benchmark_coupling;
using testing_support::random_phi;

TEST(DiscreteEnergy, ConstantPhiHasOnlyPotentialPart)
{
    const Grid g(DomainSpec::interval(0, 1), 33);
    const auto phi = GridFunction::constant(g, 1.0);
    EXPECT_NEAR(discrete_energy(phi, params_r(2.0), Coupling::linear(1.0), 0.0), 0.25, 1e-15);
    EXPECT_EQ(discrete_energy(phi, params_r(3.0), Coupling::zero(), 0.0), 0.0);
}

TEST(DiscreteEnergy, DirectionalDerivativeMatchesGradient)
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double rs[] = {1.5, 2.0, 3.0, 4.0};
    const Coupling f = quadratic_benchmark_coupling();
    for (int pair = 0; pair < 20; ++pair) {
        const double r = rs[pair % 4];
        const Grid g(pair % 3 == 0 ? DomainSpec::radial_ball(1.0, 2) : DomainSpec::interval(0, 1), 65);
        const auto params = params_r(r);
        const GridFunction phi = random_phi(g, r, rng);
        // Smooth direction, so that finite-difference truncation stays far below the tolerance.
        const double c1 = u(rng), c2 = u(rng), c3 = u(rng), s1 = u(rng);
        const double L = g.domain().right() - g.domain().left();
        const GridFunction v = GridFunction::sample(g, [&](double x) {
            const double t = std::numbers::pi * x / L;
            return c1 * std::cos(t + s1) + c2 * std::cos(2 * t) + c3 * std::sin(3 * t);
        });
        const double eps = 1e-2;
        const std::vector<double> grad = energy_gradient(phi, params, f, eps);
        double analytic = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) analytic += grad[i] * v[i];
        const double t = 1e-5;
        GridFunction plus = phi, minus = phi;
        for (std::size_t i = 0; i < g.size(); ++i) {
            plus[i] += t * v[i];
            minus[i] -= t * v[i];
        }
        const double fd = energy_difference(minus, plus, params, f, eps) / (2 * t);
        EXPECT_NEAR(fd, analytic, 1e-6 * std::abs(analytic)) << "pair " << pair << " r=" << r;
    }
}

TEST(EnergyDifference, AgreesWithDirectDifference)
{
    std::mt19937_64 rng(9);
    const Grid g(DomainSpec::interval(0, 1), 65);
    const auto params = params_r(3.0);
    const Coupling f = Coupling::power(1.0, 2.0);
    const GridFunction a = random_phi(g, 3.0, rng), b = random_phi(g, 3.0, rng);
    EXPECT_NEAR(energy_difference(a, b, params, f, 1e-3),
                discrete_energy(b, params, f, 1e-3) - discrete_energy(a, params, f, 1e-3), 1e-13);
}

TEST(LambdaFromPhi, RequiresNormalization)
{
    const Grid g(DomainSpec::interval(0, 1), 17);
    EXPECT_THROW(lambda_from_phi(GridFunction::constant(g, 2.0), params_r(2.0), Coupling::zero()), PreconditionError);
}

TEST(WeakForm, VanishesOnConstantSolution)
{
    const Grid g(DomainSpec::interval(0, 1), 33);
    const auto res = rlaplace_weak_form(GridFunction::constant(g, 1.0), 1.0, params_r(3.0), Coupling::linear(1.0), 0.0);
    for (double v : res) EXPECT_EQ(v, 0.0);
}

class TrivialRLaplace : public ::testing::TestWithParam<double> {};

TEST_P(TrivialRLaplace, ConstantsAreReturned)
{
    const double r = GetParam();
    for (const auto& domain : {DomainSpec::interval(0, 1), DomainSpec::radial_ball(1.0, 2)}) {
        for (const auto& [f, lam] : {std::pair{Coupling::zero(), 0.0}, std::pair{Coupling::linear(1.0), 1.0}}) {
            auto [sol, trace] = solve_rlaplace(domain, params_r(r), f, config_with_n(65));
            const double c = std::pow(domain.volume(), -1.0 / r);
            for (std::size_t i = 0; i < sol.phi.size(); ++i) EXPECT_NEAR(sol.phi[i], c, 1e-10);
            EXPECT_NEAR(sol.lambda, lam / (f.name == "linear" ? domain.volume() : 1.0), 1e-10);
            EXPECT_TRUE(trace.converged);
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Exponents, TrivialRLaplace, ::testing::Values(1.5, 2.0, 3.0, 4.0));

TEST(SolveRLaplace, EnergyNonincreasingWithinEachStage)
{
    for (double r : {1.5, 2.0, 3.0}) {
        auto [sol, trace] = solve_rlaplace(DomainSpec::interval(0, 1), params_r(r), quadratic_benchmark_coupling(),
                                           config_with_n(129));
        ASSERT_EQ(trace.stages.size(), 4u);
        for (const auto& st : trace.stages) {
            ASSERT_EQ(st.energy.size(), st.iterations + 1);
            for (std::size_t j = 1; j < st.energy.size(); ++j) EXPECT_LE(st.energy[j], st.energy[j - 1]);
        }
        // The accumulated energy tracks a direct evaluation.
        const double direct = discrete_energy(sol.phi, params_r(r), quadratic_benchmark_coupling(), 1e-8);
        EXPECT_NEAR(trace.stages.back().energy.back(), direct, 1e-10 * std::max(1.0, std::abs(direct)));
    }
}

TEST(SolveRLaplace, ConvergesAndIsNormalized)
{
    for (double r : {1.2, 1.5, 2.0, 3.0, 5.0}) {
        auto [sol, trace] = solve_rlaplace(DomainSpec::interval(0, 1), params_r(r), quadratic_benchmark_coupling(),
                                           config_with_n(129));
        EXPECT_TRUE(trace.converged);
        EXPECT_NO_THROW(sol.check_invariants(r, 1e-12));
        EXPECT_LE(trace.final_residual, std::max(1e-10, trace.rounding_floor));
        const std::vector<double> res = rlaplace_weak_form(sol.phi, sol.lambda, params_r(r),
                                                           quadratic_benchmark_coupling(), 1e-8);
        double sup = 0.0;
        for (double v : res) sup = std::max(sup, std::abs(v));
        EXPECT_LE(sup, std::max(1e-8, trace.rounding_floor)) << "r=" << r;
    }
}

TEST(SolveRLaplace, PreservesSymmetry)
{
    const Coupling f = Coupling::linear_plus_potential(1.0, [](double x) { return std::cos(2 * std::numbers::pi * x); });
    for (double r : {2.0, 3.0}) {
        auto [sol, trace] = solve_rlaplace(DomainSpec::interval(0, 1), params_r(r), f, config_with_n(129));
        const std::size_t n = sol.phi.size();
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(sol.phi[i], sol.phi[n - 1 - i], 1e-9);
    }
}

TEST(SolveRLaplace, SolvesRadialProblem)
{
    const Coupling f = Coupling::linear_plus_potential(1.0, [](double x) { return x * x; });
    auto [sol, trace] = solve_rlaplace(DomainSpec::radial_ball(1.0, 2), params_r(3.0), f, config_with_n(129));
    EXPECT_TRUE(trace.converged);
    // The potential pushes mass toward the origin.
    EXPECT_GT(sol.phi[0], sol.phi[sol.phi.size() - 1]);
}

TEST(SolveRLaplace, InvalidConfig)
{
    SolverConfig cfg = config_with_n(9);
    EXPECT_THROW(solve_rlaplace(DomainSpec::interval(0, 1), params_r(2.0), Coupling::zero(), cfg), ConfigError);
    cfg = config_with_n(65);
    cfg.eps_schedule = {1e-4, 1e-2};
    EXPECT_THROW(solve_rlaplace(DomainSpec::interval(0, 1), params_r(2.0), Coupling::zero(), cfg), ConfigError);
}

TEST(SolveRLaplace, IterationLimitRaisesNonConvergence)
{
    SolverConfig cfg = config_with_n(65);
    cfg.max_iters = 1;
    cfg.grad_tol = 1e-14;
    try {
        solve_rlaplace(DomainSpec::interval(0, 1), params_r(2.0), quadratic_benchmark_coupling(), cfg);
        FAIL() << "expected NonConvergenceError";
    } catch (const NonConvergenceError& e) {
        EXPECT_FALSE(e.trace().converged);
        EXPECT_FALSE(e.trace().stages.empty());
        EXPECT_FALSE(std::string(e.what()).empty());
    }
}

TEST(SolveRLaplace, NonMonotoneCouplingIsFlagged)
{
    const Coupling f = Coupling::linear_plus_potential(-0.1, [](double x) { return std::sin(2 * std::numbers::pi * x); });
    auto [sol, trace] = solve_rlaplace(DomainSpec::interval(0, 1), params_r(2.0), f, config_with_n(65));
    EXPECT_FALSE(trace.uniqueness_guaranteed);
    EXPECT_NE(trace.message.find("uniqueness"), std::string::npos);
}

namespace {

/// Lowest eigenpair of the symmetric tridiagonal pencil (K + diag(w V), diag(w))
/// by shifted inverse iteration with the Thomas algorithm.
std::pair<std::vector<double>, double> ground_state(const Grid& g, double mu, const std::function<double(double)>& V)
{
    const std::size_t n = g.size();
    const double h = g.spacing();
    std::vector<double> diag(n, 0.0), off(n - 1, 0.0), w(n);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double c = mu * g.flux_weight(k) / h;
        diag[k] += c;
        diag[k + 1] += c;
        off[k] = -c;
    }
    double vmin = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = g.node_weight(i);
        diag[i] += w[i] * V(g.node(i));
        vmin = std::min(vmin, V(g.node(i)));
    }
    const double shift = vmin - 1.0;
    std::vector<double> x(n, 1.0), y(n), cp(n), dp(n);
    double lambda = 0.0;
    for (int it = 0; it < 500; ++it) {
        // (A - shift W) y = W x
        for (std::size_t i = 0; i < n; ++i) dp[i] = w[i] * x[i];
        double b0 = diag[0] - shift * w[0];
        cp[0] = off[0] / b0;
        dp[0] /= b0;
        for (std::size_t i = 1; i < n; ++i) {
            const double b = diag[i] - shift * w[i] - off[i - 1] * cp[i - 1];
            if (i + 1 < n) cp[i] = off[i] / b;
            dp[i] = (dp[i] - off[i - 1] * dp[i - 1]) / b;
        }
        y[n - 1] = dp[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) y[i] = dp[i] - cp[i] * y[i + 1];
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm += w[i] * y[i] * y[i];
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / norm;
        // Rayleigh quotient
        double num = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double ax = diag[i] * x[i];
            if (i > 0) ax += off[i - 1] * x[i - 1];
            if (i + 1 < n) ax += off[i] * x[i + 1];
            num += x[i] * ax;
        }
        lambda = num;
    }
    if (x[0] < 0)
        for (auto& v : x) v = -v;
    return {x, lambda};
}

}  // namespace

TEST(SolveRLaplace, MatchesLinearEigenproblemForQuadraticCase)
{
    // With f independent of m and r = 2 the problem is a Schroedinger ground state.
    const auto V = [](double x) { return 3.0 * std::cos(2 * std::numbers::pi * x) + x; };
    const auto params = params_r(2.0);
    for (const auto& domain : {DomainSpec::interval(0, 1), DomainSpec::radial_ball(1.0, 3)}) {
        const Grid g(domain, 257);
        const auto [ref, ref_lambda] = ground_state(g, params.mu(), V);
        auto [sol, trace] = solve_rlaplace(domain, params, Coupling::potential_only(V), config_with_n(257));
        EXPECT_NEAR(sol.lambda, ref_lambda, 1e-6);
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(sol.phi[i], ref[i], 1e-6);
    }
}
