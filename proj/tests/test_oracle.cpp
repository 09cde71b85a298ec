#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mfghc/oracle.hpp"
#include "support.hpp"

using namespace mfghc;
using testing_support::config_with_n;
using testing_support::params_r;
using testing_support::quadratic_benchmark_coupling;

TEST(DriftGuard, Classification)
{
    EXPECT_EQ(smooth_hamiltonian_guard(params_r(2.0)), DriftRegularity::Smooth);
    EXPECT_EQ(smooth_hamiltonian_guard(params_r(1.5)), DriftRegularity::Smooth);
    EXPECT_EQ(smooth_hamiltonian_guard(params_r(3.0)), DriftRegularity::SingularDrift);
    EXPECT_STREQ(to_string(DriftRegularity::SingularDrift), "singular-drift");
}

class JacobianCheck : public ::testing::TestWithParam<std::tuple<double, bool>> {};

TEST_P(JacobianCheck, MatchesFiniteDifferences)
{
    const auto [r, radial] = GetParam();
    const Grid grid(radial ? DomainSpec::radial_ball(1.0, 2) : DomainSpec::interval(0, 1), 33);
    const auto params = params_r(r, 0.9, 1.1);
    const SolverConfig cfg = config_with_n(33);
    const detail::CoupledNewton newton(grid, params, cfg);
    const Coupling f = Coupling::power(1.3, 1.5);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t n = grid.size();
    std::vector<double> z(newton.unknowns());
    for (std::size_t i = 0; i < n; ++i) {
        const double x = grid.node(i);
        z[2 * i] = x + 0.1 * std::sin(3 * x);  // gradient bounded away from 0
        z[2 * i + 1] = 1.0 + 0.3 * std::cos(2 * x);
    }
    z[2 * n] = 0.4;
    const auto jac = newton.jacobian(z, f);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> v(z.size());
        for (auto& x : v) x = u(rng);
        const std::vector<double> jv = jac.multiply(v);
        const double t = 1e-6;
        std::vector<double> zp = z, zm = z;
        for (std::size_t i = 0; i < z.size(); ++i) {
            zp[i] += t * v[i];
            zm[i] -= t * v[i];
        }
        const auto rp = newton.residual(zp, f), rm = newton.residual(zm, f);
        double scale = 0.0;
        for (double x : jv) scale = std::max(scale, std::abs(x));
        for (std::size_t i = 0; i < z.size(); ++i)
            EXPECT_NEAR(jv[i], (rp[i] - rm[i]) / (2 * t), 1e-6 * scale) << "row " << i;
    }
}

INSTANTIATE_TEST_SUITE_P(Exponents, JacobianCheck,
                         ::testing::Combine(::testing::Values(1.5, 2.0, 3.0, 4.0), ::testing::Bool()));

TEST(SolveCoupled, TrivialInstancesAreConstant)
{
    for (double r : {1.5, 2.0, 3.0}) {
        for (const auto& domain : {DomainSpec::interval(0, 1), DomainSpec::radial_ball(2.0, 3)}) {
            const double vol = domain.volume();
            for (const auto& [f, lam] : {std::pair{Coupling::zero(), 0.0}, std::pair{Coupling::linear(1.0), 1.0 / vol}}) {
                auto [sol, trace] = solve_coupled(domain, params_r(r), f, config_with_n(65));
                EXPECT_TRUE(trace.converged);
                EXPECT_NEAR(sol.lambda, lam, 1e-10);
                for (std::size_t i = 0; i < sol.m.size(); ++i) {
                    EXPECT_NEAR(sol.m[i], 1.0 / vol, 1e-10);
                    EXPECT_NEAR(sol.u[i], 0.0, 1e-10);
                }
            }
        }
    }
}

TEST(SolveCoupled, QuadraticSolutionIsGibbsDensity)
{
    const auto params = HamiltonianParams::quadratic(1.0, 1.0);
    auto [sol, trace] = solve_coupled(DomainSpec::interval(0, 1), params, quadratic_benchmark_coupling(), config_with_n(257));
    const double h = sol.u.grid().spacing();
    const GridFunction gibbs = quadratic_hopfcole_reference(sol.u, params);
    double err = 0.0;
    for (std::size_t i = 0; i < gibbs.size(); ++i) err = std::max(err, std::abs(gibbs[i] - sol.m[i]));
    EXPECT_LE(err, 10 * h * h);
    EXPECT_NO_THROW(sol.check_invariants(1e-12));
    EXPECT_LE(hjb_residual(sol.u, sol.m, sol.lambda, params, quadratic_benchmark_coupling()).sup_norm(), 1e-10);
    EXPECT_NEAR(integrate(sol.u), 0.0, 1e-12);
}

TEST(SolveCoupled, SecondOrderUnderRefinement)
{
    const auto params = HamiltonianParams::quadratic(1.0, 1.0);
    const Coupling f = quadratic_benchmark_coupling();
    auto [ref, t0] = solve_coupled(DomainSpec::interval(0, 1), params, f, config_with_n(1025));
    auto err = [&](std::size_t n) {
        auto [sol, t] = solve_coupled(DomainSpec::interval(0, 1), params, f, config_with_n(n));
        const std::size_t stride = 1024 / (n - 1);
        double e = 0.0;
        for (std::size_t i = 0; i < n; ++i) e = std::max(e, std::abs(sol.m[i] - ref.m[i * stride]));
        return e;
    };
    const double e65 = err(65), e129 = err(129), e257 = err(257);
    EXPECT_GE(std::log2(e65 / e129), 1.9);
    EXPECT_GE(std::log2(e129 / e257), 1.9);
}

TEST(SolveCoupled, SingularDriftRadial)
{
    const auto params = params_r(3.0);
    const Coupling f = Coupling::linear_plus_potential(1.0, [](double x) { return x * x; });
    auto [sol, trace] = solve_coupled(DomainSpec::radial_ball(1.0, 2), params, f, config_with_n(129));
    EXPECT_TRUE(trace.converged);
    EXPECT_TRUE(trace.first_order_only);
    EXPECT_NO_THROW(sol.check_invariants(1e-12));
    double k = 0.0;
    for (double v : kolmogorov_weak_residual(sol.u, sol.m, params)) k = std::max(k, std::abs(v));
    EXPECT_LE(k, 1e-10);
    EXPECT_LE(check_gradient_alignment(sol, params).rel_sup_norm, 1e-8);
}

TEST(SolveCoupled, NonMonotoneCouplingIsFlagged)
{
    const Coupling f = Coupling::linear_plus_potential(-0.1, [](double x) { return std::sin(2 * std::numbers::pi * x); });
    auto [sol, trace] = solve_coupled(DomainSpec::interval(0, 1), params_r(2.0), f, config_with_n(65));
    EXPECT_FALSE(trace.uniqueness_guaranteed);
    EXPECT_FALSE(trace.message.empty());
}

TEST(SolveCoupled, IterationLimitRaisesSolverError)
{
    SolverConfig cfg = config_with_n(65);
    cfg.newton_max_iters = 1;
    cfg.newton_tol = 1e-15;
    try {
        solve_coupled(DomainSpec::interval(0, 1), params_r(2.0), quadratic_benchmark_coupling(), cfg);
        FAIL() << "expected a solver error";
    } catch (const SolverError& e) {
        EXPECT_FALSE(e.trace().converged);
        EXPECT_FALSE(e.trace().stages.empty());
    }
}

TEST(SolveCoupled, ContinuationRecordsThetaStages)
{
    // Small viscosity and a strong potential defeat the cold start.
    const auto params = params_r(2.0, 0.1);
    const Coupling f =
        Coupling::linear_plus_potential(0.05, [](double x) { return 5.0 * std::cos(2 * std::numbers::pi * x); });
    auto [sol, trace] = solve_coupled(DomainSpec::interval(0, 1), params, f, config_with_n(257));
    EXPECT_TRUE(trace.converged);
    EXPECT_GT(trace.stages.size(), 1u);
    EXPECT_LT(trace.stages[1].theta, 1.0);
    EXPECT_EQ(trace.stages.back().theta, 1.0);
    EXPECT_LE(hjb_residual(sol.u, sol.m, sol.lambda, params, f).sup_norm(), 1e-10);
}

TEST(SolveCoupled, FineGridStopsAtRoundingFloor)
{
    SolverConfig cfg = config_with_n(2049);
    auto [sol, trace] = solve_coupled(DomainSpec::interval(0, 1), HamiltonianParams::quadratic(),
                                      quadratic_benchmark_coupling(), cfg);
    EXPECT_TRUE(trace.converged);
    EXPECT_LE(trace.final_residual, std::max(cfg.newton_tol, trace.rounding_floor));
    if (trace.rounding_limited) {
        EXPECT_LT(trace.rounding_floor, 1e-8);
    }
}
