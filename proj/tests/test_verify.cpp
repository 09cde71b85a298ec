#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mfghc/verify.hpp"
#include "support.hpp"

using namespace mfghc;
using testing_support::config_with_n;
using testing_support::params_r;
using testing_support::quadratic_benchmark_coupling;

TEST(ProofIdentities, QuadraticIsExact)
{
    const auto rep = proof_identity_suite(params_r(2.0));
    EXPECT_EQ(rep.max_deviation(), 0.0);
}

TEST(ProofIdentities, CubicLagrangian)
{
    EXPECT_LE(proof_identity_suite(params_r(3.0)).max_deviation(), 1e-15);
}

TEST(ProofIdentities, RandomExponents)
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> dist(1.01, 50.0);
    for (int i = 0; i < 100; ++i) {
        const double r = dist(rng);
        const auto rep = proof_identity_suite(params_r(r));
        EXPECT_LE(rep.sum_deviation, 1e-12) << r;
        EXPECT_LE(rep.exponent_deviation, 1e-12) << r;
        EXPECT_LE(rep.max_deviation(), 1e-12) << r;
    }
}

TEST(ResidualReport, NormInvariant)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> v(10 + trial);
        for (auto& x : v) x = u(rng);
        const auto rep = make_report(ResidualKind::HjbPointwise, v, v.size());
        EXPECT_GE(rep.sup_norm, 0.0);
        EXPECT_LE(rep.l2_norm, std::sqrt(static_cast<double>(v.size())) * rep.sup_norm * (1 + 1e-15));
    }
    EXPECT_STREQ(to_string(ResidualKind::RLaplaceWeak), "rlaplace-weak");
}

TEST(RLaplaceWeakResidual, ConstantSolutionIsExact)
{
    const Grid g(DomainSpec::interval(0, 1), 33);
    const auto rep = rlaplace_weak_residual({GridFunction::constant(g, 1.0), 1.0}, params_r(3.0), Coupling::linear(1.0));
    EXPECT_EQ(rep.sup_norm, 0.0);
    EXPECT_EQ(rep.values.size(), 33u);
}

TEST(RLaplaceWeakResidual, SolverOutputQuadratic)
{
    auto [sol, trace] = solve_rlaplace(DomainSpec::interval(0, 1), HamiltonianParams::quadratic(),
                                       quadratic_benchmark_coupling(), config_with_n(257));
    EXPECT_LE(rlaplace_weak_residual(sol, HamiltonianParams::quadratic(), quadratic_benchmark_coupling()).sup_norm,
              1e-9);
}

TEST(ClassTolerance, OrderDependsOnExponent)
{
    EXPECT_EQ(expected_order(params_r(2.0)), 2);
    EXPECT_EQ(expected_order(params_r(3.0)), 1);
    EXPECT_DOUBLE_EQ(class_tolerance(params_r(2.0), 0.1), 0.1);
    EXPECT_DOUBLE_EQ(class_tolerance(params_r(1.5), 0.1), 1.0);
}

TEST(FitOrder, RecoversSlope)
{
    const std::vector<double> hs{0.1, 0.05, 0.025};
    const auto p = fit_order(hs, {3 * 0.01, 3 * 0.0025, 3 * 0.000625});
    ASSERT_TRUE(p.has_value());
    EXPECT_NEAR(*p, 2.0, 1e-12);
    EXPECT_FALSE(fit_order(hs, {0.0, 1e-16, 0.0}).has_value());
    EXPECT_THROW(fit_order({0.1}, {0.1}), PreconditionError);
}

TEST(CrossValidate, ZeroCouplingAgreesExactly)
{
    for (double r : {2.0, 3.0}) {
        const auto rep = cross_validate(DomainSpec::interval(0, 1), params_r(r), Coupling::zero(), config_with_n(65));
        EXPECT_LE(rep.density_diff, 1e-10);
        EXPECT_LE(rep.lambda_diff, 1e-10);
        EXPECT_LE(rep.gradient_diff, 1e-10);
        EXPECT_LE(rep.value_diff, 1e-10);
        for (const auto& res : rep.oracle_residuals) EXPECT_LE(res.sup_norm, 1e-10) << to_string(res.kind);
        for (const auto& res : rep.rlaplace_residuals) EXPECT_LE(res.sup_norm, 1e-10) << to_string(res.kind);
    }
}

TEST(CrossValidate, QuadraticResidualsWithinClassTolerance)
{
    const auto params = HamiltonianParams::quadratic();
    const auto rep = cross_validate(DomainSpec::interval(0, 1), params, quadratic_benchmark_coupling(), config_with_n(129));
    const double tol = class_tolerance(params, rep.h);
    ASSERT_EQ(rep.oracle_residuals.size(), 4u);
    ASSERT_EQ(rep.rlaplace_residuals.size(), 4u);
    for (const auto& res : rep.oracle_residuals) EXPECT_LE(res.judged_norm(), tol) << to_string(res.kind);
    for (const auto& res : rep.rlaplace_residuals) EXPECT_LE(res.judged_norm(), tol) << to_string(res.kind);
    EXPECT_LE(rep.lambda_diff, tol);
    EXPECT_LE(rep.density_diff, tol);
}

TEST(CrossValidate, RadialCubicFirstOrderAgreement)
{
    const auto params = params_r(3.0);
    const Coupling f = Coupling::linear_plus_potential(1.0, [](double x) { return x * x; });
    const auto rep = cross_validate(DomainSpec::radial_ball(1.0, 2), params, f, config_with_n(129));
    EXPECT_LE(rep.lambda_diff, 10 * rep.h);
    EXPECT_LE(rep.density_diff, 10 * rep.h);
    EXPECT_LE(rep.gradient_diff, 10 * rep.h);
}

TEST(CrossValidate, ConvergesUnderRefinement)
{
    const auto params = HamiltonianParams::quadratic();
    std::vector<double> hs, errs;
    for (std::size_t n : {65u, 129u, 257u}) {
        const auto rep = cross_validate(DomainSpec::interval(0, 1), params, quadratic_benchmark_coupling(), config_with_n(n));
        hs.push_back(rep.h);
        errs.push_back(rep.density_diff);
    }
    const auto p = fit_order(hs, errs);
    ASSERT_TRUE(p.has_value());
    EXPECT_GE(*p, 1.9);
}
