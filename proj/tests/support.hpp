#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>

#include "mfghc/coupling.hpp"
#include "mfghc/grid.hpp"
#include "mfghc/params.hpp"
#include "mfghc/solver_common.hpp"

namespace testing_support {

inline mfghc::Coupling quadratic_benchmark_coupling()
{
    return mfghc::Coupling::linear_plus_potential(1.0, [](double x) { return std::sin(2.0 * std::numbers::pi * x); });
}

inline mfghc::SolverConfig config_with_n(std::size_t n)
{
    mfghc::SolverConfig cfg;
    cfg.n = n;
    return cfg;
}

inline mfghc::HamiltonianParams params_r(double r, double nu = 1.0, double h0 = 1.0)
{
    return {nu, mfghc::LagrangianExponent{r}, mfghc::HamiltonianCoefficient{h0}};
}

/// Positive phi with random smooth-ish shape, normalized so that int phi^r = 1.
inline mfghc::GridFunction random_phi(const mfghc::Grid& grid, double r, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> amp(-0.4, 0.4), phase(0.0, 2.0 * std::numbers::pi);
    const double a1 = amp(rng), a2 = amp(rng), p1 = phase(rng), p2 = phase(rng);
    const double L = grid.domain().right() - grid.domain().left();
    auto phi = mfghc::GridFunction::sample(grid, [&](double x) {
        const double t = (x - grid.domain().left()) / L;
        return 1.0 + a1 * std::cos(std::numbers::pi * t + p1) + a2 * std::sin(3.0 * std::numbers::pi * t + p2);
    });
    double mass = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) mass += grid.node_weight(i) * std::pow(phi[i], r);
    for (auto& v : phi.mutable_values()) v *= std::pow(mass, -1.0 / r);
    return phi;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("mfghc-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing_support
