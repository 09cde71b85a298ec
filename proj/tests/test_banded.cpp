#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "mfghc/banded.hpp"

using namespace mfghc;

namespace {

BorderedBandedMatrix random_matrix(std::size_t core, std::size_t border, int kl, int ku, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    BorderedBandedMatrix a(core, border, kl, ku);
    const std::size_t n = core + border;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const bool in_core = i < core && j < core;
            const long off = static_cast<long>(j) - static_cast<long>(i);
            if (in_core && (off > ku || -off > kl)) continue;
            a.add(i, j, u(rng));
        }
        a.add(i, i, 4.0 + static_cast<double>(kl + ku + border));
    }
    return a;
}

}  // namespace

TEST(BorderedBanded, SolveMatchesMultiply)
{
    std::mt19937_64 rng(11);
    for (auto [core, border, kl, ku] : {std::tuple{40ul, 3ul, 3, 2}, {25ul, 2ul, 1, 1}, {30ul, 0ul, 1, 1},
                                        {12ul, 1ul, 0, 0}}) {
        auto a = random_matrix(core, border, kl, ku, rng);
        std::vector<double> x(core + border);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (auto& v : x) v = u(rng);
        const std::vector<double> b = a.multiply(x);
        const std::vector<double> y = a.solve(b);
        for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-12);
    }
}

TEST(BorderedBanded, RejectsEntriesOutsideBand)
{
    BorderedBandedMatrix a(10, 1, 1, 1);
    EXPECT_THROW(a.add(0, 5, 1.0), std::logic_error);
    EXPECT_THROW(a.add(11, 0, 1.0), std::out_of_range);
    EXPECT_NO_THROW(a.add(0, 10, 1.0));
}

TEST(BorderedBanded, SingularMatrixIsReported)
{
    BorderedBandedMatrix a(5, 0, 1, 1);
    for (std::size_t i = 0; i < 5; ++i) a.add(i, i, i == 2 ? 0.0 : 1.0);
    std::vector<double> b(5, 1.0);
    EXPECT_THROW(a.solve(b), SingularMatrixError);
}
