#pragma once

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfghc/errors.hpp"

namespace mfghc {

class SingularMatrixError : public Error {
public:
    using Error::Error;
};

/// Square matrix whose leading `core` x `core` block is banded (kl sub- and
/// ku super-diagonals) and whose last `border` rows and columns are dense:
///
///     [ A  B ]     A banded,  B core x border,
///     [ C  D ]     C border x core,  D border x border.
///
/// Solved by block elimination: A is LU-factored in LAPACK band storage, the
/// border is reduced to the small dense Schur complement D - C A^{-1} B.
class BorderedBandedMatrix {
public:
    BorderedBandedMatrix(std::size_t core, std::size_t border, int kl, int ku)
        : core_(core), border_(border), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1),
          band_(static_cast<std::size_t>(ldab_) * core, 0.0), right_(core * border, 0.0),
          bottom_(border * core, 0.0), corner_(border * border, 0.0)
    {
    }

    std::size_t size() const { return core_ + border_; }

    /// Accumulates v into entry (row, col).
    void add(std::size_t row, std::size_t col, double v)
    {
        if (row >= size() || col >= size()) throw std::out_of_range("BorderedBandedMatrix::add index");
        if (row < core_ && col < core_) {
            const long off = static_cast<long>(col) - static_cast<long>(row);
            if (off > ku_ || -off > kl_) throw std::logic_error("BorderedBandedMatrix::add outside band");
            band_[col * ldab_ + static_cast<std::size_t>(kl_ + ku_) + row - col] += v;
        } else if (row < core_) {
            right_[(col - core_) * core_ + row] += v;
        } else if (col < core_) {
            bottom_[(row - core_) * core_ + col] += v;
        } else {
            corner_[(row - core_) * border_ + (col - core_)] += v;
        }
    }

    double entry(std::size_t row, std::size_t col) const
    {
        if (row < core_ && col < core_) {
            const long off = static_cast<long>(col) - static_cast<long>(row);
            if (off > ku_ || -off > kl_) return 0.0;
            return band_[col * ldab_ + static_cast<std::size_t>(kl_ + ku_) + row - col];
        }
        if (row < core_) return right_[(col - core_) * core_ + row];
        if (col < core_) return bottom_[(row - core_) * core_ + col];
        return corner_[(row - core_) * border_ + (col - core_)];
    }

    /// Solves M x = rhs.  Throws SingularMatrixError when a pivot of the
    /// banded block or of the Schur complement vanishes relative to the
    /// matrix scale.
    std::vector<double> solve(std::span<const double> rhs) const
    {
        if (rhs.size() != size()) throw std::invalid_argument("BorderedBandedMatrix::solve rhs size");
        const auto n = static_cast<lapack_int>(core_);
        const auto t = static_cast<lapack_int>(border_);

        std::vector<double> lu = band_;
        std::vector<lapack_int> piv(core_);
        if (n > 0) {
            const lapack_int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n, n, kl_, ku_, lu.data(), ldab_, piv.data());
            if (info != 0) throw SingularMatrixError("banded block is singular at pivot " + std::to_string(info));
            check_pivots(lu);
        }

        // Columns 0..t-1 hold A^{-1} B, column t holds A^{-1} r1.
        std::vector<double> work(core_ * (border_ + 1));
        std::copy(right_.begin(), right_.end(), work.begin());
        std::copy(rhs.begin(), rhs.begin() + static_cast<long>(core_), work.begin() + static_cast<long>(core_ * border_));
        if (n > 0) {
            const lapack_int info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n, kl_, ku_, t + 1, lu.data(), ldab_,
                                                   piv.data(), work.data(), n);
            if (info != 0) throw SingularMatrixError("banded back-substitution failed");
        }
        const double* y = work.data() + core_ * border_;

        std::vector<double> x(size());
        if (border_ == 0) {
            std::copy(y, y + core_, x.begin());
            return x;
        }

        // Schur complement, row-major t x t.
        std::vector<double> schur = corner_;
        std::vector<double> z(border_);
        for (std::size_t i = 0; i < border_; ++i) {
            double acc = rhs[core_ + i];
            for (std::size_t k = 0; k < core_; ++k) acc -= bottom_[i * core_ + k] * y[k];
            z[i] = acc;
            for (std::size_t j = 0; j < border_; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < core_; ++k) s += bottom_[i * core_ + k] * work[j * core_ + k];
                schur[i * border_ + j] -= s;
            }
        }
        double scale = 0.0;
        for (double v : schur) scale = std::max(scale, std::abs(v));
        std::vector<lapack_int> spiv(border_);
        const lapack_int info =
            LAPACKE_dgesv(LAPACK_ROW_MAJOR, t, 1, schur.data(), t, spiv.data(), z.data(), 1);
        if (info != 0 || scale == 0.0) throw SingularMatrixError("bordered Schur complement is singular");
        for (std::size_t i = 0; i < border_; ++i)
            if (std::abs(schur[i * border_ + i]) <= 1e-14 * scale)
                throw SingularMatrixError("bordered Schur complement is numerically singular");

        for (std::size_t k = 0; k < core_; ++k) {
            double acc = y[k];
            for (std::size_t j = 0; j < border_; ++j) acc -= work[j * core_ + k] * z[j];
            x[k] = acc;
        }
        for (std::size_t i = 0; i < border_; ++i) x[core_ + i] = z[i];
        return x;
    }

    /// y = M x, for residual checks.
    std::vector<double> multiply(std::span<const double> v) const
    {
        std::vector<double> out(size(), 0.0);
        for (std::size_t i = 0; i < size(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < size(); ++j) {
                if (i < core_ && j < core_) {
                    const long off = static_cast<long>(j) - static_cast<long>(i);
                    if (off > ku_ || -off > kl_) continue;
                }
                s += entry(i, j) * v[j];
            }
            out[i] = s;
        }
        return out;
    }

private:
    void check_pivots(const std::vector<double>& lu) const
    {
        double big = 0.0;
        for (std::size_t j = 0; j < core_; ++j)
            for (int r = 0; r < ldab_; ++r) big = std::max(big, std::abs(band_[j * ldab_ + r]));
        for (std::size_t j = 0; j < core_; ++j) {
            const double d = lu[j * ldab_ + static_cast<std::size_t>(kl_ + ku_)];
            if (!(std::abs(d) > 1e-14 * big))
                throw SingularMatrixError("banded block is numerically singular at column " + std::to_string(j));
        }
    }

    std::size_t core_;
    std::size_t border_;
    int kl_;
    int ku_;
    int ldab_;
    std::vector<double> band_;    // LAPACK band storage, column-major, ldab rows
    std::vector<double> right_;   // column-major core x border
    std::vector<double> bottom_;  // row-major border x core
    std::vector<double> corner_;  // row-major border x border
};

}  // namespace mfghc
