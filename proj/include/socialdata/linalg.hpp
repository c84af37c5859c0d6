#pragma once

// Small dense symmetric algebra used by the projection engine. Sizes are a
// few hundred at most, so a plain row-major buffer is enough.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "socialdata/core_model.hpp"

namespace socialdata {

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix square(std::size_t n, double fill = 0.0) { return Matrix(n, n, fill); }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    Matrix scaled(double k) const {
        Matrix m = *this;
        for (auto& v : m.data_) v *= k;
        return m;
    }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Pivoted Cholesky factorization P Σ Pᵀ = L Lᵀ of a symmetric positive
/// semidefinite matrix. Pivots at or below `rel_tol` times the largest
/// diagonal entry end the factorization; `rank` columns of L are kept.
class PivotedCholesky {
public:
    explicit PivotedCholesky(const Matrix& a, double rel_tol = 1e-12) { factor(a, rel_tol); }

    std::size_t size() const noexcept { return n_; }
    std::size_t rank() const noexcept { return rank_; }
    const std::vector<std::size_t>& permutation() const noexcept { return perm_; }
    double max_diagonal() const noexcept { return max_diag_; }

    /// L(i, k) for permuted row i and column k < rank.
    double l(std::size_t i, std::size_t k) const { return l_[i * n_ + k]; }

    /// y = L11⁻¹ (P c)_{0..rank}; also returns the part of P c not covered by
    /// the range of Σ in `residual`.
    std::vector<double> forward(const std::vector<double>& c, double& residual) const {
        std::vector<double> y(rank_, 0.0);
        for (std::size_t i = 0; i < rank_; ++i) {
            double s = c[perm_[i]];
            for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
            y[i] = s / l(i, i);
        }
        residual = 0.0;
        for (std::size_t i = rank_; i < n_; ++i) {
            double s = c[perm_[i]];
            for (std::size_t k = 0; k < rank_; ++k) s -= l(i, k) * y[k];
            residual = std::max(residual, std::abs(s));
        }
        return y;
    }

    /// Solves L11ᵀ z = y and scatters z back to the original coordinates;
    /// coordinates beyond the rank get zero weight.
    std::vector<double> backward(const std::vector<double>& y) const {
        std::vector<double> z(rank_, 0.0);
        for (std::size_t ii = rank_; ii-- > 0;) {
            double s = y[ii];
            for (std::size_t k = ii + 1; k < rank_; ++k) s -= l(k, ii) * z[k];
            z[ii] = s / l(ii, ii);
        }
        std::vector<double> out(n_, 0.0);
        for (std::size_t i = 0; i < rank_; ++i) out[perm_[i]] = z[i];
        return out;
    }

private:
    void factor(const Matrix& a, double rel_tol) {
        n_ = a.rows();
        if (a.cols() != n_) throw ModelError("covariance matrix is not square");
        l_.assign(n_ * n_, 0.0);
        perm_.resize(n_);
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        if (n_ == 0) return;

        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < i; ++j) {
                const double d = std::abs(a(i, j) - a(j, i));
                const double scale = std::max({std::abs(a(i, j)), std::abs(a(j, i)), 1.0});
                if (d > 1e-12 * scale) throw ModelError("covariance matrix is not symmetric");
            }

        // Work on a permuted copy of the lower triangle.
        std::vector<double> w(n_ * n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) w[i * n_ + j] = a(i, j);
        auto at = [&](std::size_t i, std::size_t j) -> double& { return w[i * n_ + j]; };

        max_diag_ = 0.0;
        for (std::size_t i = 0; i < n_; ++i) max_diag_ = std::max(max_diag_, a(i, i));
        for (std::size_t i = 0; i < n_; ++i)
            if (a(i, i) < -1e-12 * std::max(max_diag_, 1.0))
                throw ModelError("covariance matrix has a negative variance");
        const double tol = rel_tol * max_diag_;

        rank_ = 0;
        for (std::size_t k = 0; k < n_; ++k) {
            std::size_t piv = k;
            for (std::size_t i = k + 1; i < n_; ++i)
                if (at(i, i) > at(piv, piv)) piv = i;
            if (at(piv, piv) <= tol) break;
            if (piv != k) {
                for (std::size_t j = 0; j < n_; ++j) std::swap(at(k, j), at(piv, j));
                for (std::size_t i = 0; i < n_; ++i) std::swap(at(i, k), at(i, piv));
                std::swap(perm_[k], perm_[piv]);
                for (std::size_t j = 0; j < k; ++j) std::swap(l_[k * n_ + j], l_[piv * n_ + j]);
            }
            const double d = std::sqrt(at(k, k));
            l_[k * n_ + k] = d;
            for (std::size_t i = k + 1; i < n_; ++i) l_[i * n_ + k] = at(i, k) / d;
            for (std::size_t i = k + 1; i < n_; ++i)
                for (std::size_t j = k + 1; j <= i; ++j) {
                    at(i, j) -= l_[i * n_ + k] * l_[j * n_ + k];
                    at(j, i) = at(i, j);
                }
            ++rank_;
        }

        // The trailing Schur complement must vanish for a PSD input.
        const double bound = 1e-8 * std::max(max_diag_, 1e-300);
        for (std::size_t i = rank_; i < n_; ++i)
            for (std::size_t j = rank_; j <= i; ++j)
                if (std::abs(at(i, j)) > bound && !(i == j && at(i, i) >= 0.0 && at(i, i) <= tol))
                    throw ModelError("covariance matrix is not positive semidefinite");
    }

    std::size_t n_ = 0;
    std::size_t rank_ = 0;
    double max_diag_ = 0.0;
    std::vector<double> l_;
    std::vector<std::size_t> perm_;
};

}  // namespace socialdata
