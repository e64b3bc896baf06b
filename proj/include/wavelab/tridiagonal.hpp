#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "wavelab/error.hpp"

namespace wavelab {

/// Tridiagonal matrix stored by diagonals. lower[0] and upper[n-1] are unused.
struct Tridiagonal {
    std::vector<double> lower;
    std::vector<double> diag;
    std::vector<double> upper;

    Tridiagonal() = default;
    explicit Tridiagonal(std::size_t n) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}

    std::size_t size() const noexcept { return diag.size(); }

    std::vector<double> apply(std::span<const double> x) const {
        const std::size_t n = size();
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = diag[i] * x[i];
            if (i > 0) acc += lower[i] * x[i - 1];
            if (i + 1 < n) acc += upper[i] * x[i + 1];
            y[i] = acc;
        }
        return y;
    }
};

/// Thomas algorithm without pivoting. Stable for the diagonally dominant and
/// positive definite systems assembled in this library; a zero pivot raises
/// LinearSolveFailure.
inline std::vector<double> solve_tridiagonal(const Tridiagonal& m, std::span<const double> rhs) {
    const std::size_t n = m.size();
    if (n == 0) return {};
    std::vector<double> cp(n), dp(n), x(n);
    double pivot = m.diag[0];
    if (pivot == 0.0 || !std::isfinite(pivot)) fail(ErrorKind::LinearSolveFailure, "zero pivot at row 0");
    cp[0] = m.upper[0] / pivot;
    dp[0] = rhs[0] / pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = m.diag[i] - m.lower[i] * cp[i - 1];
        if (pivot == 0.0 || !std::isfinite(pivot))
            fail(ErrorKind::LinearSolveFailure, "zero pivot at row " + std::to_string(i));
        cp[i] = (i + 1 < n) ? m.upper[i] / pivot : 0.0;
        dp[i] = (rhs[i] - m.lower[i] * dp[i - 1]) / pivot;
    }
    x[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = dp[i] - cp[i] * x[i + 1];
    return x;
}

/// Number of eigenvalues below `shift` of the symmetric tridiagonal matrix
/// (diag, off), off[i] coupling rows i and i+1. Sturm sequence via the LDL^T pivots.
inline std::size_t sturm_count(std::span<const double> diag, std::span<const double> off, double shift) {
    std::size_t count = 0;
    double q = diag[0] - shift;
    if (q < 0.0) ++count;
    for (std::size_t i = 1; i < diag.size(); ++i) {
        if (q == 0.0) q = 1e-300;
        q = diag[i] - shift - off[i - 1] * off[i - 1] / q;
        if (q < 0.0) ++count;
    }
    return count;
}

}  // namespace wavelab
