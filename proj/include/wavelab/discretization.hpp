#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "wavelab/grid.hpp"
#include "wavelab/reaction.hpp"
#include "wavelab/tridiagonal.hpp"

namespace wavelab {

/// Fraction of the cell around each node that lies in the patch: 1 inside, 1/2 on an
/// edge node, 0 outside. Edge nodes mix f_0 and -delta u with equal weight, which keeps
/// the discontinuity in z second-order accurate.
inline std::vector<double> patch_fractions(const Grid& g, const ReactionField& rf) {
    std::vector<double> omega(g.n, 0.0);
    const double tol = 1e-9 * g.h();
    if (rf.width() <= tol) return omega;
    for (std::size_t i = 0; i < g.n; ++i) {
        const double z = g.z(i);
        if (std::abs(z - rf.left()) <= tol || std::abs(z - rf.right()) <= tol)
            omega[i] = 0.5;
        else if (rf.in_patch(z))
            omega[i] = 1.0;
    }
    return omega;
}

/// Finite-difference form of u -> u_zz + c u_z + f(z,u) with Dirichlet-zero ends.
///
/// The transport part is the flux form e^{-cz} (e^{cz} u_z)_z with the weight taken at
/// cell midpoints:
///   (A u)_i = [e^{ch/2} (u_{i+1} - u_i) - e^{-ch/2} (u_i - u_{i-1})] / h^2.
/// It is second-order consistent with u_zz + c u_z, it is the exact L^2_c gradient of the
/// discrete kinetic energy, and in v = e^{cz/2} u it becomes the symmetric stencil
/// (v_{i+1} - 2 cosh(ch/2) v_i + v_{i-1}) / h^2.
class MovingFrameOperator {
public:
    MovingFrameOperator(const Grid& grid, double c, const ReactionField& rf)
        : grid_(grid), c_(c), rf_(rf), omega_(patch_fractions(grid, rf)) {
        check_weight_range(grid, c);
        const double h = grid.h();
        up_ = std::exp(0.5 * c * h) / (h * h);
        down_ = std::exp(-0.5 * c * h) / (h * h);
    }

    const Grid& grid() const noexcept { return grid_; }
    double c() const noexcept { return c_; }
    const ReactionField& reaction() const noexcept { return rf_; }
    const std::vector<double>& fractions() const noexcept { return omega_; }
    double up() const noexcept { return up_; }
    double down() const noexcept { return down_; }
    /// 2 cosh(ch/2) / h^2, the diagonal of the symmetric v-stencil.
    double symmetric_diag() const noexcept { return up_ + down_; }

    double f(std::size_t i, double u) const noexcept {
        const double w = omega_[i];
        const double outside = -rf_.delta() * u;
        return w == 0.0 ? outside : w * rf_.patch_f(u) + (1.0 - w) * outside;
    }

    double F(std::size_t i, double u) const noexcept {
        const double w = omega_[i];
        const double outside = -0.5 * rf_.delta() * u * u;
        return w == 0.0 ? outside : w * rf_.patch_F(u) + (1.0 - w) * outside;
    }

    double df(std::size_t i, double u) const noexcept {
        const double w = omega_[i];
        return w == 0.0 ? -rf_.delta() : w * rf_.patch_df(u) - (1.0 - w) * rf_.delta();
    }

    /// f_s(z_i, 0) as used by the discrete problem.
    double linear_rate(std::size_t i) const noexcept { return df(i, 0.0); }

    /// (A u)_i at interior nodes, 0 at the two ends.
    Field transport(const Field& u) const {
        Field out(grid_);
        for (std::size_t i = 1; i + 1 < grid_.n; ++i)
            out[i] = up_ * (u[i + 1] - u[i]) - down_ * (u[i] - u[i - 1]);
        return out;
    }

    /// A u + f(z,u) at interior nodes, 0 at the ends.
    Field residual(const Field& u) const {
        Field out = transport(u);
        for (std::size_t i = 1; i + 1 < grid_.n; ++i) out[i] += f(i, u[i]);
        return out;
    }

    /// Matrix of alpha*I + beta*A over all n nodes; boundary rows are identity.
    Tridiagonal shifted_transport(double alpha, double beta) const {
        Tridiagonal m(grid_.n);
        m.diag.front() = 1.0;
        m.diag.back() = 1.0;
        for (std::size_t i = 1; i + 1 < grid_.n; ++i) {
            m.lower[i] = beta * down_;
            m.diag[i] = alpha - beta * (up_ + down_);
            m.upper[i] = beta * up_;
        }
        return m;
    }

    /// Jacobian of the residual, A + diag(f_u(z,u)), with identity boundary rows.
    Tridiagonal jacobian(const Field& u) const {
        Tridiagonal m = shifted_transport(0.0, 1.0);
        for (std::size_t i = 1; i + 1 < grid_.n; ++i) m.diag[i] += df(i, u[i]);
        return m;
    }

private:
    Grid grid_;
    double c_;
    ReactionField rf_;
    std::vector<double> omega_;
    double up_ = 0.0;
    double down_ = 0.0;
};

}  // namespace wavelab
