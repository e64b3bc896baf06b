#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wavelab/discretization.hpp"
#include "wavelab/error.hpp"
#include "wavelab/grid.hpp"
#include "wavelab/reaction.hpp"
#include "wavelab/tridiagonal.hpp"

namespace wavelab {

/// Principal Dirichlet eigenpair of -d^2/dz^2 + V on the grid interior.
struct EigenResult {
    double lambda0 = 0.0;
    Field eigenfunction;  ///< positive inside, max-normalized, zero at the ends
    double residual = 0.0;  ///< max |H phi - lambda0 phi|
};

/// Smallest eigenvalue of the symmetric tridiagonal H = tridiag(-1, 2, -1)/h^2 + diag(V),
/// by Sturm-sequence bisection, then the eigenvector by shifted inverse iteration.
/// `potential` holds V at every node; the end values are ignored.
inline EigenResult ground_state_of_potential(const Grid& g, std::span<const double> potential) {
    const std::size_t m = g.n - 2;
    const double h2 = g.h() * g.h();
    std::vector<double> diag(m), off(m > 0 ? m - 1 : 0, -1.0 / h2);
    for (std::size_t k = 0; k < m; ++k) diag[k] = 2.0 / h2 + potential[k + 1];

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t k = 0; k < m; ++k) {
        const double radius = (k > 0 ? 1.0 / h2 : 0.0) + (k + 1 < m ? 1.0 / h2 : 0.0);
        lo = std::min(lo, diag[k] - radius);
        hi = std::max(hi, diag[k] + radius);
    }
    // invariant: no eigenvalue below lo, at least one below hi
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (sturm_count(diag, off, mid) >= 1)
            hi = mid;
        else
            lo = mid;
        if (hi - lo <= 1e-13 * std::max(1.0, std::abs(lo))) break;
    }
    const double lambda = 0.5 * (lo + hi);

    // H - sigma I is positive definite for sigma below the spectrum
    const double sigma = lo - 1e-9 * std::max(1.0, std::abs(lo));
    Tridiagonal shifted(m);
    for (std::size_t k = 0; k < m; ++k) {
        shifted.diag[k] = diag[k] - sigma;
        if (k > 0) shifted.lower[k] = off[k - 1];
        if (k + 1 < m) shifted.upper[k] = off[k];
    }
    std::vector<double> x(m, 1.0);
    double previous = 0.0;
    bool settled = false;
    for (int it = 0; it < 50; ++it) {
        x = solve_tridiagonal(shifted, x);
        const double peak = *std::max_element(x.begin(), x.end());
        if (!(peak > 0.0) || !std::isfinite(peak))
            fail(ErrorKind::IterationFailure, "inverse iteration lost positivity at shift " + std::to_string(sigma));
        for (double& xi : x) xi /= peak;
        if (it > 0 && std::abs(peak - previous) <= 1e-14 * peak) {
            settled = true;
            break;
        }
        previous = peak;
    }
    if (!settled) fail(ErrorKind::IterationFailure, "inverse iteration stagnated at shift " + std::to_string(sigma));

    EigenResult out;
    out.lambda0 = lambda;
    out.eigenfunction = Field(g);
    for (std::size_t k = 0; k < m; ++k) out.eigenfunction[k + 1] = x[k];
    double res = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        double hx = diag[k] * x[k];
        if (k > 0) hx += off[k - 1] * x[k - 1];
        if (k + 1 < m) hx += off[k] * x[k + 1];
        res = std::max(res, std::abs(hx - lambda * x[k]));
    }
    out.residual = res;
    return out;
}

/// Potential -f_s(z,0) of the linearization at zero, as discretized on g.
inline std::vector<double> linearized_potential(const Grid& g, const ReactionField& rf) {
    const MovingFrameOperator op(g, 0.0, rf);
    std::vector<double> V(g.n);
    for (std::size_t i = 0; i < g.n; ++i) V[i] = -op.linear_rate(i);
    return V;
}

/// lambda_0: principal eigenvalue of -d^2/dz^2 - f_s(z,0) (the c = 0 linearization).
inline EigenResult ground_state(const ReactionField& rf, const Grid& g) {
    const auto V = linearized_potential(g, rf);
    return ground_state_of_potential(g, V);
}

/// Discrete Rayleigh quotient (sum phi'^2 + V phi^2) / sum phi^2 over the grid interior.
inline double rayleigh_quotient(const Field& phi, std::span<const double> potential) {
    const double h = phi.grid.h();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + 1 < phi.size(); ++i) {
        const double d = (phi[i + 1] - phi[i]) / h;
        num += h * d * d;
    }
    for (std::size_t i = 1; i + 1 < phi.size(); ++i) {
        num += h * potential[i] * phi[i] * phi[i];
        den += h * phi[i] * phi[i];
    }
    return num / den;
}

/// lambda_c = lambda_0 + c^2/4.
constexpr double lambda_c(double lambda0, double c) { return lambda0 + 0.25 * c * c; }

/// Speed shift of the discrete operator: (2 cosh(ch/2) - 2)/h^2, the grid analogue of c^2/4.
inline double discrete_speed_shift(double c, double h) { return (2.0 * std::cosh(0.5 * c * h) - 2.0) / (h * h); }

/// 2 sqrt(-lambda_0) when lambda_0 < 0; none when zero is linearly stable at every speed.
inline std::optional<double> c_lin(double lambda0) {
    if (lambda0 < 0.0) return 2.0 * std::sqrt(-lambda0);
    return std::nullopt;
}

/// Ground state of -phi'' + V phi with V = -a on a well of width l and +delta outside, on the
/// whole line: the even matching condition sqrt(a+lambda) tan(sqrt(a+lambda) l/2) = sqrt(delta-lambda)
/// solved by bisection in k = sqrt(a+lambda).
inline double square_well_oracle(double a, double delta, double l) {
    if (!(a > 0.0) || !(delta > 0.0)) fail(ErrorKind::Config, "square well needs a > 0 and delta > 0");
    if (!(l > 0.0)) fail(ErrorKind::NoBoundState, "well of zero width");
    const double depth = a + delta;
    auto mismatch = [&](double k) { return k * std::tan(0.5 * k * l) - std::sqrt(std::max(depth - k * k, 0.0)); };
    double lo = 0.0;
    double hi = std::min(std::numbers::pi / l, std::sqrt(depth));
    if (std::numbers::pi / l <= std::sqrt(depth)) hi = std::nextafter(hi, 0.0);
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (mismatch(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    const double k = 0.5 * (lo + hi);
    const double lambda = k * k - a;
    if (!(delta - lambda > 1e-14 * std::max(1.0, delta)))
        fail(ErrorKind::NoBoundState, "binding energy below resolution");
    return lambda;
}

/// Upper threshold from the KPP majorant g(z,u) = (sup_{s>=u} f(z,s)/s) u: the speed
/// 2 sqrt(-lambda_0^g) of the linearization of g at zero, or 0 when lambda_0^g >= 0.
inline double c_upper_kpp(const ReactionField& rf, const Grid& g) {
    const PatchFunction slope = rf.kpp_majorant_slope();
    const auto omega = patch_fractions(g, rf);
    std::vector<double> V(g.n);
    for (std::size_t i = 0; i < g.n; ++i) V[i] = -(omega[i] * slope.inside + (1.0 - omega[i]) * slope.outside);
    const auto res = ground_state_of_potential(g, V);
    return res.lambda0 < 0.0 ? 2.0 * std::sqrt(-res.lambda0) : 0.0;
}

}  // namespace wavelab
