#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include "wavelab/discretization.hpp"
#include "wavelab/error.hpp"
#include "wavelab/grid.hpp"
#include "wavelab/reaction.hpp"
#include "wavelab/tridiagonal.hpp"

namespace wavelab {

/// Discrete E_c[u] = kinetic + potential.
struct EnergyReport {
    double value = 0.0;
    double kinetic = 0.0;    ///< (1/2) int e^{cz} u_z^2
    double potential = 0.0;  ///< -int e^{cz} F(z,u)
    double gradient_l2c_norm = 0.0;
};

namespace detail {

/// Energy and scaled gradient r = e^{cz/2} (-(A u + f)) written in v = e^{cz/2} u.
/// All weights enter through bounded factors; e^{cz} itself only appears on patch nodes.
struct VEnergy {
    const MovingFrameOperator& op;
    std::vector<double> ez_half;  ///< e^{c z_i / 2}
    std::vector<double> upper;    ///< M e^{c z_i / 2}
    double em = 1.0;              ///< e^{-ch/4}
    double ep = 1.0;              ///< e^{ch/4}

    explicit VEnergy(const MovingFrameOperator& o) : op(o) {
        const Grid& g = op.grid();
        const double c = op.c();
        ez_half.resize(g.n);
        upper.resize(g.n);
        for (std::size_t i = 0; i < g.n; ++i) {
            ez_half[i] = std::exp(0.5 * c * g.z(i));
            upper[i] = op.reaction().upper_cap() * ez_half[i];
        }
        em = std::exp(-0.25 * c * g.h());
        ep = std::exp(0.25 * c * g.h());
    }

    double kinetic(const std::vector<double>& v) const {
        const double h = op.grid().h();
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < v.size(); ++i) {
            const double d = em * v[i + 1] - ep * v[i];
            acc += d * d;
        }
        return 0.5 * acc / h;
    }

    /// tau_i * (-(e^{cz} F(z_i, u_i))) summed.
    double potential(const std::vector<double>& v) const {
        const Grid& g = op.grid();
        const auto& omega = op.fractions();
        const double delta = op.reaction().delta();
        double acc = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double w = omega[i];
            double node = (1.0 - w) * 0.5 * delta * v[i] * v[i];
            if (w != 0.0) {
                const double u = v[i] / ez_half[i];
                node -= w * ez_half[i] * ez_half[i] * op.reaction().patch_F(u);
            }
            acc += g.weight(i) * node;
        }
        return acc;
    }

    /// E(v + s) - E(v) accumulated from the step s itself, so that nearby iterates are
    /// compared without cancelling two large totals.
    double difference(const std::vector<double>& v, const std::vector<double>& s) const {
        const Grid& g = op.grid();
        const auto& omega = op.fractions();
        const double delta = op.reaction().delta();
        const double h = g.h();
        const Polynomial& F0 = op.reaction().profile().F0();
        double kin = 0.0;
        for (std::size_t i = 0; i + 1 < v.size(); ++i) {
            const double dv = em * v[i + 1] - ep * v[i];
            const double ds = em * s[i + 1] - ep * s[i];
            kin += ds * (2.0 * dv + ds);
        }
        double pot = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double w = omega[i];
            double node = (1.0 - w) * 0.5 * delta * s[i] * (2.0 * v[i] + s[i]);
            if (w != 0.0) {
                const double ua = v[i] / ez_half[i];
                const double du = s[i] / ez_half[i];
                const double jump = (ua >= 0.0 && ua + du >= 0.0)
                                        ? F0.increment(ua, du)
                                        : F0.difference(std::max(ua, 0.0), std::max(ua + du, 0.0));
                node -= w * ez_half[i] * ez_half[i] * jump;
            }
            pot += g.weight(i) * node;
        }
        return 0.5 * kin / h + pot;
    }

    /// r_i = (T v)_i - e^{cz_i/2} f_i at interior nodes (0 at the ends), where
    /// T = tridiag(-1, 2cosh(ch/2), -1)/h^2. The Euclidean gradient of E in v is h r.
    std::vector<double> scaled_gradient(const std::vector<double>& v) const {
        const std::size_t n = v.size();
        const auto& omega = op.fractions();
        const double delta = op.reaction().delta();
        const double h2 = op.grid().h() * op.grid().h();
        const double diag = op.symmetric_diag();
        std::vector<double> r(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            double value = diag * v[i] - (v[i - 1] + v[i + 1]) / h2;
            const double w = omega[i];
            value += (1.0 - w) * delta * v[i];
            if (w != 0.0) value -= w * ez_half[i] * op.reaction().patch_f(v[i] / ez_half[i]);
            r[i] = value;
        }
        return r;
    }

    double norm(const std::vector<double>& r) const {
        const Grid& g = op.grid();
        double acc = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) acc += g.weight(i) * r[i] * r[i];
        return std::sqrt(acc);
    }

    std::vector<double> to_v(const Field& u) const {
        std::vector<double> v(u.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = ez_half[i] * u[i];
        return v;
    }

    Field to_u(const std::vector<double>& v) const {
        Field u(op.grid());
        for (std::size_t i = 0; i < v.size(); ++i) u[i] = v[i] / ez_half[i];
        return u;
    }

    EnergyReport report(const std::vector<double>& v) const {
        EnergyReport e;
        e.kinetic = kinetic(v);
        e.potential = potential(v);
        e.value = e.kinetic + e.potential;
        e.gradient_l2c_norm = norm(scaled_gradient(v));
        return e;
    }
};

}  // namespace detail

/// Discrete weighted energy of u in the moving frame with speed c.
inline EnergyReport energy(const Field& u, double c, const ReactionField& rf) {
    const MovingFrameOperator op(u.grid, c, rf);
    const detail::VEnergy ve(op);
    return ve.report(ve.to_v(u));
}

/// L^2_c gradient of the discrete energy: -(A u + f(z,u)) at interior nodes, 0 at the ends.
/// Its weighted inner product with any w (zero at the ends) is exactly dE(w) for the discrete energy.
inline Field energy_gradient(const Field& u, double c, const ReactionField& rf) {
    const MovingFrameOperator op(u.grid, c, rf);
    Field g = op.residual(u);
    for (double& x : g.values) x = -x;
    return g;
}

/// min(max(u, 0), M) nodewise.
inline Field truncate(const Field& u, double cap) {
    if (!(cap > 0.0)) fail(ErrorKind::Config, "truncation cap must be positive");
    Field out(u.grid);
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = std::clamp(u[i], 0.0, cap);
    return out;
}

enum class Classification { Trivial, Wave };

constexpr const char* to_string(Classification c) { return c == Classification::Wave ? "Wave" : "Trivial"; }

/// Sup-norm threshold separating waves from numerically trivial states.
inline constexpr double kWaveThreshold = 1e-6;

inline Classification classify(const Field& u) {
    return u.sup_norm() > kWaveThreshold ? Classification::Wave : Classification::Trivial;
}

struct MinimizeOptions {
    double tol = 1e-8;            ///< on the projected L^2_c gradient norm
    int max_iterations = 20000;
    double armijo = 1e-4;
    int max_backtracks = 60;
    bool require_convergence = true;  ///< throw NotConverged when the cap is hit
    bool record_history = false;
};

struct MinimizeResult {
    Field minimizer;
    EnergyReport energy;
    int iterations = 0;
    bool converged = false;
    Classification classification = Classification::Trivial;
    double projected_gradient_norm = 0.0;
    std::vector<double> energy_history;  ///< accepted iterates, when requested
};

/// Raised when minimize hits its iteration cap; carries the best iterate.
class MinimizeNotConverged : public Error {
public:
    explicit MinimizeNotConverged(MinimizeResult best)
        : Error(ErrorKind::NotConverged, "iteration cap reached in minimize"), best_(std::move(best)) {}
    const MinimizeResult& best() const noexcept { return best_; }

private:
    MinimizeResult best_;
};

/// Projected gradient descent for E_c over the box 0 <= u <= M.
///
/// Iterates in v = e^{cz/2} u, where the kinetic term is the symmetric form h v^T T v / 2.
/// Directions are gradients preconditioned by T + delta I (a Sobolev metric, one
/// tridiagonal solve per iteration); the step length is Barzilai-Borwein in that metric,
/// halved until the Armijo condition holds, and the projection is the truncation
/// u -> min(max(u,0),M). Accepted iterates never increase the energy.
inline MinimizeResult minimize(const Field& u0, double c, const ReactionField& rf, const MinimizeOptions& opts = {}) {
    const MovingFrameOperator op(u0.grid, c, rf);
    const detail::VEnergy ve(op);
    const Grid& g = u0.grid;
    const std::size_t n = g.n;
    const double h = g.h();

    auto project = [&](std::vector<double>& v) {
        v.front() = 0.0;
        v.back() = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) v[i] = std::clamp(v[i], 0.0, ve.upper[i]);
    };
    // Weighted and unweighted L^2 norms of the projected gradient. The weighted one is
    // reported; both must reach tol, since upstream residue is invisible in L^2_c but shows
    // up in the sup-norm used for classification.
    auto projected_norms = [&](const std::vector<double>& v, const std::vector<double>& r) {
        double acc = 0.0, acc_u = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const bool at_lower = v[i] <= 0.0 && r[i] > 0.0;
            const bool at_upper = v[i] >= ve.upper[i] && r[i] < 0.0;
            if (at_lower || at_upper) continue;
            const double ru = r[i] / ve.ez_half[i];
            acc += h * r[i] * r[i];
            acc_u += h * ru * ru;
        }
        return std::pair{std::sqrt(acc), std::sqrt(acc_u)};
    };

    const double h2 = h * h;
    const double q_diag = op.symmetric_diag() + rf.delta();
    // Q = T + delta I with Dirichlet rows; used for the BB step length
    auto q_norm_sq = [&](const std::vector<double>& s) {
        double acc = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            double qs = q_diag * s[i];
            if (i > 1) qs -= s[i - 1] / h2;
            if (i + 2 < n) qs -= s[i + 1] / h2;
            acc += s[i] * qs;
        }
        return acc;
    };
    Tridiagonal precond(n);
    precond.diag.front() = 1.0;
    precond.diag.back() = 1.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        precond.lower[i] = (i > 1) ? -1.0 / h2 : 0.0;
        precond.upper[i] = (i + 2 < n) ? -1.0 / h2 : 0.0;
        precond.diag[i] = q_diag;
    }

    std::vector<double> v = ve.to_v(u0);
    for (double x : v)
        if (!std::isfinite(x)) fail(ErrorKind::Overflow, "initial field is not finite in weighted form");
    project(v);
    double e = ve.kinetic(v) + ve.potential(v);
    std::vector<double> r = ve.scaled_gradient(v);

    MinimizeResult result;
    if (opts.record_history) result.energy_history.push_back(e);
    double alpha = 1.0;
    int it = 0;
    auto [pg, pg_u] = projected_norms(v, r);
    for (; it < opts.max_iterations && std::max(pg, pg_u) > opts.tol; ++it) {
        std::vector<double> d = solve_tridiagonal(precond, r);
        d.front() = 0.0;
        d.back() = 0.0;

        std::vector<double> trial(n), step(n);
        double e_trial = 0.0;
        bool accepted = false;
        for (int bt = 0; bt < opts.max_backtracks; ++bt) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = v[i] - alpha * d[i];
            project(trial);
            double slope = 0.0;
            for (std::size_t i = 1; i + 1 < n; ++i) slope += h * r[i] * (trial[i] - v[i]);
            for (std::size_t i = 0; i < n; ++i) step[i] = trial[i] - v[i];
            const double de = ve.difference(v, step);
            if (de <= opts.armijo * slope) {
                e_trial = e + de;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;

        std::vector<double> r_trial = ve.scaled_gradient(trial);
        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = trial[i] - v[i];
            y[i] = r_trial[i] - r[i];
        }
        double sy = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) sy += s[i] * y[i];
        const double sqs = q_norm_sq(s);
        alpha = (sy > 0.0 && sqs > 0.0) ? std::clamp(sqs / sy, 1e-8, 1e8) : std::min(2.0 * alpha, 1e8);

        v = std::move(trial);
        r = std::move(r_trial);
        e = e_trial;
        if (opts.record_history) result.energy_history.push_back(ve.kinetic(v) + ve.potential(v));
        std::tie(pg, pg_u) = projected_norms(v, r);
        if (sqs == 0.0) {
            ++it;
            break;
        }
    }

    result.minimizer = ve.to_u(v);
    result.energy = ve.report(v);
    result.iterations = it;
    result.projected_gradient_norm = pg;
    result.converged = std::max(pg, pg_u) <= opts.tol;
    result.classification = classify(result.minimizer);
    if (!result.converged && opts.require_convergence) throw MinimizeNotConverged(std::move(result));
    return result;
}

/// Plateau of `height` on the patch with linear ramps of unit width outside it.
inline Field plateau_seed(const Grid& g, const ReactionField& rf, double height, double ramp = 1.0) {
    return Field::from_function(g, [&](double z) {
        if (z >= rf.left() && z <= rf.right()) return height;
        const double dist = z < rf.left() ? rf.left() - z : z - rf.right();
        return dist < ramp ? height * (1.0 - dist / ramp) : 0.0;
    });
}

/// Minimizes from the standard plateau seed (height M) and reports whether a wave with
/// negative energy was found.
struct EnergySign {
    double c = 0.0;
    double energy = 0.0;
    bool negative = false;
    bool converged = false;
};

inline EnergySign minimized_energy_sign(const Grid& g, const ReactionField& rf, double c,
                                        MinimizeOptions opts = {}) {
    opts.require_convergence = false;
    const auto res = minimize(plateau_seed(g, rf, rf.upper_cap()), c, rf, opts);
    return {c, res.energy.value,
            res.classification == Classification::Wave && res.energy.value < 0.0, res.converged};
}

/// Bisection on the sign of the minimized energy. Returns the final bracket: negative
/// energy at .first, none at .second.
inline std::pair<double, double> min_energy_sign_bracket(const Grid& g, const ReactionField& rf, double c_lo,
                                                         double c_hi, double tol, const MinimizeOptions& opts = {}) {
    if (c_lo > c_hi) fail(ErrorKind::BracketInvalid, "c_lo > c_hi");
    const bool neg_lo = minimized_energy_sign(g, rf, c_lo, opts).negative;
    if (c_lo == c_hi) {
        if (!neg_lo) return {c_lo, c_lo};
        fail(ErrorKind::BracketInvalid, "degenerate bracket with negative minimized energy");
    }
    if (!neg_lo) fail(ErrorKind::BracketInvalid, "minimized energy is not negative at c_lo");
    if (minimized_energy_sign(g, rf, c_hi, opts).negative)
        fail(ErrorKind::BracketInvalid, "minimized energy is negative at c_hi");
    while (c_hi - c_lo > tol) {
        const double mid = 0.5 * (c_lo + c_hi);
        if (minimized_energy_sign(g, rf, mid, opts).negative)
            c_lo = mid;
        else
            c_hi = mid;
    }
    return {c_lo, c_hi};
}

/// Midpoint of min_energy_sign_bracket: the estimate of the speed above which no
/// negative-energy minimiser exists. A degenerate bracket c_lo == c_hi returns c_lo when the
/// minimized energy there is not negative.
inline double min_energy_sign_bisect(const Grid& g, const ReactionField& rf, double c_lo, double c_hi, double tol,
                                     const MinimizeOptions& opts = {}) {
    const auto [lo, hi] = min_energy_sign_bracket(g, rf, c_lo, c_hi, tol, opts);
    return 0.5 * (lo + hi);
}

}  // namespace wavelab
