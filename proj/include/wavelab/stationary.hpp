#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wavelab/discretization.hpp"
#include "wavelab/energy.hpp"
#include "wavelab/error.hpp"
#include "wavelab/grid.hpp"
#include "wavelab/reaction.hpp"
#include "wavelab/tridiagonal.hpp"

namespace wavelab {

/// Roots of lambda^2 + lambda c = delta.
struct DecayRates {
    double lambda_plus = 0.0;
    double lambda_minus = 0.0;
};

inline DecayRates decay_rates(double c, double delta) {
    const double root = std::sqrt(c * c + 4.0 * delta);
    // 2 delta / (c + root) avoids cancellation in (-c + root) / 2
    return {2.0 * delta / (c + root), -0.5 * (c + root)};
}

/// Exponential rates of the grid solutions of the exterior equation (A u)_i = delta u_i:
/// u_i = e^{lambda z_i} with cosh((lambda + c/2) h) = cosh(ch/2) + delta h^2 / 2.
/// They tend to decay_rates(c, delta) as h -> 0.
inline DecayRates discrete_decay_rates(double c, double delta, double h) {
    const double kappa = std::acosh(std::cosh(0.5 * c * h) + 0.5 * delta * h * h) / h;
    return {kappa - 0.5 * c, -kappa - 0.5 * c};
}

struct NewtonOptions {
    double tol = 1e-10;  ///< max-norm of the discrete residual
    int max_iterations = 50;
    int max_halvings = 40;
};

struct NewtonResult {
    Field profile;
    double residual = 0.0;
    int iterations = 0;
    std::vector<double> residual_history;  ///< max-norm residual before each step and at the end
};

inline double max_residual(const MovingFrameOperator& op, const Field& u) { return op.residual(u).sup_norm(); }

/// Damped Newton for A u + f(z,u) = 0 with Dirichlet-zero ends.
inline NewtonResult newton_solve(const Field& u_init, double c, const ReactionField& rf, const NewtonOptions& opts = {}) {
    if (!u_init.finite()) fail(ErrorKind::Config, "newton_solve: initial field is not finite");
    const MovingFrameOperator op(u_init.grid, c, rf);
    Field u = u_init;
    u[0] = 0.0;
    u[u.size() - 1] = 0.0;

    NewtonResult out;
    Field r = op.residual(u);
    double norm = r.sup_norm();
    out.residual_history.push_back(norm);
    int it = 0;
    for (; it < opts.max_iterations && norm > opts.tol; ++it) {
        std::vector<double> rhs(r.values);
        for (double& x : rhs) x = -x;
        const auto step = solve_tridiagonal(op.jacobian(u), rhs);
        double alpha = 1.0;
        bool accepted = false;
        Field trial(u.grid);
        for (int k = 0; k <= opts.max_halvings; ++k, alpha *= 0.5) {
            for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] + alpha * step[i];
            const Field r_trial = op.residual(trial);
            const double n_trial = r_trial.sup_norm();
            if (std::isfinite(n_trial) && n_trial < (1.0 - 1e-4 * alpha) * norm) {
                u = trial;
                r = r_trial;
                norm = n_trial;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // a full step that cannot reduce the residual any further sits at roundoff level
            if (norm <= 100.0 * opts.tol) break;
            fail(ErrorKind::NewtonDiverged, "newton_solve: step halving exhausted at c = " + std::to_string(c) +
                                                ", residual " + std::to_string(norm));
        }
        out.residual_history.push_back(norm);
    }
    if (norm > opts.tol)
        fail(ErrorKind::NewtonDiverged,
             "newton_solve: no convergence at c = " + std::to_string(c) + ", residual " + std::to_string(norm));
    if (u.min() < -1e-8)
        fail(ErrorKind::NegativeSolution, "newton_solve: profile dips to " + std::to_string(u.min()) +
                                              " at c = " + std::to_string(c));
    out.profile = std::move(u);
    out.residual = norm;
    out.iterations = it;
    return out;
}

/// Exterior decay check: u(z) <= u(z_L) e^{lambda_+ (z - z_L)} (1 + eps) left of the patch
/// and u(z) <= u(z_R) e^{lambda_- (z - z_R)} (1 + eps) right of it.
struct DecayReport {
    bool left_ok = true;
    bool right_ok = true;
    double worst_margin = 0.0;  ///< max of u / bound - 1 over checked nodes (<= eps when passing)
    double worst_z = 0.0;       ///< location of the worst margin
    DecayRates rates;
    bool ok() const noexcept { return left_ok && right_ok; }
};

/// The bounds use the grid's own exterior rates (discrete_decay_rates); a discrete solution
/// obeys those exactly, whereas the continuum rates are off by O(h^2) and a long tail can
/// overshoot them by more than the slack.
inline DecayReport verify_decay(const Field& u, double c, const ReactionField& rf, double eps = 1e-6) {
    const Grid& g = u.grid;
    DecayReport rep;
    rep.rates = discrete_decay_rates(c, rf.delta(), g.h());
    rep.worst_margin = -1.0;
    const auto edge_index = [&](double z) {
        return static_cast<std::size_t>(std::clamp(std::round((z - g.z_min) / g.h()), 0.0, static_cast<double>(g.n - 1)));
    };
    const std::size_t iL = edge_index(rf.left());
    const std::size_t iR = edge_index(rf.right());
    auto check = [&](std::size_t i, std::size_t anchor, double rate, bool& flag) {
        const double bound = u[anchor] * std::exp(rate * (g.z(i) - g.z(anchor)));
        const double excess = u[i] - bound * (1.0 + eps);
        const double margin = bound > 0.0 ? u[i] / bound - 1.0 : (u[i] > 0.0 ? std::numeric_limits<double>::infinity() : -1.0);
        if (excess > 0.0) flag = false;
        if (margin > rep.worst_margin) {
            rep.worst_margin = margin;
            rep.worst_z = g.z(i);
        }
    };
    for (std::size_t i = 0; i < iL; ++i) check(i, iL, rep.rates.lambda_plus, rep.left_ok);
    for (std::size_t i = iR + 1; i < g.n; ++i) check(i, iR, rep.rates.lambda_minus, rep.right_ok);
    return rep;
}

struct BranchEntry {
    double c = 0.0;
    Field profile;
    double residual = 0.0;
    double energy = 0.0;
    bool decay_ok = false;
};

struct WaveBranch {
    std::vector<BranchEntry> entries;
    std::optional<double> fold_estimate;  ///< last accepted c when the step fell below the floor
    std::vector<double> jumps;            ///< c of entries far from their predecessor; logged, not resolved
};

struct ContinuationOptions {
    NewtonOptions newton;
    double min_step = 1e-4;
    double jump_tol = 0.25;  ///< relative sup-norm distance between neighbours flagged as a jump
};

/// Natural-parameter continuation in c: each solve is warm-started from the previous
/// profile; a failed, negative or trivial solve halves the step, and the branch ends at a
/// fold estimate when the step drops below min_step or at c_max.
inline WaveBranch continue_in_c(const Field& seed, double c_start, double c_step, double c_max, const ReactionField& rf,
                                const ContinuationOptions& opts = {}) {
    if (!(c_step > 0.0)) fail(ErrorKind::Config, "continue_in_c: c_step must be positive");
    if (c_max < c_start) fail(ErrorKind::Config, "continue_in_c: c_max < c_start");

    auto make_entry = [&](double c, NewtonResult&& res) {
        BranchEntry e;
        e.c = c;
        e.residual = res.residual;
        e.energy = energy(res.profile, c, rf).value;
        e.decay_ok = verify_decay(res.profile, c, rf).ok();
        e.profile = std::move(res.profile);
        return e;
    };

    WaveBranch branch;
    NewtonResult first = newton_solve(seed, c_start, rf, opts.newton);
    if (classify(first.profile) == Classification::Trivial)
        fail(ErrorKind::NewtonDiverged, "continue_in_c: first solve at c = " + std::to_string(c_start) +
                                            " converged to the trivial state");
    branch.entries.push_back(make_entry(c_start, std::move(first)));

    double c = c_start;
    double step = c_step;
    while (c < c_max) {
        if (step < opts.min_step) {
            branch.fold_estimate = c;
            break;
        }
        const double c_next = std::min(c + step, c_max);
        std::optional<NewtonResult> res;
        try {
            res = newton_solve(branch.entries.back().profile, c_next, rf, opts.newton);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NewtonDiverged && e.kind() != ErrorKind::NegativeSolution &&
                e.kind() != ErrorKind::LinearSolveFailure)
                throw;
        }
        if (!res || classify(res->profile) == Classification::Trivial) {
            step *= 0.5;
            continue;
        }
        const Field& prev = branch.entries.back().profile;
        if ((res->profile - prev).sup_norm() > opts.jump_tol * prev.sup_norm()) branch.jumps.push_back(c_next);
        branch.entries.push_back(make_entry(c_next, std::move(*res)));
        c = c_next;
    }
    return branch;
}

inline void write_branch_csv(std::ostream& os, const WaveBranch& branch) {
    os << "c,energy,residual,sup_norm,decay_ok\n" << std::setprecision(17);
    for (const auto& e : branch.entries)
        os << e.c << ',' << e.energy << ',' << e.residual << ',' << e.profile.sup_norm() << ',' << (e.decay_ok ? 1 : 0)
           << '\n';
}

}  // namespace wavelab
