#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
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
#include "wavelab/spectral.hpp"
#include "wavelab/tridiagonal.hpp"

namespace wavelab {

enum class Scheme { BackwardEulerIMEX, CrankNicolsonIMEX };

constexpr const char* to_string(Scheme s) { return s == Scheme::BackwardEulerIMEX ? "be-imex" : "cn-imex"; }

struct SchemeConfig {
    double dt = 0.1;
    double T = 150.0;
    Scheme scheme = Scheme::BackwardEulerIMEX;
    int sample_every = 10;  ///< steps between diagnostic samples
    bool clamp_negative = true;

    void validate() const {
        if (!(dt > 0.0) || !(T > 0.0)) fail(ErrorKind::Config, "dt and T must be positive");
        if (dt > T) fail(ErrorKind::Config, "dt must not exceed T");
        if (sample_every < 1) fail(ErrorKind::Config, "sample_every must be at least 1");
    }
    long steps() const { return std::max(1L, std::lround(T / dt)); }
};

struct DiagnosticSample {
    double t = 0.0;
    double P = 0.0;            ///< integral of u
    double E = 0.0;            ///< discrete E_c[u]
    double dissipation = 0.0;  ///< ||u_t||^2 in L^2_c, averaged over the steps since the previous sample
    double sup_norm = 0.0;
};

struct TrajectoryDiagnostics {
    std::vector<DiagnosticSample> samples;
    long clamped = 0;  ///< negative values reset to 0 over the run
};

/// u_i = amplitude * exp(-((z_i - center)/width)^2), optionally zeroed outside `support`.
inline Field gaussian_ic(const Grid& g, double amplitude, double center, double width,
                         std::optional<std::pair<double, double>> support = std::nullopt) {
    if (!(width > 0.0)) fail(ErrorKind::Config, "gaussian width must be positive");
    Field u = Field::from_function(g, [&](double z) {
        if (support && (z < support->first || z > support->second)) return 0.0;
        const double s = (z - center) / width;
        return amplitude * std::exp(-s * s);
    });
    u[0] = 0.0;
    u[g.n - 1] = 0.0;
    return u;
}

/// Time stepper for u_t = A u + f(z,u) with the linear part implicit and the reaction explicit.
///
/// Backward Euler IMEX: (I - dt A) u' = u + dt f(u). With dt delta <= 1 the right-hand side
/// stays nonnegative and (I - dt A) is an M-matrix, so nonnegative data stay nonnegative.
/// Crank-Nicolson IMEX: trapezoidal linear part with a Heun predictor for the reaction,
///   (I - dt/2 A) u* = (I + dt/2 A) u + dt f(u)
///   (I - dt/2 A) u' = (I + dt/2 A) u + dt/2 (f(u) + f(u*)),
/// second order in dt.
class ImexStepper {
public:
    ImexStepper(const Grid& g, double c, const ReactionField& rf, const SchemeConfig& cfg)
        : op_(g, c, rf), cfg_(cfg) {
        cfg_.validate();
        const double theta = cfg.scheme == Scheme::BackwardEulerIMEX ? 1.0 : 0.5;
        lhs_ = op_.shifted_transport(1.0, -theta * cfg.dt);
    }

    const MovingFrameOperator& op() const noexcept { return op_; }
    const SchemeConfig& config() const noexcept { return cfg_; }

    /// One step; returns the number of clamped nodes.
    long step(Field& u) const {
        const std::size_t n = u.size();
        const double dt = cfg_.dt;
        std::vector<double> rhs(n, 0.0);
        if (cfg_.scheme == Scheme::BackwardEulerIMEX) {
            for (std::size_t i = 1; i + 1 < n; ++i) rhs[i] = u[i] + dt * op_.f(i, u[i]);
            u.values = solve_tridiagonal(lhs_, rhs);
        } else {
            const Field Au = op_.transport(u);
            std::vector<double> base(n, 0.0), fu(n, 0.0);
            for (std::size_t i = 1; i + 1 < n; ++i) {
                fu[i] = op_.f(i, u[i]);
                base[i] = u[i] + 0.5 * dt * Au[i];
            }
            for (std::size_t i = 1; i + 1 < n; ++i) rhs[i] = base[i] + dt * fu[i];
            const auto predicted = solve_tridiagonal(lhs_, rhs);
            for (std::size_t i = 1; i + 1 < n; ++i) rhs[i] = base[i] + 0.5 * dt * (fu[i] + op_.f(i, predicted[i]));
            u.values = solve_tridiagonal(lhs_, rhs);
        }
        long clamped = 0;
        for (double x : u.values)
            if (!std::isfinite(x)) fail(ErrorKind::Overflow, "imex_step produced a non-finite value");
        if (cfg_.clamp_negative) {
            for (double& x : u.values)
                if (x < 0.0) {
                    x = 0.0;
                    ++clamped;
                }
        }
        return clamped;
    }

private:
    MovingFrameOperator op_;
    SchemeConfig cfg_;
    Tridiagonal lhs_;
};

inline Field imex_step(const Field& u, double c, const ReactionField& rf, const SchemeConfig& cfg) {
    Field out = u;
    ImexStepper(u.grid, c, rf, cfg).step(out);
    return out;
}

struct EvolveResult {
    Field final_field;
    TrajectoryDiagnostics diagnostics;
    std::vector<Field> snapshots;  ///< at the requested fractions of T
    std::vector<double> snapshot_times;
};

using SampleObserver = std::function<void(double t, const Field& u)>;

/// Integrates to T. Snapshots are taken at the steps nearest to fraction * T.
inline EvolveResult evolve(const Field& u0, double c, const ReactionField& rf, const SchemeConfig& cfg,
                           const std::vector<double>& snapshot_fractions = {0.7, 0.8, 0.9, 1.0},
                           const SampleObserver& observer = {}) {
    const ImexStepper stepper(u0.grid, c, rf, cfg);
    const MovingFrameOperator& op = stepper.op();
    const detail::VEnergy ve(op);
    const Grid& g = u0.grid;
    const long steps = cfg.steps();
    const double dt = cfg.dt;

    auto weighted_sq = [&](const std::vector<double>& w) {
        double acc = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double x = ve.ez_half[i] * w[i];
            acc += g.weight(i) * x * x;
        }
        return acc;
    };

    std::vector<long> snap_steps;
    for (double f : snapshot_fractions) snap_steps.push_back(std::clamp(std::lround(f * steps), 0L, steps));

    EvolveResult out;
    Field u = u0;
    u[0] = 0.0;
    u[g.n - 1] = 0.0;
    if (!u.finite()) fail(ErrorKind::Config, "initial field is not finite");

    auto sample = [&](long k, double dissipation) {
        DiagnosticSample s;
        s.t = static_cast<double>(k) * dt;
        s.P = integrate(u);
        const auto v = ve.to_v(u);
        s.E = ve.kinetic(v) + ve.potential(v);
        s.dissipation = dissipation;
        s.sup_norm = u.sup_norm();
        out.diagnostics.samples.push_back(s);
        if (observer) observer(s.t, u);
    };
    auto snapshot = [&](long k) {
        for (long s : snap_steps)
            if (s == k) {
                out.snapshots.push_back(u);
                out.snapshot_times.push_back(static_cast<double>(k) * dt);
            }
    };

    // at t = 0 the dissipation is the squared norm of the right-hand side A u0 + f(u0)
    sample(0, weighted_sq(op.residual(u).values));
    snapshot(0);
    double acc = 0.0;
    int since = 0;
    std::vector<double> diff(g.n);
    for (long k = 1; k <= steps; ++k) {
        const std::vector<double> prev = u.values;
        out.diagnostics.clamped += stepper.step(u);
        for (std::size_t i = 0; i < g.n; ++i) diff[i] = (u[i] - prev[i]) / dt;
        acc += weighted_sq(diff);
        ++since;
        if (k % cfg.sample_every == 0 || k == steps) {
            sample(k, acc / since);
            acc = 0.0;
            since = 0;
        }
        snapshot(k);
    }
    out.final_field = std::move(u);
    return out;
}

inline void write_diagnostics_csv(std::ostream& os, const TrajectoryDiagnostics& d) {
    os << "t,P,E,dissipation,sup_norm\n" << std::setprecision(17);
    for (const auto& s : d.samples) os << s.t << ',' << s.P << ',' << s.E << ',' << s.dissipation << ',' << s.sup_norm << '\n';
}

enum class Verdict { Extinct, Persist, Undecided };

constexpr const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Extinct: return "Extinct";
        case Verdict::Persist: return "Persist";
        default: return "Undecided";
    }
}

/// Persist needs |E(T) - E(0.9T)| < energy_tol * max(1, |E(T)|). Moving the origin by a
/// multiplies E_c by e^{ca}, so the tolerance is taken relative once |E| exceeds 1.
/// A decaying run has |E| near 0 and passes the energy test trivially, so Persist also needs
/// the sup-norm to have stopped decaying: d/dt log sup > -sup_decay_tol over the window.
/// A shelf can still be spreading while E has flattened out, so both verdicts also need the
/// run to have settled: the distance travelled over the window, int ||u_t||_{L^2_c} dt, and
/// the distance still to go, ||u_t(T)|| / mu with mu the decay rate of ||u_t|| over the window,
/// are both at most drift_tol. A run whose ||u_t(T)|| * T is already below drift_tol counts as
/// settled whatever mu is.
struct VerdictThresholds {
    double extinct_sup = 1e-3;
    double persist_sup = 1e-2;
    double energy_tol = 1e-4;
    double sup_decay_tol = 1e-3;
    double drift_tol = 1e-4;
    double window = 0.1;  ///< trailing fraction of the run used for trends
};

struct LongtimeVerdict {
    Verdict kind = Verdict::Undecided;
    double final_P = 0.0;
    double final_sup = 0.0;
    double energy_change = 0.0;  ///< E(T) - E((1 - window) T)
    bool P_decreasing = false;   ///< P non-increasing over the trailing window
    double log_sup_slope = 0.0;  ///< d/dt log sup over the trailing window
    double drift = 0.0;          ///< trapezoid of sqrt(dissipation) over the trailing window
    double remaining = 0.0;      ///< ||u_t(T)|| / mu, infinite when ||u_t|| is not decaying
    bool settled = false;
};

inline LongtimeVerdict classify_longtime(const TrajectoryDiagnostics& d, const VerdictThresholds& th = {}) {
    LongtimeVerdict v;
    if (d.samples.empty()) return v;
    const auto& last = d.samples.back();
    v.final_P = last.P;
    v.final_sup = last.sup_norm;
    const double t_start = last.t * (1.0 - th.window);
    std::size_t first = d.samples.size() - 1;
    while (first > 0 && d.samples[first - 1].t >= t_start - 1e-9) --first;
    const auto& ref = d.samples[first];
    v.energy_change = last.E - ref.E;
    v.P_decreasing = true;
    for (std::size_t k = first + 1; k < d.samples.size(); ++k) {
        const auto& a = d.samples[k - 1];
        const auto& b = d.samples[k];
        if (b.P > a.P) v.P_decreasing = false;
        v.drift += 0.5 * (std::sqrt(std::max(a.dissipation, 0.0)) + std::sqrt(std::max(b.dissipation, 0.0))) * (b.t - a.t);
    }
    if (ref.sup_norm > 0.0 && last.sup_norm > 0.0 && last.t > ref.t)
        v.log_sup_slope = (std::log(last.sup_norm) - std::log(ref.sup_norm)) / (last.t - ref.t);

    const double speed_end = std::sqrt(std::max(last.dissipation, 0.0));
    const double speed_ref = std::sqrt(std::max(ref.dissipation, 0.0));
    if (speed_end == 0.0)
        v.remaining = 0.0;
    else if (speed_ref > speed_end && last.t > ref.t)
        v.remaining = speed_end * (last.t - ref.t) / (std::log(speed_ref) - std::log(speed_end));
    else
        v.remaining = std::numeric_limits<double>::infinity();
    v.settled = v.drift <= th.drift_tol && (v.remaining <= th.drift_tol || speed_end * last.t <= th.drift_tol);

    if (last.sup_norm < th.extinct_sup && v.P_decreasing && v.settled)
        v.kind = Verdict::Extinct;
    else if (last.sup_norm > th.persist_sup && v.log_sup_slope > -th.sup_decay_tol && v.settled &&
             std::abs(v.energy_change) < th.energy_tol * std::max(1.0, std::abs(last.E)))
        v.kind = Verdict::Persist;
    return v;
}

/// Outcome of extending an undecided run.
struct ResolvedVerdict {
    Verdict kind = Verdict::Undecided;  ///< Persist or Extinct unless every extension stayed undecided
    Verdict at_T = Verdict::Undecided;  ///< verdict at the configured horizon
    int extensions = 0;                 ///< extra runs of length T that were needed
    bool extrapolated = false;          ///< decided from the extrapolated sup-norm limit
    double horizon = 0.0;
    Field final_field;
    TrajectoryDiagnostics diagnostics;  ///< of the last segment
    std::vector<Field> snapshots;       ///< of the last segment
};

/// Continues an undecided run in segments of length T until the verdict settles, up to
/// max_extensions segments. If it never settles, the sup-norm limit is extrapolated from the
/// last three segment ends (Aitken) and compared with persist_sup.
inline ResolvedVerdict resolve_verdict(const EvolveResult& run, double c, const ReactionField& rf,
                                       const SchemeConfig& cfg, const VerdictThresholds& th = {},
                                       int max_extensions = 8) {
    ResolvedVerdict out;
    out.at_T = classify_longtime(run.diagnostics, th).kind;
    out.kind = out.at_T;
    out.horizon = cfg.T;
    out.final_field = run.final_field;
    out.diagnostics = run.diagnostics;
    out.snapshots = run.snapshots;
    std::vector<double> ends{run.diagnostics.samples.back().sup_norm};
    while (out.kind == Verdict::Undecided && out.extensions < max_extensions) {
        EvolveResult next = evolve(out.final_field, c, rf, cfg);
        ++out.extensions;
        out.horizon += cfg.T;
        out.kind = classify_longtime(next.diagnostics, th).kind;
        ends.push_back(next.diagnostics.samples.back().sup_norm);
        out.final_field = std::move(next.final_field);
        out.diagnostics = std::move(next.diagnostics);
        out.snapshots = std::move(next.snapshots);
    }
    if (out.kind == Verdict::Undecided && ends.size() >= 3) {
        const double s0 = ends[ends.size() - 3], s1 = ends[ends.size() - 2], s2 = ends.back();
        const double d1 = s1 - s0, d2 = s2 - s1;
        double limit = s2;
        if (d1 != 0.0) {
            const double r = d2 / d1;
            if (r > 0.0 && r < 1.0)
                limit = s2 + d2 * r / (1.0 - r);
            else if (d2 < 0.0)
                limit = 0.0;  // decay is not slowing down
        }
        out.kind = limit > th.persist_sup ? Verdict::Persist : Verdict::Extinct;
        out.extrapolated = true;
    }
    return out;
}

/// Compares -dE/dt between consecutive samples with the averaged dissipation.
struct DissipationReport {
    bool ok = true;
    double max_relative_error = 0.0;  ///< max |lhs - rhs| / rhs over pairs with rhs > abs_tol
    double max_abs_error = 0.0;
    std::size_t pairs = 0;
    std::size_t violations = 0;
    double first_violation_t = 0.0;
};

inline DissipationReport dissipation_check(const TrajectoryDiagnostics& d, double rel_tol = 0.05, double abs_tol = 1e-6) {
    if (d.samples.size() < 3) fail(ErrorKind::Config, "dissipation_check needs at least 3 samples");
    DissipationReport rep;
    for (std::size_t k = 1; k < d.samples.size(); ++k) {
        const auto& a = d.samples[k - 1];
        const auto& b = d.samples[k];
        const double lhs = -(b.E - a.E) / (b.t - a.t);
        const double rhs = b.dissipation;
        const double err = std::abs(lhs - rhs);
        ++rep.pairs;
        rep.max_abs_error = std::max(rep.max_abs_error, err);
        if (rhs > abs_tol) rep.max_relative_error = std::max(rep.max_relative_error, err / rhs);
        if (err > rel_tol * std::abs(rhs) + abs_tol) {
            if (rep.violations == 0) rep.first_violation_t = b.t;
            ++rep.violations;
            rep.ok = false;
        }
    }
    return rep;
}

/// Max pairwise H^1_c distance between the given snapshots.
inline double convergence_check(const std::vector<Field>& snapshots, double c) {
    double worst = 0.0;
    for (std::size_t a = 0; a < snapshots.size(); ++a)
        for (std::size_t b = a + 1; b < snapshots.size(); ++b)
            worst = std::max(worst, std::sqrt(weighted_h1_sq(snapshots[a] - snapshots[b], c)));
    return worst;
}

/// Comparison-principle witness of extinction: with psi the ground state of the symmetric
/// linearization and phi = e^{-cz/2} psi (max-normalized), w = kappa phi e^{-mu t} with
/// mu = lambda_c / 2 is a supersolution whenever kappa <= kappa_max, where kappa_max is the
/// largest s with (f_0(s) - f_0'(0) s) / s <= lambda_c / 2 on (0, s].
struct EnvelopeReport {
    double lambda_c = 0.0;
    double mu = 0.0;
    double kappa = 0.0;
    double kappa_max = 0.0;
    bool holds = true;
    double worst_ratio = 0.0;  ///< max over samples and nodes of u / (kappa phi e^{-mu t})
    LongtimeVerdict verdict;
    Field phi;
};

namespace detail {

/// Largest s* in (0, cap] such that q(s) = (f_0(s) - f_0'(0) s)/s <= bound on (0, s*].
inline double envelope_kappa_max(const ReactionProfile& p, double bound) {
    const Polynomial q = p.f0().divided_by_x() - Polynomial{p.df0()(0.0)};
    const double cap = p.upper_cap();
    const auto roots = (q - Polynomial{bound}).roots_in(0.0, cap, 20000);
    for (double r : roots)
        if (r > 0.0) return r;
    return q(0.5 * cap) <= bound ? cap : 0.0;
}

}  // namespace detail

inline EnvelopeReport linear_stability_envelope(const Field& u0, const ReactionField& rf, double c,
                                                const SchemeConfig& cfg, const VerdictThresholds& th = {}) {
    const Grid& g = u0.grid;
    const EigenResult ground = ground_state(rf, g);
    EnvelopeReport rep;
    rep.lambda_c = ground.lambda0 + discrete_speed_shift(c, g.h());
    if (!(rep.lambda_c > 0.0))
        fail(ErrorKind::PreconditionUnverifiable, "lambda_c <= 0: zero is not linearly stable at this speed");
    rep.mu = 0.5 * rep.lambda_c;
    rep.kappa_max = detail::envelope_kappa_max(rf.profile(), rep.mu);

    rep.phi = Field(g);
    check_weight_range(g, c);
    double peak = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) {
        rep.phi[i] = std::exp(-0.5 * c * g.z(i)) * ground.eigenfunction[i];
        peak = std::max(peak, rep.phi[i]);
    }
    for (double& x : rep.phi.values) x /= peak;

    double kappa = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) {
        if (u0[i] <= 0.0) continue;
        if (!(rep.phi[i] > 0.0))
            fail(ErrorKind::PreconditionUnverifiable, "u0 is positive where the eigenfunction vanishes");
        kappa = std::max(kappa, u0[i] / rep.phi[i]);
    }
    rep.kappa = kappa;
    if (!(kappa <= rep.kappa_max))
        fail(ErrorKind::PreconditionUnverifiable, "u0 is not below kappa phi for any kappa <= kappa_max (needs kappa = " +
                                                      std::to_string(kappa) + ", kappa_max = " +
                                                      std::to_string(rep.kappa_max) + ")");

    auto observer = [&](double t, const Field& u) {
        if (kappa == 0.0) {
            if (u.sup_norm() > 0.0) rep.holds = false;
            return;
        }
        const double scale = kappa * std::exp(-rep.mu * t);
        for (std::size_t i = 1; i + 1 < g.n; ++i) {
            if (u[i] <= 0.0) continue;
            const double ratio = u[i] / (scale * rep.phi[i]);
            rep.worst_ratio = std::max(rep.worst_ratio, ratio);
        }
    };
    const auto run = evolve(u0, c, rf, cfg, {}, observer);
    if (rep.worst_ratio > 1.0 + 1e-9) rep.holds = false;
    rep.verdict = classify_longtime(run.diagnostics, th);
    return rep;
}

}  // namespace wavelab
