#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <semaphore>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "wavelab/energy.hpp"
#include "wavelab/error.hpp"
#include "wavelab/evolution.hpp"
#include "wavelab/grid.hpp"
#include "wavelab/reaction.hpp"
#include "wavelab/spectral.hpp"
#include "wavelab/stationary.hpp"

namespace wavelab {

/// Parameters shared by every lab command. Lengths are in space units, the patch is
/// centered at z = 0 and the domain is [-L/2, L/2].
struct ExperimentConfig {
    std::string profile = "kpp";
    double delta = 1.0;
    double L = 300.0;
    double l = 30.0;
    double h = 0.1;
    double T = 150.0;
    double dt = 0.1;
    Scheme scheme = Scheme::BackwardEulerIMEX;
    int sample_every = 10;
    bool clamp_negative = true;

    std::vector<double> c_list;          ///< speeds; filled from c_range when given
    double c = 0.0;                      ///< single speed (simulate, minimize, wave start)
    double c_step = 0.05;                ///< continuation step
    double c_max = 3.0;                  ///< continuation end
    std::vector<double> amplitudes{1.0};  ///< Gaussian amplitudes
    std::optional<double> width;         ///< Gaussian width, defaults to l
    std::vector<double> deltas;          ///< delta values for shapes / thresholds
    double bisect_tol = 0.02;
    int max_extensions = 8;
    VerdictThresholds thresholds;
    double minimize_tol = 1e-8;
    double newton_tol = 1e-10;
    bool write_profiles = false;
    unsigned threads = 0;  ///< 0: hardware concurrency
    std::string out_dir = "out";

    double gaussian_width() const { return width.value_or(l); }

    SchemeConfig scheme_config() const {
        SchemeConfig s;
        s.dt = dt;
        s.T = T;
        s.scheme = scheme;
        s.sample_every = sample_every;
        s.clamp_negative = clamp_negative;
        return s;
    }

    ReactionField reaction(double d) const { return ReactionField::centered(ReactionProfile::parse(profile), l, d); }
    ReactionField reaction() const { return reaction(delta); }
    Grid grid(const ReactionField& rf) const { return Grid::aligned(L, h, rf); }

    void validate() const {
        for (auto [name, value] : {std::pair{"delta", delta}, {"L", L}, {"l", l}, {"h", h}, {"T", T}, {"dt", dt},
                                   {"c_step", c_step}, {"bisect_tol", bisect_tol}})
            if (!(value > 0.0)) fail(ErrorKind::Config, std::string(name) + " must be positive");
        if (!(l < L)) fail(ErrorKind::Config, "patch width l must be smaller than L");
        if (dt > T) fail(ErrorKind::Config, "dt must not exceed T");
        if (sample_every < 1) fail(ErrorKind::Config, "sample_every must be at least 1");
        if (c < 0.0) fail(ErrorKind::Config, "c must be nonnegative");
        for (double x : c_list)
            if (!(x >= 0.0)) fail(ErrorKind::Config, "c_list entries must be nonnegative");
        for (double d : deltas)
            if (!(d > 0.0)) fail(ErrorKind::Config, "deltas must be positive");
        if (width && !(*width > 0.0)) fail(ErrorKind::Config, "width must be positive");
        if (max_extensions < 0) fail(ErrorKind::Config, "max_extensions must be nonnegative");
        (void)ReactionProfile::parse(profile);
    }
};

namespace detail {

inline std::string trim_copy(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_number(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        fail(ErrorKind::Config, "key '" + key + "': not a number: '" + text + "'");
    }
    if (trim_copy(text.substr(used)).size() != 0 || !std::isfinite(value))
        fail(ErrorKind::Config, "key '" + key + "': not a number: '" + text + "'");
    return value;
}

inline int parse_int(const std::string& key, const std::string& text) {
    const double v = parse_number(key, text);
    if (v != std::floor(v) || std::abs(v) > 1e9) fail(ErrorKind::Config, "key '" + key + "': expected an integer");
    return static_cast<int>(v);
}

inline bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    fail(ErrorKind::Config, "key '" + key + "': expected true or false");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim_copy(item);
        if (item.empty()) fail(ErrorKind::Config, "key '" + key + "': empty list entry");
        out.push_back(parse_number(key, item));
    }
    if (out.empty()) fail(ErrorKind::Config, "key '" + key + "': empty list");
    return out;
}

/// "start:stop:step", inclusive of stop up to rounding.
inline std::vector<double> parse_range(const std::string& key, const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(parse_number(key, trim_copy(item)));
    if (parts.size() != 3) fail(ErrorKind::Config, "key '" + key + "': expected start:stop:step");
    const double start = parts[0], stop = parts[1], step = parts[2];
    if (!(step > 0.0) || stop < start) fail(ErrorKind::Config, "key '" + key + "': invalid range");
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    std::vector<double> out;
    // 12 significant digits drop the accumulated k * step roundoff, so 0:1:0.2 gives 0.6, not 0.6000000000000001
    char buf[32];
    for (long k = 0; k <= count; ++k) {
        std::snprintf(buf, sizeof buf, "%.12g", start + static_cast<double>(k) * step);
        out.push_back(std::strtod(buf, nullptr));
    }
    return out;
}

}  // namespace detail

/// Reads "key = value" lines; '#' starts a comment. Unknown keys and malformed values are
/// configuration errors.
inline ExperimentConfig parse_config(std::istream& is) {
    ExperimentConfig cfg;
    std::map<std::string, std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim_copy(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(ErrorKind::Config, "line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim_copy(line.substr(0, eq));
        const std::string value = detail::trim_copy(line.substr(eq + 1));
        if (key.empty() || value.empty())
            fail(ErrorKind::Config, "line " + std::to_string(lineno) + ": empty key or value");
        if (seen.count(key)) fail(ErrorKind::Config, "line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        seen[key] = value;

        using namespace detail;
        if (key == "profile") cfg.profile = value;
        else if (key == "delta") cfg.delta = parse_number(key, value);
        else if (key == "L") cfg.L = parse_number(key, value);
        else if (key == "l") cfg.l = parse_number(key, value);
        else if (key == "h") cfg.h = parse_number(key, value);
        else if (key == "T") cfg.T = parse_number(key, value);
        else if (key == "dt") cfg.dt = parse_number(key, value);
        else if (key == "scheme") {
            if (value == "be" || value == "be-imex") cfg.scheme = Scheme::BackwardEulerIMEX;
            else if (value == "cn" || value == "cn-imex") cfg.scheme = Scheme::CrankNicolsonIMEX;
            else fail(ErrorKind::Config, "scheme must be be or cn");
        }
        else if (key == "sample_every") cfg.sample_every = parse_int(key, value);
        else if (key == "clamp_negative") cfg.clamp_negative = parse_bool(key, value);
        else if (key == "c") cfg.c = parse_number(key, value);
        else if (key == "c_list") cfg.c_list = parse_list(key, value);
        else if (key == "c_range") cfg.c_list = parse_range(key, value);
        else if (key == "c_step") cfg.c_step = parse_number(key, value);
        else if (key == "c_max") cfg.c_max = parse_number(key, value);
        else if (key == "amplitude" || key == "amplitudes") cfg.amplitudes = parse_list(key, value);
        else if (key == "width") cfg.width = parse_number(key, value);
        else if (key == "deltas") cfg.deltas = parse_list(key, value);
        else if (key == "bisect_tol") cfg.bisect_tol = parse_number(key, value);
        else if (key == "max_extensions") cfg.max_extensions = parse_int(key, value);
        else if (key == "extinct_sup") cfg.thresholds.extinct_sup = parse_number(key, value);
        else if (key == "persist_sup") cfg.thresholds.persist_sup = parse_number(key, value);
        else if (key == "energy_tol") cfg.thresholds.energy_tol = parse_number(key, value);
        else if (key == "sup_decay_tol") cfg.thresholds.sup_decay_tol = parse_number(key, value);
        else if (key == "drift_tol") cfg.thresholds.drift_tol = parse_number(key, value);
        else if (key == "trend_window") cfg.thresholds.window = parse_number(key, value);
        else if (key == "minimize_tol") cfg.minimize_tol = parse_number(key, value);
        else if (key == "newton_tol") cfg.newton_tol = parse_number(key, value);
        else if (key == "write_profiles") cfg.write_profiles = parse_bool(key, value);
        else if (key == "threads") cfg.threads = static_cast<unsigned>(std::max(0, parse_int(key, value)));
        else if (key == "out") cfg.out_dir = value;
        else fail(ErrorKind::Config, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (seen.count("c_list") && seen.count("c_range")) fail(ErrorKind::Config, "give c_list or c_range, not both");
    cfg.validate();
    return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorKind::Config, "cannot open config file " + path);
    return parse_config(is);
}

/// FNV-1a 64 of the raw config text, as 16 hex digits.
inline std::string config_hash(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

/// Shortest text that reads back to the same double.
inline std::string format_number(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline std::string short_number(double x) {
    std::ostringstream os;
    os << std::setprecision(6) << x;
    return os.str();
}

inline std::string threshold_comment(const VerdictThresholds& th) {
    std::ostringstream os;
    os << "# verdict: Extinct if sup(T) < " << th.extinct_sup << " and P non-increasing over the last "
       << th.window * 100 << "% of samples; Persist if sup(T) > " << th.persist_sup << " and |E(T) - E("
       << 1.0 - th.window << "T)| < " << th.energy_tol << " * max(1, |E(T)|) and d/dt log sup > -" << th.sup_decay_tol
       << " over that window; both also need travelled and extrapolated remaining distance <= " << th.drift_tol
       << " in L2_c; otherwise Undecided\n";
    return os.str();
}

// ---------------------------------------------------------------- sweep

struct SweepRow {
    double c = 0.0;
    Verdict verdict = Verdict::Undecided;   ///< at T
    Verdict resolved = Verdict::Undecided;  ///< after extensions
    int extensions = 0;
    bool extrapolated = false;
    double P_final = 0.0;
    double E_final = 0.0;
    double sup_final = 0.0;
    double runtime = 0.0;  ///< seconds
    bool bisection = false;
    std::string error;
};

struct SweepResult {
    std::vector<SweepRow> rows;  ///< sorted by c
    std::optional<double> critical_speed;
    std::optional<std::pair<double, double>> bracket;  ///< last Persist, first Extinct
    bool monotone = true;                              ///< at-T verdicts monotone with at most one Undecided band
};

inline SweepRow sweep_point(const ExperimentConfig& cfg, const ReactionField& rf, const Grid& g, double c) {
    SweepRow row;
    row.c = c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const auto scheme = cfg.scheme_config();
        const Field u0 = gaussian_ic(g, cfg.amplitudes.front(), rf.center(), cfg.gaussian_width());
        const EvolveResult run = evolve(u0, c, rf, scheme, {});
        const ResolvedVerdict rv = resolve_verdict(run, c, rf, scheme, cfg.thresholds, cfg.max_extensions);
        row.verdict = rv.at_T;
        row.resolved = rv.kind;
        row.extensions = rv.extensions;
        row.extrapolated = rv.extrapolated;
        const auto& last = run.diagnostics.samples.back();
        row.P_final = last.P;
        row.E_final = last.E;
        row.sup_final = last.sup_norm;
    } catch (const Error& e) {
        row.error = e.what();
    }
    row.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

inline unsigned worker_count(const ExperimentConfig& cfg) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    return cfg.threads == 0 ? hw : cfg.threads;
}

/// Runs f(item) for every item on a bounded pool; results keep the input order.
template <class T, class Fn>
auto parallel_map(const std::vector<T>& items, unsigned workers, Fn fn) {
    using R = decltype(fn(items.front()));
    std::vector<R> out(items.size());
    std::counting_semaphore<> slots(static_cast<std::ptrdiff_t>(std::max(1u, workers)));
    std::vector<std::future<void>> jobs;
    jobs.reserve(items.size());
    for (std::size_t k = 0; k < items.size(); ++k) {
        slots.acquire();
        jobs.push_back(std::async(std::launch::async, [&, k] {
            out[k] = fn(items[k]);
            slots.release();
        }));
    }
    for (auto& j : jobs) j.get();
    return out;
}

/// Evolves the Gaussian datum for every speed in c_list, then bisects between the last
/// Persist and the first Extinct speed down to bisect_tol. Undecided runs are extended
/// (resolve_verdict) before they enter the bisection.
inline SweepResult run_sweep(const ExperimentConfig& cfg) {
    if (cfg.c_list.empty()) fail(ErrorKind::Config, "sweep needs a nonempty c_list");
    const ReactionField rf = cfg.reaction();
    const Grid g = cfg.grid(rf);
    std::vector<double> speeds = cfg.c_list;
    std::sort(speeds.begin(), speeds.end());
    speeds.erase(std::unique(speeds.begin(), speeds.end()), speeds.end());

    SweepResult res;
    res.rows = parallel_map(speeds, worker_count(cfg), [&](double c) { return sweep_point(cfg, rf, g, c); });

    auto rank = [](Verdict v) { return v == Verdict::Persist ? 0 : (v == Verdict::Undecided ? 1 : 2); };
    for (std::size_t k = 1; k < res.rows.size(); ++k)
        if (res.rows[k].error.empty() && res.rows[k - 1].error.empty() &&
            rank(res.rows[k].verdict) < rank(res.rows[k - 1].verdict))
            res.monotone = false;

    std::optional<double> lo, hi;
    for (const auto& r : res.rows)
        if (r.error.empty() && r.resolved == Verdict::Persist) lo = r.c;
    for (const auto& r : res.rows)
        if (r.error.empty() && r.resolved == Verdict::Extinct && (!lo || r.c > *lo)) {
            hi = r.c;
            break;
        }
    if (lo && hi) {
        double a = *lo, b = *hi;
        while (b - a > cfg.bisect_tol) {
            const double mid = 0.5 * (a + b);
            SweepRow row = sweep_point(cfg, rf, g, mid);
            row.bisection = true;
            const bool persists = row.error.empty() && row.resolved == Verdict::Persist;
            const bool extinct = row.error.empty() && row.resolved == Verdict::Extinct;
            res.rows.push_back(row);
            if (persists)
                a = mid;
            else if (extinct)
                b = mid;
            else
                break;
        }
        res.bracket = std::pair{a, b};
        res.critical_speed = 0.5 * (a + b);
    }
    std::stable_sort(res.rows.begin(), res.rows.end(), [](const SweepRow& x, const SweepRow& y) { return x.c < y.c; });
    return res;
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& res, const VerdictThresholds& th) {
    os << threshold_comment(th);
    os << "# undecided runs are extended in segments of T; resolved is the verdict after extension\n";
    if (res.critical_speed)
        os << "# critical speed " << format_number(*res.critical_speed) << " bracket [" << format_number(res.bracket->first)
           << ", " << format_number(res.bracket->second) << "]\n";
    else
        os << "# critical speed not bracketed\n";
    os << "c,verdict,resolved,extensions,extrapolated,bisection,P_final,E_final,sup_final,error\n";
    os << std::setprecision(17);
    for (const auto& r : res.rows)
        os << r.c << ',' << to_string(r.verdict) << ',' << to_string(r.resolved) << ',' << r.extensions << ','
           << (r.extrapolated ? 1 : 0) << ',' << (r.bisection ? 1 : 0) << ',' << r.P_final << ',' << r.E_final << ','
           << r.sup_final << ',' << '"' << r.error << '"' << '\n';
}

// ---------------------------------------------------------------- shapes

struct ShapeRow {
    double delta = 0.0;
    double c = 0.0;
    Verdict verdict = Verdict::Undecided;
    double total_mass = 0.0;
    double back_tail_mass = 0.0;    ///< integral of u over z < left patch edge
    double outside_fraction = 0.0;  ///< mass outside the patch over total mass
    double max_slope = 0.0;         ///< max |u_z|
    double sup_norm = 0.0;
    Field profile;
};

struct ShapeStudy {
    std::vector<ShapeRow> rows;
};

inline ShapeRow shape_descriptors(const Field& u, const ReactionField& rf) {
    ShapeRow row;
    const Grid& g = u.grid;
    for (std::size_t i = 0; i < g.n; ++i) {
        const double w = g.weight(i) * u[i];
        row.total_mass += w;
        if (g.z(i) < rf.left()) row.back_tail_mass += w;
    }
    double outside = 0.0;
    for (std::size_t i = 0; i < g.n; ++i)
        if (!rf.in_patch(g.z(i))) outside += g.weight(i) * u[i];
    row.outside_fraction = row.total_mass > 0.0 ? outside / row.total_mass : 0.0;
    row.max_slope = diff_central(u).sup_norm();
    row.sup_norm = u.sup_norm();
    return row;
}

/// Final profiles of the Gaussian datum for every (delta, c) pair.
inline ShapeStudy run_shape_study(const ExperimentConfig& cfg) {
    const std::vector<double> deltas = cfg.deltas.empty() ? std::vector<double>{0.001, 1.0, 10.0} : cfg.deltas;
    const std::vector<double> speeds = cfg.c_list.empty() ? std::vector<double>{0.0, 0.4, 0.8} : cfg.c_list;
    std::vector<std::pair<double, double>> jobs;
    for (double d : deltas)
        for (double c : speeds) jobs.emplace_back(d, c);
    ShapeStudy study;
    study.rows = parallel_map(jobs, worker_count(cfg), [&](const std::pair<double, double>& job) {
        const ReactionField rf = cfg.reaction(job.first);
        const Grid g = cfg.grid(rf);
        const auto run = evolve(gaussian_ic(g, cfg.amplitudes.front(), rf.center(), cfg.gaussian_width()), job.second, rf,
                                cfg.scheme_config(), {});
        ShapeRow row = shape_descriptors(run.final_field, rf);
        row.delta = job.first;
        row.c = job.second;
        row.verdict = classify_longtime(run.diagnostics, cfg.thresholds).kind;
        row.profile = run.final_field;
        return row;
    });
    return study;
}

inline void write_shapes_csv(std::ostream& os, const ShapeStudy& s, const VerdictThresholds& th) {
    os << threshold_comment(th);
    os << "delta,c,verdict,total_mass,back_tail_mass,outside_fraction,max_slope,sup_norm\n" << std::setprecision(17);
    for (const auto& r : s.rows)
        os << r.delta << ',' << r.c << ',' << to_string(r.verdict) << ',' << r.total_mass << ',' << r.back_tail_mass << ','
           << r.outside_fraction << ',' << r.max_slope << ',' << r.sup_norm << '\n';
}

// ---------------------------------------------------------------- multistability

struct BasinRun {
    double amplitude = 0.0;
    Verdict verdict = Verdict::Undecided;
    double sup_norm = 0.0;
    double energy = 0.0;
    Field profile;
};

struct BistabilityCase {
    double c = 0.0;
    std::vector<BasinRun> runs;  ///< amplitudes 1.0, 1.5 and the tiny datum, in that order
    std::vector<std::string> violations;
};

struct BistabilityReport {
    std::vector<BistabilityCase> cases;
    bool ok() const {
        return std::all_of(cases.begin(), cases.end(), [](const BistabilityCase& k) { return k.violations.empty(); });
    }
};

inline constexpr double kTinyAmplitude = 1e-3;

/// Two Gaussian data (amplitudes 1.0 and 1.5) and a tiny one, evolved at each speed in c_list
/// (default 0). Checks that both large data persist, that their limits differ by more than
/// 0.2 in sup-norm, that E(limit 1.5) < E(limit 1.0) < 0, and that the tiny datum dies out.
/// Violations are collected per speed; run_bistability_demo_or_throw turns them into DemoFailed.
inline BistabilityReport run_bistability_demo(const ExperimentConfig& cfg) {
    const std::vector<double> speeds = cfg.c_list.empty() ? std::vector<double>{0.0} : cfg.c_list;
    const ReactionField rf = cfg.reaction();
    const Grid g = cfg.grid(rf);
    std::vector<std::pair<double, double>> jobs;
    for (double c : speeds)
        for (double a : {1.0, 1.5, kTinyAmplitude}) jobs.emplace_back(c, a);
    const auto runs = parallel_map(jobs, worker_count(cfg), [&](const std::pair<double, double>& job) {
        const auto run = evolve(gaussian_ic(g, job.second, rf.center(), cfg.gaussian_width()), job.first, rf,
                                cfg.scheme_config(), {});
        BasinRun b;
        b.amplitude = job.second;
        b.verdict = classify_longtime(run.diagnostics, cfg.thresholds).kind;
        b.sup_norm = run.final_field.sup_norm();
        b.energy = run.diagnostics.samples.back().E;
        b.profile = run.final_field;
        return b;
    });
    BistabilityReport rep;
    for (std::size_t k = 0; k < speeds.size(); ++k) {
        BistabilityCase bc;
        bc.c = speeds[k];
        bc.runs.assign(runs.begin() + 3 * k, runs.begin() + 3 * k + 3);
        const auto& one = bc.runs[0];
        const auto& big = bc.runs[1];
        const auto& tiny = bc.runs[2];
        const std::string at = " at c = " + short_number(bc.c);
        if (one.verdict != Verdict::Persist) bc.violations.push_back("amplitude 1.0 does not persist" + at);
        if (big.verdict != Verdict::Persist) bc.violations.push_back("amplitude 1.5 does not persist" + at);
        if (!(std::abs(big.sup_norm - one.sup_norm) > 0.2))
            bc.violations.push_back("limits differ by only " + short_number(std::abs(big.sup_norm - one.sup_norm)) +
                                    " in sup-norm" + at);
        if (!(one.energy < 0.0)) bc.violations.push_back("E(limit 1.0) = " + format_number(one.energy) + " is not negative" + at);
        if (!(big.energy < one.energy))
            bc.violations.push_back("E(limit 1.5) = " + format_number(big.energy) + " is not below E(limit 1.0) = " +
                                    format_number(one.energy) + at);
        if (tiny.verdict != Verdict::Extinct) bc.violations.push_back("tiny datum does not go extinct" + at);
        rep.cases.push_back(std::move(bc));
    }
    return rep;
}

inline void write_bistability_csv(std::ostream& os, const BistabilityReport& rep, const VerdictThresholds& th) {
    os << threshold_comment(th);
    os << "c,amplitude,verdict,sup_norm,energy\n" << std::setprecision(17);
    for (const auto& k : rep.cases)
        for (const auto& r : k.runs)
            os << k.c << ',' << r.amplitude << ',' << to_string(r.verdict) << ',' << r.sup_norm << ',' << r.energy << '\n';
}

// ---------------------------------------------------------------- thresholds

struct ThresholdRow {
    double delta = 0.0;
    std::optional<double> energy_lower;  ///< sign change of the minimized energy
    std::optional<double> fold;          ///< largest c reached by continuation
    std::optional<double> dynamic;       ///< sweep critical speed
    double upper = 0.0;                  ///< KPP majorant bound
    bool ordering_ok = true;             ///< energy_lower <= upper + slack
};

struct ThresholdReport {
    std::vector<ThresholdRow> rows;
    double slack = 0.05;
    bool ok() const {
        return std::all_of(rows.begin(), rows.end(), [](const ThresholdRow& r) { return r.ordering_ok; });
    }
};

struct ThresholdOptions {
    bool dynamic = true;        ///< run the evolution sweep (the expensive part)
    double energy_tol = 0.005;  ///< bracket width for the energy bisection
    double slack = 0.05;
};

/// Energy threshold, fold and KPP bound for one reaction field.
/// The fold is the largest speed reached by continuation seeded from the minimiser at c = 0
/// and from the minimiser at the top of the energy bracket; minimisers from different
/// seeds can sit on different branches, and the largest c reached is reported.
inline ThresholdRow static_thresholds(const ExperimentConfig& cfg, const ReactionField& rf, const ThresholdOptions& opt) {
    const Grid g = cfg.grid(rf);
    ThresholdRow row;
    row.delta = rf.delta();
    row.upper = c_upper_kpp(rf, g);
    MinimizeOptions mo;
    mo.tol = cfg.minimize_tol;
    mo.require_convergence = false;
    if (!minimized_energy_sign(g, rf, 0.0, mo).negative) return row;

    const auto bracket = min_energy_sign_bracket(g, rf, 0.0, row.upper + 0.1, opt.energy_tol, mo);
    row.energy_lower = 0.5 * (bracket.first + bracket.second);

    ContinuationOptions co;
    co.newton.tol = cfg.newton_tol;
    const double c_end = row.upper + 0.2;
    double reached = 0.0;
    for (double c_seed : {0.0, bracket.first}) {
        const auto seed = minimize(plateau_seed(g, rf, rf.upper_cap()), c_seed, rf, mo);
        if (seed.classification != Classification::Wave) continue;
        try {
            const auto branch = continue_in_c(seed.minimizer, c_seed, cfg.c_step, c_end, rf, co);
            reached = std::max(reached, branch.fold_estimate.value_or(branch.entries.back().c));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NewtonDiverged && e.kind() != ErrorKind::NegativeSolution) throw;
        }
    }
    if (reached > 0.0) row.fold = reached;
    row.ordering_ok = *row.energy_lower <= row.upper + opt.slack;
    return row;
}

/// The four speed thresholds for each delta in cfg.deltas (default 0.1, 1, 10).
inline ThresholdReport run_threshold_comparison(const ExperimentConfig& cfg, const ThresholdOptions& opt = {}) {
    const std::vector<double> deltas = cfg.deltas.empty() ? std::vector<double>{0.1, 1.0, 10.0} : cfg.deltas;
    ThresholdReport rep;
    rep.slack = opt.slack;
    for (double d : deltas) {
        const ReactionField rf = cfg.reaction(d);
        ThresholdRow row = static_thresholds(cfg, rf, opt);
        if (opt.dynamic && row.upper > 0.0) {
            ExperimentConfig sweep_cfg = cfg;
            sweep_cfg.delta = d;
            sweep_cfg.c_list.clear();
            const double top = row.upper + 0.4;
            for (int k = 0; k <= 8; ++k) sweep_cfg.c_list.push_back(top * k / 8.0);
            const auto sweep = run_sweep(sweep_cfg);
            row.dynamic = sweep.critical_speed;
        }
        rep.rows.push_back(row);
    }
    return rep;
}

inline void write_thresholds_csv(std::ostream& os, const ThresholdReport& rep) {
    auto opt = [](const std::optional<double>& x) { return x ? format_number(*x) : std::string(); };
    auto gap = [](const std::optional<double>& a, const std::optional<double>& b) {
        return a && b ? format_number(*b - *a) : std::string();
    };
    os << "# energy_lower <= upper + " << rep.slack << " is asserted; the other gaps are reported only\n";
    os << "delta,energy_lower,fold,dynamic,upper,fold_minus_energy,dynamic_minus_energy,upper_minus_energy,ordering_ok\n";
    for (const auto& r : rep.rows)
        os << format_number(r.delta) << ',' << opt(r.energy_lower) << ',' << opt(r.fold) << ',' << opt(r.dynamic) << ','
           << format_number(r.upper) << ',' << gap(r.energy_lower, r.fold) << ',' << gap(r.energy_lower, r.dynamic) << ','
           << gap(r.energy_lower, std::optional<double>(r.upper)) << ',' << (r.ordering_ok ? 1 : 0) << '\n';
}

// ---------------------------------------------------------------- outputs

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) fail(ErrorKind::Config, "cannot write " + path.string());
    return os;
}

struct Manifest {
    std::string command;
    std::string config_hash;
    Grid grid;
    Scheme scheme = Scheme::BackwardEulerIMEX;
    double dt = 0.0;
    double wall_seconds = 0.0;
    std::vector<std::pair<std::string, std::string>> extra;
};

inline void write_manifest(const std::filesystem::path& path, const Manifest& m) {
    auto os = open_output(path);
    os << "command = " << m.command << '\n';
    os << "config_hash = " << m.config_hash << '\n';
    os << "grid = [" << format_number(m.grid.z_min) << ", " << format_number(m.grid.z_max) << "], n = " << m.grid.n
       << ", h = " << format_number(m.grid.h()) << '\n';
    os << "scheme = " << to_string(m.scheme) << ", dt = " << format_number(m.dt) << '\n';
    os << "wall_time_s = " << short_number(m.wall_seconds) << '\n';
    for (const auto& [k, v] : m.extra) os << k << " = " << v << '\n';
}

}  // namespace wavelab
