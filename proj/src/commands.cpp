#include "wavelab/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>

#include <json.hpp>

#include "wavelab/wavelab.hpp"

namespace wavelab {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Context {
    ExperimentConfig cfg;
    fs::path out;
    std::ostream& log;
    Manifest manifest;
};

std::string profile_file(const std::string& stem, double c) { return stem + "_c" + short_number(c) + ".csv"; }

void write_field(const fs::path& path, const Field& u) {
    auto os = open_output(path);
    write_csv(os, u);
}

void write_json(const fs::path& path, const json& j) {
    auto os = open_output(path);
    os << j.dump(2) << '\n';
}

void simulate(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const ReactionField rf = cfg.reaction();
    const Grid g = cfg.grid(rf);
    ctx.manifest.grid = g;
    const Field u0 = gaussian_ic(g, cfg.amplitudes.front(), rf.center(), cfg.gaussian_width());
    const EvolveResult run = evolve(u0, cfg.c, rf, cfg.scheme_config());
    const LongtimeVerdict v = classify_longtime(run.diagnostics, cfg.thresholds);
    {
        auto os = open_output(ctx.out / "diagnostics.csv");
        os << threshold_comment(cfg.thresholds);
        write_diagnostics_csv(os, run.diagnostics);
    }
    write_field(ctx.out / "final_profile.csv", run.final_field);
    json summary = {{"c", cfg.c},
                    {"verdict", to_string(v.kind)},
                    {"final_P", v.final_P},
                    {"final_sup", v.final_sup},
                    {"energy_change", v.energy_change},
                    {"P_decreasing", v.P_decreasing},
                    {"log_sup_slope", v.log_sup_slope},
                    {"clamped", run.diagnostics.clamped},
                    {"snapshot_cauchy_h1", convergence_check(run.snapshots, cfg.c)}};
    write_json(ctx.out / "summary.json", summary);
    ctx.log << summary.dump() << '\n';
    ctx.manifest.extra.emplace_back("verdict", to_string(v.kind));
}

void minimize_cmd(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const ReactionField rf = cfg.reaction();
    const Grid g = cfg.grid(rf);
    ctx.manifest.grid = g;
    MinimizeOptions mo;
    mo.tol = cfg.minimize_tol;
    const MinimizeResult res = minimize(plateau_seed(g, rf, rf.profile().upper_cap()), cfg.c, rf, mo);
    write_field(ctx.out / "profile.csv", res.minimizer);
    json summary = {{"c", cfg.c},
                    {"value", res.energy.value},
                    {"kinetic", res.energy.kinetic},
                    {"potential", res.energy.potential},
                    {"classification", res.classification == Classification::Wave ? "Wave" : "Trivial"},
                    {"iterations", res.iterations},
                    {"converged", res.converged},
                    {"projected_gradient_norm", res.projected_gradient_norm},
                    {"sup_norm", res.minimizer.sup_norm()}};
    write_json(ctx.out / "summary.json", summary);
    ctx.log << summary.dump() << '\n';
}

void wave(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const ReactionField rf = cfg.reaction();
    const Grid g = cfg.grid(rf);
    ctx.manifest.grid = g;
    MinimizeOptions mo;
    mo.tol = cfg.minimize_tol;
    const MinimizeResult seed = minimize(plateau_seed(g, rf, rf.profile().upper_cap()), cfg.c, rf, mo);
    if (seed.classification != Classification::Wave)
        fail(ErrorKind::NewtonDiverged, "wave: the minimiser at c = " + short_number(cfg.c) + " is trivial; no branch to follow");
    ContinuationOptions co;
    co.newton.tol = cfg.newton_tol;
    const WaveBranch branch = continue_in_c(seed.minimizer, cfg.c, cfg.c_step, std::max(cfg.c, cfg.c_max), rf, co);
    {
        auto os = open_output(ctx.out / "branch.csv");
        write_branch_csv(os, branch);
    }
    if (cfg.write_profiles)
        for (const auto& e : branch.entries) write_field(ctx.out / profile_file("wave", e.c), e.profile);
    json summary = {{"c_start", cfg.c}, {"c_last", branch.entries.back().c}, {"points", branch.entries.size()}};
    summary["fold_estimate"] = branch.fold_estimate ? json(*branch.fold_estimate) : json(nullptr);
    summary["jumps"] = branch.jumps;
    for (double cj : branch.jumps) ctx.log << "warning: branch jumps to a different solution at c = " << short_number(cj) << '\n';
    write_json(ctx.out / "summary.json", summary);
    ctx.log << summary.dump() << '\n';
}

void eigen(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const ReactionField rf = cfg.reaction();
    const Grid g = cfg.grid(rf);
    ctx.manifest.grid = g;
    const EigenResult gs = ground_state(rf, g);
    const std::vector<double> speeds = cfg.c_list.empty() ? std::vector<double>{cfg.c} : cfg.c_list;
    {
        auto os = open_output(ctx.out / "eigen.csv");
        os << "c,lambda0,lambda_c,lambda_c_discrete\n" << std::setprecision(17);
        for (double c : speeds)
            os << c << ',' << gs.lambda0 << ',' << lambda_c(gs.lambda0, c) << ','
               << gs.lambda0 + discrete_speed_shift(c, g.h()) << '\n';
    }
    write_field(ctx.out / "eigenfunction.csv", gs.eigenfunction);
    const auto lin = c_lin(gs.lambda0);
    json summary = {{"lambda0", gs.lambda0}, {"residual", gs.residual}, {"c_upper_kpp", c_upper_kpp(rf, g)}};
    summary["c_lin"] = lin ? json(*lin) : json(nullptr);
    write_json(ctx.out / "summary.json", summary);
    ctx.log << summary.dump() << '\n';
}

void sweep(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const ReactionField rf = cfg.reaction();
    ctx.manifest.grid = cfg.grid(rf);
    const SweepResult res = run_sweep(cfg);
    {
        auto os = open_output(ctx.out / "sweep.csv");
        write_sweep_csv(os, res, cfg.thresholds);
    }
    double total = 0.0;
    for (const auto& r : res.rows) {
        total += r.runtime;
        ctx.manifest.extra.emplace_back("runtime_s c=" + short_number(r.c), short_number(r.runtime));
    }
    ctx.manifest.extra.emplace_back("runtime_s total", short_number(total));
    ctx.manifest.extra.emplace_back("monotone", res.monotone ? "yes" : "no");
    if (!res.monotone) ctx.log << "warning: verdicts are not monotone in c\n";
    json summary = {{"monotone", res.monotone}, {"runs", res.rows.size()}};
    summary["critical_speed"] = res.critical_speed ? json(*res.critical_speed) : json(nullptr);
    ctx.log << summary.dump() << '\n';
}

void shapes(Context& ctx) {
    const auto& cfg = ctx.cfg;
    ctx.manifest.grid = cfg.grid(cfg.reaction());
    const ShapeStudy study = run_shape_study(cfg);
    {
        auto os = open_output(ctx.out / "shapes.csv");
        write_shapes_csv(os, study, cfg.thresholds);
    }
    for (const auto& r : study.rows)
        write_field(ctx.out / ("shape_delta" + short_number(r.delta) + "_c" + short_number(r.c) + ".csv"), r.profile);
    ctx.log << "shapes: " << study.rows.size() << " runs\n";
}

void bistability(Context& ctx) {
    const auto& cfg = ctx.cfg;
    ctx.manifest.grid = cfg.grid(cfg.reaction());
    const BistabilityReport rep = run_bistability_demo(cfg);
    {
        auto os = open_output(ctx.out / "bistability.csv");
        write_bistability_csv(os, rep, cfg.thresholds);
    }
    std::string failures;
    for (const auto& k : rep.cases) {
        for (const auto& r : k.runs)
            write_field(ctx.out / ("limit_amp" + short_number(r.amplitude) + "_c" + short_number(k.c) + ".csv"), r.profile);
        for (const auto& v : k.violations) failures += "\n  " + v;
    }
    ctx.manifest.extra.emplace_back("assertions", failures.empty() ? "passed" : "failed");
    if (!failures.empty()) fail(ErrorKind::DemoFailed, "bistability demo:" + failures);
    ctx.log << "bistability: all clauses hold\n";
}

void thresholds(Context& ctx) {
    const auto& cfg = ctx.cfg;
    ctx.manifest.grid = cfg.grid(cfg.reaction());
    const ThresholdReport rep = run_threshold_comparison(cfg);
    {
        auto os = open_output(ctx.out / "thresholds.csv");
        write_thresholds_csv(os, rep);
    }
    ctx.manifest.extra.emplace_back("assertions", rep.ok() ? "passed" : "failed");
    if (!rep.ok()) {
        std::string msg = "energy threshold exceeds the KPP bound for delta =";
        for (const auto& r : rep.rows)
            if (!r.ordering_ok) msg += " " + short_number(r.delta);
        fail(ErrorKind::DemoFailed, msg);
    }
    ctx.log << "thresholds: ordering holds for " << rep.rows.size() << " delta values\n";
}

const std::map<std::string, std::function<void(Context&)>>& table() {
    static const std::map<std::string, std::function<void(Context&)>> t = {
        {"simulate", simulate}, {"minimize", minimize_cmd}, {"wave", wave},
        {"eigen", eigen},       {"sweep", sweep},           {"shapes", shapes},
        {"bistability", bistability}, {"thresholds", thresholds},
    };
    return t;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {"simulate", "minimize", "wave",        "eigen",
                                                   "sweep",    "shapes",   "bistability", "thresholds"};
    return names;
}

int run_command(const std::string& command, const std::string& config_path, const std::string& out_dir,
                std::ostream& log) {
    const auto t0 = std::chrono::steady_clock::now();
    std::optional<Context> ctx;
    auto finish_manifest = [&] {
        ctx->manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_manifest(ctx->out / "manifest.txt", ctx->manifest);
    };
    try {
        const auto it = table().find(command);
        if (it == table().end()) fail(ErrorKind::Config, "unknown command '" + command + "'");
        std::ifstream is(config_path);
        if (!is) fail(ErrorKind::Config, "cannot open config file " + config_path);
        const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
        ExperimentConfig cfg = parse_config_text(text);
        fs::path out = out_dir.empty() ? fs::path(cfg.out_dir) : fs::path(out_dir);
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) fail(ErrorKind::Config, "cannot create output directory " + out.string());
        ctx.emplace(Context{std::move(cfg), out, log, {}});
        ctx->manifest.command = command;
        ctx->manifest.config_hash = config_hash(text);
        ctx->manifest.scheme = ctx->cfg.scheme;
        ctx->manifest.dt = ctx->cfg.dt;
        it->second(*ctx);
        finish_manifest();
        return 0;
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        if (ctx) {
            ctx->manifest.extra.emplace_back("error", e.what());
            try {
                finish_manifest();
            } catch (const Error&) {
            }
        }
        return e.exit_code();
    }
}

}  // namespace wavelab
