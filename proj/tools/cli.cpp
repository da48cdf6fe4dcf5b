#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gearsync/gear_dynamics.hpp"
#include "gearsync/io.hpp"
#include "gearsync/scenario.hpp"
#include "gearsync/woa.hpp"

namespace gearsync::cli {
namespace {

namespace fs = std::filesystem;
using io::json;

constexpr const char* kToolVersion = "1.0.0";

struct GlobalFlags {
    std::uint64_t seed = 0;
    std::optional<double> dt;
    std::optional<double> horizon;
    std::string out_dir;
    double phi_e = 0.0;
};

struct WeightFlags {
    std::optional<double> w_iae;
    std::optional<double> w_itae;
};

class Context {
public:
    Context(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
        : args_(args), out_(out), err_(err) {}

    std::ostream& out() { return out_; }
    std::ostream& err() { return err_; }

    GlobalFlags globals;

    SpurGearParams gear_params() const {
        SpurGearParams p = SpurGearParams::nominal();
        p.phi_e = globals.phi_e;
        return p;
    }

    fs::path out_path(const std::string& name) const { return fs::path(globals.out_dir) / name; }

    void prepare_out_dir() const {
        if (!globals.out_dir.empty()) fs::create_directories(globals.out_dir);
    }

    void write_manifest(const std::string& command, json resolved) const {
        json m;
        m["tool"] = "gearsync";
        m["version"] = kToolVersion;
        m["command"] = command;
        m["argv"] = args_;
        m["seed"] = globals.seed;
        m["gear_params"] = io::to_json(gear_params());
        m["resolved"] = std::move(resolved);
        io::write_json_file(out_path("run-manifest.json").string(), m);
    }

private:
    std::vector<std::string> args_;
    std::ostream& out_;
    std::ostream& err_;
};

std::string default_out_dir() {
    if (const char* env = std::getenv("GEARSYNC_OUT"); env != nullptr && *env != '\0') return env;
    return ".";
}

template <class Stream>
Stream open_for_write(const fs::path& path) {
    Stream s(path);
    if (!s) throw Error(ErrorCode::invalid_argument, "cannot write " + path.string());
    return s;
}

io::ScenarioConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    return io::ScenarioConfig::parse(io::read_json_file(path));
}

Scenario resolve_scenario(const Context& ctx, const io::ScenarioConfig& cfg, int id) {
    Scenario sc = cfg.scenario(id);
    if (ctx.globals.dt) sc.dt = *ctx.globals.dt;
    if (ctx.globals.horizon) sc.horizon = *ctx.globals.horizon;
    sc.validate();
    return sc;
}

CostWeights resolve_weights(const io::ScenarioConfig& cfg, const WeightFlags& flags) {
    CostWeights w = cfg.weights();
    if (flags.w_iae) w.iae = *flags.w_iae;
    if (flags.w_itae) w.itae = *flags.w_itae;
    w.validate();
    return w;
}

RunOptions resolve_run_options(double integral_limit, std::optional<double> u_limit) {
    RunOptions opts;
    opts.limits.integral_limit = integral_limit;
    opts.limits.output_limit = u_limit;
    return opts;
}

json run_options_json(const RunOptions& opts) {
    return {{"integral_limit", opts.limits.integral_limit},
            {"output_limit", opts.limits.output_limit ? json(*opts.limits.output_limit) : json(nullptr)}};
}

std::vector<int> parse_id_list(const std::string& text) {
    std::vector<int> ids;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(item, &used);
        } catch (const std::exception&) {
            throw Error(ErrorCode::invalid_argument, "bad list entry '" + item + "'");
        }
        if (used != item.size()) throw Error(ErrorCode::invalid_argument, "bad list entry '" + item + "'");
        ids.push_back(v);
    }
    return ids;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct PhasePortraitFlags {
    double x1 = 0.0;
    double x2 = 0.0;
    std::string output = "phase_portrait.csv";
};

int cmd_phase_portrait(Context& ctx, const PhasePortraitFlags& f) {
    const double dt = ctx.globals.dt.value_or(kDefaultDt);
    const double horizon = ctx.globals.horizon.value_or(kDefaultPortraitHorizon);
    ctx.prepare_out_dir();
    const Trajectory traj = simulate_open_loop(f.x1, f.x2, horizon, dt, ctx.gear_params());
    auto csv = open_for_write<std::ofstream>(ctx.out_path(f.output));
    io::write_trajectory_csv(csv, traj);
    ctx.write_manifest("phase-portrait",
                       {{"x1", f.x1}, {"x2", f.x2}, {"dt", dt}, {"horizon", horizon}, {"output", f.output}});
    ctx.out() << "wrote " << traj.size() << " samples to " << ctx.out_path(f.output).string() << '\n';
    return kExitOk;
}

struct SimulateFlags {
    int scenario = 1;
    std::string controller;
    std::string params;
    std::string config;
    WeightFlags weights;
    double integral_limit = 50.0;
    std::optional<double> u_limit;
};

int cmd_simulate(Context& ctx, const SimulateFlags& f) {
    const ControllerKind kind = parse_controller_kind(f.controller);
    const ControllerSpec spec = io::spec_from_params_json(io::read_json_file(f.params));
    if (spec.kind() != kind)
        throw Error(ErrorCode::malformed_input, "params file holds a " + std::string(to_string(spec.kind())) +
                                                    " controller, not " + std::string(to_string(kind)));
    const io::ScenarioConfig cfg = load_config(f.config);
    const Scenario sc = resolve_scenario(ctx, cfg, f.scenario);
    const CostWeights weights = resolve_weights(cfg, f.weights);
    const RunOptions opts = resolve_run_options(f.integral_limit, f.u_limit);

    ctx.prepare_out_dir();
    ctx.write_manifest("simulate", {{"scenario", io::to_json(sc)},
                                    {"controller", to_string(kind)},
                                    {"params_file", f.params},
                                    {"params", encode(spec)},
                                    {"weights", {{"iae", weights.iae}, {"itae", weights.itae}}},
                                    {"run_options", run_options_json(opts)}});

    const ScenarioResult result = run_closed_loop(sc, spec, ctx.gear_params(), opts);
    auto csv = open_for_write<std::ofstream>(ctx.out_path("trajectory.csv"));
    io::write_closed_loop_csv(csv, result);
    io::write_json_file(ctx.out_path("index_report.json").string(), io::to_json(result.report, weights));
    ctx.out() << "scenario " << sc.id << " " << display_name(kind) << ": IAE " << format_index(result.report.iae)
              << "  ITAE " << format_index(result.report.itae) << '\n';
    return kExitOk;
}

struct OptimizeFlags {
    int scenario = 1;
    std::string controller;
    std::size_t pop = 30;
    std::size_t iters = 100;
    double spiral_b = 1.0;
    std::string config;
    WeightFlags weights;
    double integral_limit = 50.0;
    std::optional<double> u_limit;
};

int cmd_optimize(Context& ctx, const OptimizeFlags& f) {
    const ControllerKind kind = parse_controller_kind(f.controller);
    const io::ScenarioConfig cfg = load_config(f.config);
    const Scenario sc = resolve_scenario(ctx, cfg, f.scenario);
    const CostWeights weights = resolve_weights(cfg, f.weights);
    const RunOptions opts = resolve_run_options(f.integral_limit, f.u_limit);
    const SearchBudget budget{f.pop, f.iters, f.spiral_b, ctx.globals.seed};

    ctx.prepare_out_dir();
    ctx.write_manifest("optimize", {{"scenario", io::to_json(sc)},
                                    {"controller", to_string(kind)},
                                    {"pop", f.pop},
                                    {"iters", f.iters},
                                    {"spiral_b", f.spiral_b},
                                    {"weights", {{"iae", weights.iae}, {"itae", weights.itae}}},
                                    {"run_options", run_options_json(opts)}});

    const OptimizationOutcome outcome = optimize_controller(sc, kind, budget, weights, ctx.gear_params(), opts);
    io::write_json_file(ctx.out_path("best_params.json").string(), io::params_to_json(kind, outcome.best_vector));
    auto csv = open_for_write<std::ofstream>(ctx.out_path("convergence.csv"));
    io::write_convergence_csv(csv, outcome.woa.history);

    json result = io::woa_result_json(outcome.woa, budget.seed);
    if (outcome.report) {
        result["iae"] = outcome.report->iae;
        result["itae"] = outcome.report->itae;
    }
    io::write_json_file(ctx.out_path("woa_result.json").string(), result);

    if (!outcome.report) {
        ctx.err() << "optimizer found no stable controller\n";
        return kExitFailure;
    }
    ctx.out() << "scenario " << sc.id << " " << display_name(kind) << ": best cost "
              << format_index(outcome.best_cost) << "  IAE " << format_index(outcome.report->iae) << "  ITAE "
              << format_index(outcome.report->itae) << '\n';
    return kExitOk;
}

struct CompareFlags {
    std::string scenarios;
    std::string seeds;
    std::size_t pop = 30;
    std::size_t iters = 100;
    double spiral_b = 1.0;
    std::string config;
    WeightFlags weights;
    double integral_limit = 50.0;
    std::optional<double> u_limit;
};

int cmd_compare(Context& ctx, const CompareFlags& f) {
    const std::vector<int> ids = parse_id_list(f.scenarios);
    if (ids.empty()) throw Error(ErrorCode::invalid_argument, "--scenarios needs at least one id");
    const io::ScenarioConfig cfg = load_config(f.config);
    std::vector<Scenario> scenarios;
    for (int id : ids) scenarios.push_back(resolve_scenario(ctx, cfg, id));

    CompareOptions opts;
    opts.budget = {f.pop, f.iters, f.spiral_b, ctx.globals.seed};
    opts.weights = resolve_weights(cfg, f.weights);
    opts.params = ctx.gear_params();
    opts.run = resolve_run_options(f.integral_limit, f.u_limit);
    if (f.seeds.empty()) {
        opts.seeds = {ctx.globals.seed};
    } else {
        opts.seeds.clear();
        for (int s : parse_id_list(f.seeds)) {
            if (s < 0) throw Error(ErrorCode::invalid_argument, "seeds must be nonnegative");
            opts.seeds.push_back(static_cast<std::uint64_t>(s));
        }
        if (opts.seeds.empty()) throw Error(ErrorCode::invalid_argument, "--seeds needs at least one value");
    }
    opts.progress = [&](int s, ControllerKind kind, std::uint64_t seed, const OptimizationOutcome& run) {
        ctx.err() << "  scenario " << s << " " << display_name(kind) << " seed " << seed << ": cost "
                  << format_index(run.best_cost) << '\n';
    };

    ctx.prepare_out_dir();
    json sc_json = json::array();
    for (const auto& sc : scenarios) sc_json.push_back(io::to_json(sc));
    ctx.write_manifest("compare", {{"scenarios", sc_json},
                                   {"seeds", opts.seeds},
                                   {"pop", f.pop},
                                   {"iters", f.iters},
                                   {"spiral_b", f.spiral_b},
                                   {"weights", {{"iae", opts.weights.iae}, {"itae", opts.weights.itae}}},
                                   {"run_options", run_options_json(opts.run)}});

    const ComparisonTable table = compare_all(scenarios, opts);
    const std::string text = render_text(table);
    ctx.out() << text;
    auto txt = open_for_write<std::ofstream>(ctx.out_path("comparison.txt"));
    txt << text;
    auto csv = open_for_write<std::ofstream>(ctx.out_path("comparison.csv"));
    csv << render_csv(table);

    json params = json::array();
    for (const auto& cell : table.cells)
        for (std::size_t i = 0; i < cell.runs.size(); ++i)
            params.push_back({{"scenario", cell.scenario},
                              {"seed", opts.seeds[i]},
                              {"params", io::params_to_json(cell.kind, cell.runs[i].best_vector)}});
    io::write_json_file(ctx.out_path("comparison_params.json").string(), params);

    if (!table.all_ok()) {
        ctx.err() << "one or more cells produced no stable controller\n";
        return kExitFailure;
    }
    return kExitOk;
}

struct BenchFlags {
    std::string function;
    std::size_t dim = 10;
    std::size_t pop = 30;
    std::size_t iters = 500;
    double spiral_b = 1.0;
    std::optional<double> bound;
};

double sphere(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

double rosenbrock(std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        s += 100.0 * (x[i + 1] - x[i] * x[i]) * (x[i + 1] - x[i] * x[i]) + (1.0 - x[i]) * (1.0 - x[i]);
    return s;
}

double rastrigin(std::span<const double> x) {
    double s = 10.0 * static_cast<double>(x.size());
    for (double v : x) s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v);
    return s;
}

int cmd_woa_bench(Context& ctx, const BenchFlags& f) {
    woa::CostFn fn;
    double default_bound = 0.0;
    if (f.function == "sphere") {
        fn = sphere;
        default_bound = 100.0;
    } else if (f.function == "rosenbrock") {
        fn = rosenbrock;
        default_bound = 30.0;
    } else if (f.function == "rastrigin") {
        fn = rastrigin;
        default_bound = 5.12;
    } else {
        ctx.err() << "unknown function '" << f.function << "' (expected sphere, rosenbrock or rastrigin)\n";
        return kExitUsage;
    }
    if (f.dim == 0) throw Error(ErrorCode::invalid_argument, "--dim must be positive");
    const double bound = f.bound.value_or(default_bound);
    if (!(bound > 0.0)) throw Error(ErrorCode::invalid_argument, "--bound must be positive");

    woa::WoaConfig cfg{f.pop, f.iters, f.spiral_b, std::vector<woa::Bound>(f.dim, {-bound, bound}), ctx.globals.seed};
    ctx.prepare_out_dir();
    ctx.write_manifest("woa-bench", {{"function", f.function},
                                     {"dim", f.dim},
                                     {"pop", f.pop},
                                     {"iters", f.iters},
                                     {"spiral_b", f.spiral_b},
                                     {"bound", bound}});
    const woa::WoaResult r = woa::optimize(fn, cfg);
    auto csv = open_for_write<std::ofstream>(ctx.out_path("bench_convergence.csv"));
    io::write_convergence_csv(csv, r.history);
    io::write_json_file(ctx.out_path("bench_result.json").string(), io::woa_result_json(r, cfg.seed));
    std::ostringstream best;
    best.precision(6);
    best << std::scientific << r.best_cost;
    ctx.out() << f.function << " dim " << f.dim << ": best cost " << best.str() << '\n';
    return kExitOk;
}

void add_weight_flags(CLI::App* cmd, WeightFlags& w) {
    cmd->add_option("--w-iae", w.w_iae, "Weight of IAE in the cost (default 1)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--w-itae", w.w_itae, "Weight of ITAE in the cost (default 1)")->check(CLI::NonNegativeNumber);
}

void add_limit_flags(CLI::App* cmd, double& integral_limit, std::optional<double>& u_limit) {
    cmd->add_option("--integral-limit", integral_limit, "Anti-windup clamp on the integral term")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--u-limit", u_limit, "Saturate |u| at this value (off by default)")->check(CLI::PositiveNumber);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Context ctx(args, out, err);
    ctx.globals.out_dir = default_out_dir();

    CLI::App app{"Chaotic spur-gear simulation, fuzzy PID control and WOA tuning", "gearsync"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--seed", ctx.globals.seed, "RNG seed")->capture_default_str();
    app.add_option("--dt", ctx.globals.dt, "Integration step")->check(CLI::PositiveNumber);
    app.add_option("--horizon", ctx.globals.horizon, "Simulation horizon")->check(CLI::PositiveNumber);
    app.add_option("--out-dir", ctx.globals.out_dir, "Output directory (default $GEARSYNC_OUT or .)");
    app.add_option("--phi-e", ctx.globals.phi_e, "Excitation phase (rad)")->capture_default_str();

    std::function<int()> action;

    PhasePortraitFlags pp;
    auto* cmd_pp = app.add_subcommand("phase-portrait", "Open-loop trajectory from (x1, x2)");
    cmd_pp->add_option("--x1", pp.x1, "Initial displacement")->required();
    cmd_pp->add_option("--x2", pp.x2, "Initial velocity")->required();
    cmd_pp->add_option("--output", pp.output, "CSV file name inside the out dir")->capture_default_str();
    cmd_pp->callback([&] { action = [&] { return cmd_phase_portrait(ctx, pp); }; });

    SimulateFlags sim;
    auto* cmd_sim = app.add_subcommand("simulate", "Closed-loop run of one scenario with a params file");
    cmd_sim->add_option("--scenario", sim.scenario, "Scenario id 1..4")->required();
    cmd_sim->add_option("--controller", sim.controller, "pid | fpid1 | fpid2")->required();
    cmd_sim->add_option("--params", sim.params, "Params JSON (e.g. best_params.json)")->required();
    cmd_sim->add_option("--config", sim.config, "Scenario config JSON");
    add_weight_flags(cmd_sim, sim.weights);
    add_limit_flags(cmd_sim, sim.integral_limit, sim.u_limit);
    cmd_sim->callback([&] { action = [&] { return cmd_simulate(ctx, sim); }; });

    OptimizeFlags opt;
    auto* cmd_opt = app.add_subcommand("optimize", "Tune one controller on one scenario with WOA");
    cmd_opt->add_option("--scenario", opt.scenario, "Scenario id 1..4")->required();
    cmd_opt->add_option("--controller", opt.controller, "pid | fpid1 | fpid2")->required();
    cmd_opt->add_option("--pop", opt.pop, "Population size")->capture_default_str()->check(CLI::Range(2, 100000));
    cmd_opt->add_option("--iters", opt.iters, "Iterations")->capture_default_str()->check(CLI::Range(1, 10000000));
    cmd_opt->add_option("--spiral-b", opt.spiral_b, "Logarithmic spiral shape b")->capture_default_str();
    cmd_opt->add_option("--config", opt.config, "Scenario config JSON");
    add_weight_flags(cmd_opt, opt.weights);
    add_limit_flags(cmd_opt, opt.integral_limit, opt.u_limit);
    cmd_opt->callback([&] { action = [&] { return cmd_optimize(ctx, opt); }; });

    CompareFlags cmp;
    auto* cmd_cmp = app.add_subcommand("compare", "Tune PID, FPID-I and FPID-II on each scenario and tabulate");
    cmd_cmp->add_option("--scenarios", cmp.scenarios, "Comma-separated scenario ids, e.g. 1,2")->required();
    cmd_cmp->add_option("--seeds", cmp.seeds, "Comma-separated seeds; medians are reported (default: --seed)");
    cmd_cmp->add_option("--pop", cmp.pop, "Population size")->capture_default_str()->check(CLI::Range(2, 100000));
    cmd_cmp->add_option("--iters", cmp.iters, "Iterations")->capture_default_str()->check(CLI::Range(1, 10000000));
    cmd_cmp->add_option("--spiral-b", cmp.spiral_b, "Logarithmic spiral shape b")->capture_default_str();
    cmd_cmp->add_option("--config", cmp.config, "Scenario config JSON");
    add_weight_flags(cmd_cmp, cmp.weights);
    add_limit_flags(cmd_cmp, cmp.integral_limit, cmp.u_limit);
    cmd_cmp->callback([&] { action = [&] { return cmd_compare(ctx, cmp); }; });

    BenchFlags bench;
    auto* cmd_bench = app.add_subcommand("woa-bench", "Run WOA on a standard test function");
    cmd_bench->add_option("--function", bench.function, "sphere | rosenbrock | rastrigin")->required();
    cmd_bench->add_option("--dim", bench.dim, "Dimension")->capture_default_str();
    cmd_bench->add_option("--pop", bench.pop, "Population size")->capture_default_str()->check(CLI::Range(2, 100000));
    cmd_bench->add_option("--iters", bench.iters, "Iterations")->capture_default_str()->check(CLI::Range(1, 10000000));
    cmd_bench->add_option("--spiral-b", bench.spiral_b, "Logarithmic spiral shape b")->capture_default_str();
    cmd_bench->add_option("--bound", bench.bound, "Half-width of the search box (default per function)");
    cmd_bench->callback([&] { action = [&] { return cmd_woa_bench(ctx, bench); }; });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        return action ? action() : kExitUsage;
    } catch (const NonFiniteStateError& e) {
        err << "error: run diverged at tau=" << e.tau() << " (" << e.what() << ")\n";
        return kExitFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        switch (e.code()) {
        case ErrorCode::invalid_argument:
        case ErrorCode::malformed_input:
        case ErrorCode::unknown_scenario:
        case ErrorCode::invalid_bounds: return kExitUsage;
        default: return kExitFailure;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace gearsync::cli
