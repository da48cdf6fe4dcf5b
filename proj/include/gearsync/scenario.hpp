#pragma once

// Regulation and master-slave synchronization experiments, the flat
// parameter layouts searched by WOA, and the controller comparison table.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gearsync/controllers.hpp"
#include "gearsync/error.hpp"
#include "gearsync/gear_dynamics.hpp"
#include "gearsync/it2_fis.hpp"
#include "gearsync/metrics.hpp"
#include "gearsync/woa.hpp"

namespace gearsync {

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

enum class ScenarioMode { regulation, synchronization };

/// Relative perturbation of (mu, f_m, f_e) applied to the controlled plant.
struct Uncertainty {
    double mu = 0.0;
    double f_m = 0.0;
    double f_e = 0.0;

    void validate() const {
        for (double r : {mu, f_m, f_e})
            if (!(std::abs(r) <= 0.5)) throw Error(ErrorCode::invalid_argument, "perturbation magnitude exceeds 0.5");
    }
};

inline SpurGearParams apply_uncertainty(SpurGearParams p, const Uncertainty& rel) {
    rel.validate();
    p.mu *= 1.0 + rel.mu;
    p.f_m *= 1.0 + rel.f_m;
    p.f_e *= 1.0 + rel.f_e;
    return p;
}

struct InitialCondition {
    double x1 = 0.0;
    double x2 = 0.0;

    friend bool operator==(const InitialCondition&, const InitialCondition&) = default;
};

inline constexpr double kDefaultDt = 0.01;
inline constexpr double kDefaultControlHorizon = 100.0;
inline constexpr double kDefaultPortraitHorizon = 500.0;

struct Scenario {
    int id = 1;
    ScenarioMode mode = ScenarioMode::regulation;
    /// Regulation: the setpoint is reference_init.x1. Synchronization: the
    /// master starts here and runs open loop.
    InitialCondition reference_init;
    InitialCondition plant_init;
    double horizon = kDefaultControlHorizon;
    double dt = kDefaultDt;
    std::optional<Uncertainty> uncertainty;

    void validate() const {
        if (!(horizon > 0.0)) throw Error(ErrorCode::invalid_argument, "scenario horizon must be positive");
        if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "scenario dt must be positive");
        if (uncertainty) uncertainty->validate();
    }
};

/// The four experiments. 1: hold the origin against the mesh forcing.
/// 2 and 4: synchronize with a free-running master. 3: track the free-running
/// chaotic trajectory started at (-1, 0.5).
inline Scenario build_scenario(int id) {
    auto make = [id](ScenarioMode mode, InitialCondition reference, InitialCondition plant) {
        Scenario sc;
        sc.id = id;
        sc.mode = mode;
        sc.reference_init = reference;
        sc.plant_init = plant;
        return sc;
    };
    switch (id) {
    case 1: return make(ScenarioMode::regulation, {0.0, 0.0}, {0.0, 0.0});
    case 2: return make(ScenarioMode::synchronization, {1.0, -1.0}, {0.0, 0.0});
    case 3: return make(ScenarioMode::synchronization, {-1.0, 0.5}, {0.0, 0.0});
    case 4: return make(ScenarioMode::synchronization, {0.0, 0.0}, {-1.0, 2.0});
    default: throw Error(ErrorCode::unknown_scenario, "scenario id must be 1..4, got " + std::to_string(id));
    }
}

// ---------------------------------------------------------------------------
// Closed loop
// ---------------------------------------------------------------------------

struct ClosedLoopRow {
    double tau = 0.0;
    double x1 = 0.0;
    double x2 = 0.0;
    double ref = 0.0;
    double e = 0.0;
    double u = 0.0;
    PidGains gains;
};

struct ScenarioResult {
    double dt = 0.0;
    ControllerKind kind = ControllerKind::pid;
    std::vector<ClosedLoopRow> rows;
    /// e_0 .. e_{N-1}: the samples the indices integrate.
    std::vector<double> errors;
    IndexReport report;
};

struct RunOptions {
    ControlLimits limits;
    bool record = true;
    SimulationLimits simulation;
};

/// Steps the plant (and, when synchronizing, the master in lockstep) over the
/// scenario horizon. Per step: reference, e = ref - x1, one controller update,
/// one RK4 step with u held. Throws NonFiniteStateError on divergence.
inline ScenarioResult run_closed_loop(const Scenario& sc, const ControllerSpec& spec, const SpurGearParams& params,
                                      const RunOptions& opts = {}) {
    sc.validate();
    params.validate();
    const SpurGearParams plant_params = sc.uncertainty ? apply_uncertainty(params, *sc.uncertainty) : params;
    const std::uint64_t n = step_count(sc.horizon, sc.dt, opts.simulation);
    const bool sync = sc.mode == ScenarioMode::synchronization;

    ScenarioResult out;
    out.dt = sc.dt;
    out.kind = spec.kind();
    out.errors.reserve(n);
    if (opts.record) out.rows.reserve(n + 1);

    GearState plant{sc.plant_init.x1, sc.plant_init.x2, 0.0};
    GearState master{sc.reference_init.x1, sc.reference_init.x2, 0.0};
    Controller controller(spec, opts.limits);

    for (std::uint64_t k = 0;; ++k) {
        const double ref = sync ? master.x1 : sc.reference_init.x1;
        const double e = ref - plant.x1;
        const FpidOutput step = controller.step(e, sc.dt);
        if (!std::isfinite(step.u))
            throw NonFiniteStateError(plant.tau, "control became non-finite at tau=" + std::to_string(plant.tau));
        if (opts.record) out.rows.push_back({plant.tau, plant.x1, plant.x2, ref, e, step.u, step.scheduled});
        if (k == n) break;

        out.errors.push_back(e);
        const double next_tau = static_cast<double>(k + 1) * sc.dt;
        plant = rk4_step(plant, sc.dt, step.u, plant_params);
        plant.tau = next_tau;
        if (sync) {
            master = rk4_step(master, sc.dt, 0.0, params);
            master.tau = next_tau;
        }
    }
    out.report = index_report(out.errors, sc.dt);
    return out;
}

// ---------------------------------------------------------------------------
// Parameter layouts
//
//   pid    : [kp, ki, kd]
//   fpid_t1: per input (e, then de) 3 centers + 3 sigmas, then 9 theta_kp,
//            9 theta_ki, 9 theta_kd                                   -> 39
//   fpid_t2: per input 3 centers + 3 sigma_lower + 3 widenings, then the
//            27 thetas, then m                                        -> 46
// ---------------------------------------------------------------------------

inline constexpr woa::Bound kCenterBounds{-4.0, 4.0};
inline constexpr woa::Bound kSigmaBounds{0.05, 4.0};
inline constexpr woa::Bound kWideningBounds{0.0, 2.0};
inline constexpr woa::Bound kGainBounds{kGainMin, kGainMax};
inline constexpr woa::Bound kWeightBounds{0.0, 1.0};

inline std::size_t param_dimension(ControllerKind kind) noexcept {
    switch (kind) {
    case ControllerKind::pid: return 3;
    case ControllerKind::fpid_t1: return 2 * 2 * kMfsPerInput + 3 * kRuleCount;
    case ControllerKind::fpid_t2: return 2 * 3 * kMfsPerInput + 3 * kRuleCount + 1;
    }
    return 0;
}

inline std::vector<woa::Bound> param_bounds(ControllerKind kind) {
    std::vector<woa::Bound> b;
    b.reserve(param_dimension(kind));
    if (kind == ControllerKind::pid) return {kGainBounds, kGainBounds, kGainBounds};
    const bool t2 = kind == ControllerKind::fpid_t2;
    for (int input = 0; input < 2; ++input) {
        b.insert(b.end(), kMfsPerInput, kCenterBounds);
        b.insert(b.end(), kMfsPerInput, kSigmaBounds);
        if (t2) b.insert(b.end(), kMfsPerInput, kWideningBounds);
    }
    b.insert(b.end(), 3 * kRuleCount, kGainBounds);
    if (t2) b.push_back(kWeightBounds);
    return b;
}

inline ControllerSpec decode(ControllerKind kind, std::span<const double> v) {
    if (v.size() != param_dimension(kind))
        throw Error(ErrorCode::malformed_input, "parameter vector for " + std::string(to_string(kind)) + " needs " +
                                                    std::to_string(param_dimension(kind)) + " entries, got " +
                                                    std::to_string(v.size()));
    const auto bounds = param_bounds(kind);
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!(v[i] >= bounds[i].lo && v[i] <= bounds[i].hi))
            throw Error(ErrorCode::malformed_input, "parameter " + std::to_string(i) + " out of bounds");

    if (kind == ControllerKind::pid) return ControllerSpec::pid({v[0], v[1], v[2]});

    const bool t2 = kind == ControllerKind::fpid_t2;
    IT2FisConfig cfg;
    std::size_t at = 0;
    for (auto* mfs : {&cfg.e_mfs, &cfg.de_mfs}) {
        for (std::size_t k = 0; k < kMfsPerInput; ++k) (*mfs)[k].center = v[at + k];
        for (std::size_t k = 0; k < kMfsPerInput; ++k) (*mfs)[k].sigma_lower = v[at + kMfsPerInput + k];
        for (std::size_t k = 0; k < kMfsPerInput; ++k)
            (*mfs)[k].widening = t2 ? v[at + 2 * kMfsPerInput + k] : 0.0;
        at += (t2 ? 3 : 2) * kMfsPerInput;
    }
    for (auto* theta : {&cfg.theta_kp, &cfg.theta_ki, &cfg.theta_kd}) {
        std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(at), kRuleCount, theta->begin());
        at += kRuleCount;
    }
    cfg.m = t2 ? v[at] : kType1Weight;
    return t2 ? ControllerSpec::fpid_t2(cfg) : ControllerSpec::fpid_t1(cfg);
}

inline std::vector<double> encode(const ControllerSpec& spec) {
    std::vector<double> v;
    v.reserve(param_dimension(spec.kind()));
    if (const auto* g = std::get_if<PidGains>(&spec.value())) return {g->kp, g->ki, g->kd};
    const IT2FisConfig& cfg = *spec.fis();
    const bool t2 = spec.kind() == ControllerKind::fpid_t2;
    for (const auto* mfs : {&cfg.e_mfs, &cfg.de_mfs}) {
        for (const auto& mf : *mfs) v.push_back(mf.center);
        for (const auto& mf : *mfs) v.push_back(mf.sigma_lower);
        if (t2)
            for (const auto& mf : *mfs) v.push_back(mf.widening);
    }
    for (const auto* theta : {&cfg.theta_kp, &cfg.theta_ki, &cfg.theta_kd}) v.insert(v.end(), theta->begin(), theta->end());
    if (t2) v.push_back(cfg.m);
    return v;
}

// ---------------------------------------------------------------------------
// Optimization
// ---------------------------------------------------------------------------

/// Optimizer knobs without the search box, which the controller kind fixes.
struct SearchBudget {
    std::size_t pop_size = 30;
    std::size_t max_iters = 100;
    double spiral_b = 1.0;
    std::uint64_t seed = 0;
};

inline woa::WoaConfig make_woa_config(ControllerKind kind, const SearchBudget& budget) {
    return {budget.pop_size, budget.max_iters, budget.spiral_b, param_bounds(kind), budget.seed};
}

/// Combined cost of one closed-loop run; +inf when the run diverges.
inline double evaluate_cost(const Scenario& sc, const ControllerSpec& spec, const SpurGearParams& params,
                            const CostWeights& weights, RunOptions opts = {}) {
    opts.record = false;
    try {
        return cost(run_closed_loop(sc, spec, params, opts).report, weights);
    } catch (const NonFiniteStateError&) {
        return kUnstableCost;
    }
}

struct OptimizationOutcome {
    ControllerKind kind = ControllerKind::pid;
    std::vector<double> best_vector;
    woa::WoaResult woa;
    /// Indices of a fresh run at the best parameters; nullopt if it diverged.
    std::optional<IndexReport> report;
    double best_cost = kUnstableCost;
};

inline OptimizationOutcome optimize_controller(const Scenario& sc, ControllerKind kind, const SearchBudget& budget,
                                               const CostWeights& weights = {},
                                               const SpurGearParams& params = SpurGearParams::nominal(),
                                               const RunOptions& opts = {}) {
    weights.validate();
    sc.validate();
    const woa::WoaConfig cfg = make_woa_config(kind, budget);
    auto cost_fn = [&](std::span<const double> x) {
        return evaluate_cost(sc, decode(kind, x), params, weights, opts);
    };
    OptimizationOutcome out;
    out.kind = kind;
    out.woa = woa::optimize(cost_fn, cfg);
    out.best_vector = out.woa.best_position;
    out.best_cost = out.woa.best_cost;
    RunOptions replay = opts;
    replay.record = false;
    try {
        out.report = run_closed_loop(sc, decode(kind, out.best_vector), params, replay).report;
    } catch (const NonFiniteStateError&) {
        out.report.reset();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Comparison table
// ---------------------------------------------------------------------------

inline constexpr std::array<ControllerKind, 3> kAllKinds{ControllerKind::pid, ControllerKind::fpid_t1,
                                                         ControllerKind::fpid_t2};

struct ComparisonCell {
    int scenario = 0;
    ControllerKind kind = ControllerKind::pid;
    /// Median over seeds of the re-run indices at each seed's best parameters.
    double iae = kUnstableCost;
    double itae = kUnstableCost;
    bool ok = false;
    std::vector<OptimizationOutcome> runs;
};

struct ComparisonTable {
    std::vector<int> scenarios;
    std::vector<ControllerKind> kinds;
    std::vector<ComparisonCell> cells;

    const ComparisonCell& at(int scenario, ControllerKind kind) const {
        for (const auto& c : cells)
            if (c.scenario == scenario && c.kind == kind) return c;
        throw Error(ErrorCode::invalid_argument, "no cell for scenario " + std::to_string(scenario));
    }

    bool all_ok() const noexcept {
        return std::all_of(cells.begin(), cells.end(), [](const auto& c) { return c.ok; });
    }
};

inline double median(std::vector<double> values) {
    if (values.empty()) throw Error(ErrorCode::empty_sequence, "median of nothing");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

struct CompareOptions {
    SearchBudget budget;
    std::vector<std::uint64_t> seeds{0};
    CostWeights weights;
    SpurGearParams params = SpurGearParams::nominal();
    RunOptions run;
    std::vector<ControllerKind> kinds{kAllKinds.begin(), kAllKinds.end()};
    /// Called after each (scenario, kind, seed) optimization finishes.
    std::function<void(int scenario, ControllerKind kind, std::uint64_t seed, const OptimizationOutcome&)> progress;
};

inline ComparisonTable compare_all(const std::vector<Scenario>& scenarios, const CompareOptions& opts) {
    if (scenarios.empty()) throw Error(ErrorCode::invalid_argument, "no scenarios to compare");
    if (opts.seeds.empty()) throw Error(ErrorCode::invalid_argument, "no seeds to compare over");
    ComparisonTable table;
    table.kinds = opts.kinds;
    for (const auto& sc : scenarios) {
        table.scenarios.push_back(sc.id);
        for (ControllerKind kind : opts.kinds) {
            ComparisonCell cell;
            cell.scenario = sc.id;
            cell.kind = kind;
            cell.ok = true;
            std::vector<double> iaes;
            std::vector<double> itaes;
            for (std::uint64_t seed : opts.seeds) {
                SearchBudget budget = opts.budget;
                budget.seed = seed;
                OptimizationOutcome run = optimize_controller(sc, kind, budget, opts.weights, opts.params, opts.run);
                if (opts.progress) opts.progress(sc.id, kind, seed, run);
                if (run.report) {
                    iaes.push_back(run.report->iae);
                    itaes.push_back(run.report->itae);
                } else {
                    cell.ok = false;
                    iaes.push_back(kUnstableCost);
                    itaes.push_back(kUnstableCost);
                }
                cell.runs.push_back(std::move(run));
            }
            cell.iae = median(iaes);
            cell.itae = median(itaes);
            table.cells.push_back(std::move(cell));
        }
    }
    return table;
}

inline std::string format_index(double v) {
    if (!std::isfinite(v)) return "inf";
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

/// Aligned plain-text table: one row per controller, IAE/ITAE column pair
/// per scenario.
inline std::string render_text(const ComparisonTable& t) {
    std::vector<std::vector<std::string>> grid;
    std::vector<std::string> header{"Controller"};
    for (int s : t.scenarios) {
        header.push_back("IAE-S" + std::to_string(s));
        header.push_back("ITAE-S" + std::to_string(s));
    }
    grid.push_back(header);
    for (ControllerKind kind : t.kinds) {
        std::vector<std::string> row{std::string(display_name(kind))};
        for (int s : t.scenarios) {
            const auto& c = t.at(s, kind);
            row.push_back(format_index(c.iae));
            row.push_back(format_index(c.itae));
        }
        grid.push_back(row);
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& row : grid)
        for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
    std::ostringstream os;
    for (const auto& row : grid) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i == 0)
                os << std::left << std::setw(static_cast<int>(width[i])) << row[i];
            else
                os << "  " << std::right << std::setw(static_cast<int>(width[i])) << row[i];
        }
        os << '\n';
    }
    return os.str();
}

inline std::string render_csv(const ComparisonTable& t) {
    std::ostringstream os;
    os << "controller,scenario,iae,itae\n";
    os << std::setprecision(17);
    for (int s : t.scenarios)
        for (ControllerKind kind : t.kinds) {
            const auto& c = t.at(s, kind);
            os << to_string(kind) << ',' << s << ',' << c.iae << ',' << c.itae << '\n';
        }
    return os.str();
}

}  // namespace gearsync
