// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Criterion 2 runs 60 full optimizations and takes a few minutes.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "fis_oracle.hpp"
#include "gearsync/controllers.hpp"
#include "gearsync/gear_dynamics.hpp"
#include "gearsync/it2_fis.hpp"
#include "gearsync/metrics.hpp"
#include "gearsync/scenario.hpp"
#include "gearsync/woa.hpp"

using namespace gearsync;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Verdict()>& check) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = check();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failures;
    std::printf("[%s] %d %s: %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

Verdict chaos_sensitivity() {
    const auto p = SpurGearParams::nominal();
    double slowest = 0.0;
    auto timed = [&](double x2) {
        const auto t0 = std::chrono::steady_clock::now();
        auto traj = simulate_open_loop(-2.0, x2, 500.0, 0.01, p);
        slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        return traj;
    };
    const auto base = timed(1.0);
    const auto up = timed(1.2);
    const auto down = timed(0.8);
    const double d_up = divergence_metric(base, up);
    const double d_down = divergence_metric(base, down);
    double peak = 0.0;
    for (const auto* t : {&base, &up, &down})
        for (const auto& s : t->samples) peak = std::max(peak, std::abs(s.x1));
    std::ostringstream os;
    os << "divergence " << d_up << " / " << d_down << " (need >= 2), max|x1| " << peak << ", slowest run " << slowest
       << "s";
    return {d_up >= 2.0 && d_down >= 2.0 && peak < 100.0 && slowest < 1.0, os.str()};
}

Verdict controller_ranking() {
    std::vector<Scenario> scenarios;
    for (int id = 1; id <= 4; ++id) scenarios.push_back(build_scenario(id));
    CompareOptions opts;
    opts.budget = {20, 50, 1.0, 0};
    opts.seeds = {1, 2, 3, 4, 5};
    opts.progress = [](int s, ControllerKind k, std::uint64_t seed, const OptimizationOutcome& r) {
        std::printf("    scenario %d %-12s seed %llu  cost %s\n", s, std::string(display_name(k)).c_str(),
                    static_cast<unsigned long long>(seed), format_index(r.best_cost).c_str());
        std::fflush(stdout);
    };
    const auto table = compare_all(scenarios, opts);
    std::printf("%s", render_text(table).c_str());

    int ordered = 0;
    std::ostringstream bad;
    for (int id = 1; id <= 4; ++id) {
        const auto& pid = table.at(id, ControllerKind::pid);
        const auto& t1 = table.at(id, ControllerKind::fpid_t1);
        const auto& t2 = table.at(id, ControllerKind::fpid_t2);
        if (t2.iae <= t1.iae && t1.iae <= pid.iae)
            ++ordered;
        else
            bad << " IAE-S" << id;
        if (t2.itae <= t1.itae && t1.itae <= pid.itae)
            ++ordered;
        else
            bad << " ITAE-S" << id;
    }
    std::string detail = std::to_string(ordered) + "/8 cells ordered FPID-II <= FPID-I <= PID";
    if (ordered < 8) detail += "; out of order:" + bad.str();
    return {ordered == 8, detail};
}

Verdict type1_oracle() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> in(-4.0, 4.0);
    double worst_oracle = 0.0;
    double worst_m = 0.0;
    for (int n = 0; n < 1000; ++n) {
        auto cfg = oracle::random_config(rng, false, 0.5, 4.0);
        const double e = in(rng);
        const double de = in(rng);
        cfg.m = 0.0;
        const PidGains ref = evaluate_gains(e, de, cfg);
        const double expect[3] = {oracle::type1_ts(e, de, cfg, cfg.theta_kp), oracle::type1_ts(e, de, cfg, cfg.theta_ki),
                                  oracle::type1_ts(e, de, cfg, cfg.theta_kd)};
        const double got[3] = {ref.kp, ref.ki, ref.kd};
        for (int g = 0; g < 3; ++g) worst_oracle = std::max(worst_oracle, std::abs(got[g] - expect[g]));
        for (int k = 0; k <= 10; ++k) {
            cfg.m = k / 10.0;
            const PidGains at = evaluate_gains(e, de, cfg);
            worst_m = std::max({worst_m, std::abs(at.kp - ref.kp), std::abs(at.ki - ref.ki), std::abs(at.kd - ref.kd)});
        }
    }
    std::ostringstream os;
    os << "max |engine - TS oracle| " << worst_oracle << ", max drift over m grid " << worst_m;
    return {worst_oracle <= 1e-12 && worst_m <= 1e-12, os.str()};
}

Verdict output_bounds() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> in(-6.0, 6.0);
    std::size_t outside = 0;
    double worst_sum = 0.0;
    for (int n = 0; n < 10000; ++n) {
        const auto cfg = oracle::random_config(rng, true, 0.05, 4.0);
        const double e = in(rng);
        const double de = in(rng);
        const auto g = evaluate_gains(e, de, cfg);
        const std::pair<double, const RuleVector*> pairs[3] = {
            {g.kp, &cfg.theta_kp}, {g.ki, &cfg.theta_ki}, {g.kd, &cfg.theta_kd}};
        for (const auto& [v, th] : pairs) {
            const auto [lo, hi] = std::minmax_element(th->begin(), th->end());
            if (!(v >= *lo && v <= *hi && v >= kGainMin && v <= kGainMax)) ++outside;
        }
        const auto w = rule_firings(e, de, cfg);
        const auto z = normalize(w.lower, w.upper);
        for (const auto* band : {&z.zeta_lower, &z.zeta_upper})
            worst_sum = std::max(worst_sum, std::abs(std::accumulate(band->begin(), band->end(), 0.0) - 1.0));
    }
    std::ostringstream os;
    os << outside << " gains out of range, max |sum(zeta) - 1| " << worst_sum;
    return {outside == 0 && worst_sum <= 1e-12, os.str()};
}

Verdict rk4_order() {
    auto rhs = [](const GearState& s) { return Derivative{s.x2, -s.x1 + std::cos(s.tau)}; };
    auto error = [&](double dt) {
        GearState s{1.0, 0.5, 0.0};
        const long n = std::lround(10.0 / dt);
        for (long k = 0; k < n; ++k) s = rk4_step(s, dt, rhs);
        const double t = static_cast<double>(n) * dt;
        return std::abs(s.x1 - (std::cos(t) + 0.5 * std::sin(t) + 0.5 * t * std::sin(t)));
    };
    const double ratio = error(0.1) / error(0.05);
    return {ratio >= 12.0 && ratio <= 20.0, fmt("err(0.1)/err(0.05) = %.4f", ratio)};
}

Verdict woa_sphere() {
    auto sphere = [](std::span<const double> x) { return std::inner_product(x.begin(), x.end(), x.begin(), 0.0); };
    std::vector<double> best;
    bool monotone = true;
    bool in_bounds = true;
    bool reproducible = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        woa::WoaConfig cfg{30, 500, 1.0, std::vector<woa::Bound>(10, {-100.0, 100.0}), seed};
        const auto r = woa::optimize(sphere, cfg, [&](std::size_t, std::span<const woa::Agent> pop) {
            for (const auto& a : pop)
                for (double x : a.position)
                    if (!(x >= -100.0 && x <= 100.0)) in_bounds = false;
        });
        for (std::size_t t = 1; t < r.history.size(); ++t)
            if (r.history[t] > r.history[t - 1]) monotone = false;
        const auto again = woa::optimize(sphere, cfg);
        if (again.history != r.history || again.best_position != r.best_position) reproducible = false;
        best.push_back(r.best_cost);
    }
    const double med = median(best);
    std::ostringstream os;
    os << "median best " << med << ", monotone " << monotone << ", in bounds " << in_bounds << ", reproducible "
       << reproducible;
    return {med < 1e-2 && monotone && in_bounds && reproducible, os.str()};
}

Verdict metrics_closed_forms() {
    const std::vector<double> e(5000, 2.0);
    const double a = iae(e, 0.001);
    const double b = itae(e, 0.001);
    bool identities = true;
    // Every sign/magnitude pattern over {-2,-1,0,1,2}^4 with power-of-two scalings.
    const double values[5] = {-2.0, -1.0, 0.0, 1.0, 2.0};
    std::vector<double> seq(4), scaled(4), weighted(4);
    for (int code = 0; code < 625; ++code) {
        int c = code;
        for (auto& v : seq) {
            v = values[c % 5] * 0.37;
            c /= 5;
        }
        for (double dt : {0.01, 0.1, 0.5}) {
            for (double lambda : {0.5, 2.0, -4.0}) {
                for (std::size_t k = 0; k < 4; ++k) scaled[k] = lambda * seq[k];
                if (iae(scaled, dt) != std::abs(lambda) * iae(seq, dt)) identities = false;
                if (itae(scaled, dt) != std::abs(lambda) * itae(seq, dt)) identities = false;
            }
            for (std::size_t k = 0; k < 4; ++k) weighted[k] = static_cast<double>(k) * dt * seq[k];
            if (itae(seq, dt) != iae(weighted, dt)) identities = false;
        }
    }
    std::ostringstream os;
    os << "IAE " << a << ", ITAE " << b << ", identities exact " << identities;
    return {std::abs(a - 10.0) <= 0.01 && std::abs(b - 25.0) <= 0.05 && identities, os.str()};
}

Verdict synchronized_start() {
    std::mt19937_64 rng(8);
    double worst = 0.0;
    for (ControllerKind kind : kAllKinds)
        for (int n = 0; n < 3; ++n) {
            std::vector<double> v;
            for (const auto& b : param_bounds(kind)) v.push_back(std::uniform_real_distribution<double>(b.lo, b.hi)(rng));
            auto sc = build_scenario(2);
            sc.plant_init = sc.reference_init;
            const auto r = run_closed_loop(sc, decode(kind, v), SpurGearParams::nominal());
            worst = std::max({worst, r.report.iae, r.report.itae});
        }
    return {worst == 0.0, fmt("largest IAE/ITAE over 9 controllers = %g", worst)};
}

Verdict replay() {
    const fs::path dir = fs::temp_directory_path() / ("gearsync_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    double worst = 0.0;
    bool ok = true;
    for (const char* kind : {"pid", "fpid1", "fpid2"}) {
        const fs::path sub = dir / kind;
        std::ostringstream out, err;
        const int a = cli::run({"--out-dir", sub.string(), "--seed", "7", "optimize", "--scenario", "3",
                                "--controller", kind, "--pop", "8", "--iters", "6"},
                               out, err);
        const int b = cli::run({"--out-dir", sub.string(), "simulate", "--scenario", "3", "--controller", kind,
                                "--params", (sub / "best_params.json").string()},
                               out, err);
        if (a != 0 || b != 0) {
            ok = false;
            continue;
        }
        const auto opt = nlohmann::json::parse(std::ifstream(sub / "woa_result.json"));
        const auto sim = nlohmann::json::parse(std::ifstream(sub / "index_report.json"));
        for (const char* key : {"iae", "itae"}) {
            const double x = opt.at(key).get<double>();
            const double y = sim.at(key).get<double>();
            worst = std::max(worst, std::abs(x - y) / std::max(std::abs(x), 1e-300));
        }
        const double c = opt.at("best_cost").get<double>();
        worst = std::max(worst, std::abs(sim.at("cost").get<double>() - c) / c);
    }
    std::error_code ec;
    fs::remove_all(dir, ec);
    return {ok && worst <= 1e-9, fmt("max relative replay difference %g", worst)};
}

}  // namespace

int main() {
    report(1, "chaos sensitivity", chaos_sensitivity);
    report(3, "type-I reduction oracle", type1_oracle);
    report(4, "Biglarbegian output bounds", output_bounds);
    report(5, "RK4 order", rk4_order);
    report(6, "WOA on sphere", woa_sphere);
    report(7, "metrics closed forms", metrics_closed_forms);
    report(8, "synchronized start", synchronized_start);
    report(9, "optimize/simulate replay", replay);
    report(2, "controller ranking", controller_ranking);
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
