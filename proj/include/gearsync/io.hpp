#pragma once

// CSV and JSON formats shared by the CLI and external plotting scripts.

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gearsync/controllers.hpp"
#include "gearsync/error.hpp"
#include "gearsync/gear_dynamics.hpp"
#include "gearsync/it2_fis.hpp"
#include "gearsync/metrics.hpp"
#include "gearsync/scenario.hpp"
#include "gearsync/woa.hpp"

namespace gearsync::io {

using json = nlohmann::json;

inline constexpr int kCsvPrecision = std::numeric_limits<double>::max_digits10;

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os.precision(kCsvPrecision);
    os << "tau,x1,x2,u\n";
    for (const auto& s : traj.samples) os << s.tau << ',' << s.x1 << ',' << s.x2 << ',' << s.u << '\n';
}

/// `tau,x1,x2,ref,e,u` plus `kp,ki,kd` when the controller schedules gains.
inline void write_closed_loop_csv(std::ostream& os, const ScenarioResult& result) {
    const bool gains = result.kind != ControllerKind::pid;
    os.precision(kCsvPrecision);
    os << "tau,x1,x2,ref,e,u" << (gains ? ",kp,ki,kd" : "") << '\n';
    for (const auto& r : result.rows) {
        os << r.tau << ',' << r.x1 << ',' << r.x2 << ',' << r.ref << ',' << r.e << ',' << r.u;
        if (gains) os << ',' << r.gains.kp << ',' << r.gains.ki << ',' << r.gains.kd;
        os << '\n';
    }
}

inline void write_convergence_csv(std::ostream& os, std::span<const double> history) {
    os.precision(kCsvPrecision);
    os << "iter,best_cost\n";
    for (std::size_t i = 0; i < history.size(); ++i) os << i << ',' << history[i] << '\n';
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

/// Doubles that may be +inf are written as the string "inf".
inline json number_or_inf(double v) { return std::isfinite(v) ? json(v) : json("inf"); }

inline json to_json(const IT2GaussianMF& mf) {
    return {{"center", mf.center}, {"sigma_lower", mf.sigma_lower}, {"sigma_upper", mf.sigma_upper()}};
}

inline json to_json(const IT2FisConfig& cfg) {
    json j;
    j["e_mfs"] = json::array();
    j["de_mfs"] = json::array();
    for (const auto& mf : cfg.e_mfs) j["e_mfs"].push_back(to_json(mf));
    for (const auto& mf : cfg.de_mfs) j["de_mfs"].push_back(to_json(mf));
    j["theta_kp"] = cfg.theta_kp;
    j["theta_ki"] = cfg.theta_ki;
    j["theta_kd"] = cfg.theta_kd;
    j["m"] = cfg.m;
    return j;
}

namespace detail {

template <class F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::malformed_input, std::string(what) + ": " + e.what());
    }
}

}  // namespace detail

inline IT2FisConfig fis_from_json(const json& j) {
    return detail::guarded("FIS config", [&] {
        IT2FisConfig cfg;
        auto read_mfs = [](const json& arr, auto& mfs) {
            if (!arr.is_array() || arr.size() != kMfsPerInput)
                throw Error(ErrorCode::malformed_input, "each input needs exactly 3 membership functions");
            for (std::size_t k = 0; k < kMfsPerInput; ++k)
                mfs[k] = IT2GaussianMF::from_bounds(arr[k].at("center").get<double>(),
                                                    arr[k].at("sigma_lower").get<double>(),
                                                    arr[k].at("sigma_upper").get<double>());
        };
        read_mfs(j.at("e_mfs"), cfg.e_mfs);
        read_mfs(j.at("de_mfs"), cfg.de_mfs);
        auto read_theta = [&](const char* key, RuleVector& theta) {
            const auto v = j.at(key).get<std::vector<double>>();
            if (v.size() != kRuleCount) throw Error(ErrorCode::malformed_input, std::string(key) + " needs 9 entries");
            std::copy(v.begin(), v.end(), theta.begin());
        };
        read_theta("theta_kp", cfg.theta_kp);
        read_theta("theta_ki", cfg.theta_ki);
        read_theta("theta_kd", cfg.theta_kd);
        cfg.m = j.at("m").get<double>();
        try {
            cfg.validate();
        } catch (const Error& e) {
            throw Error(ErrorCode::malformed_input, e.what());
        }
        return cfg;
    });
}

/// Params file: controller kind, the raw search vector and a readable decoded
/// copy. The vector is authoritative when present.
inline json params_to_json(ControllerKind kind, std::span<const double> vector) {
    const ControllerSpec spec = decode(kind, vector);
    json j;
    j["controller"] = std::string(to_string(kind));
    j["vector"] = std::vector<double>(vector.begin(), vector.end());
    if (const auto* g = std::get_if<PidGains>(&spec.value()))
        j["pid"] = {{"kp", g->kp}, {"ki", g->ki}, {"kd", g->kd}};
    else
        j["fis"] = to_json(*spec.fis());
    return j;
}

inline ControllerSpec spec_from_params_json(const json& j) {
    return detail::guarded("params file", [&] {
        if (!j.is_object()) throw Error(ErrorCode::malformed_input, "params file must be a JSON object");
        ControllerKind kind;
        try {
            kind = parse_controller_kind(j.at("controller").get<std::string>());
        } catch (const Error& e) {
            throw Error(ErrorCode::malformed_input, e.what());
        }
        if (j.contains("vector")) return decode(kind, j.at("vector").get<std::vector<double>>());
        try {
            if (kind == ControllerKind::pid) {
                const json& g = j.at("pid");
                return ControllerSpec::pid({g.at("kp").get<double>(), g.at("ki").get<double>(), g.at("kd").get<double>()});
            }
            const IT2FisConfig cfg = fis_from_json(j.at("fis"));
            return kind == ControllerKind::fpid_t1 ? ControllerSpec::fpid_t1(cfg) : ControllerSpec::fpid_t2(cfg);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::malformed_input) throw;
            throw Error(ErrorCode::malformed_input, e.what());
        }
    });
}

inline json to_json(const IndexReport& r, const CostWeights& w) {
    return {{"iae", r.iae},         {"itae", r.itae},         {"horizon", r.horizon}, {"dt", r.dt},
            {"w_iae", w.iae},       {"w_itae", w.itae},       {"cost", number_or_inf(cost(r, w))}};
}

inline json woa_result_json(const woa::WoaResult& r, std::uint64_t seed) {
    return {{"best_position", r.best_position},
            {"best_cost", number_or_inf(r.best_cost)},
            {"seed", seed},
            {"non_finite_evaluations", r.non_finite_evaluations}};
}

inline json to_json(const SpurGearParams& p) {
    return {{"epsilon", p.epsilon}, {"mu", p.mu},           {"f_m", p.f_m},
            {"f_e", p.f_e},         {"omega_e", p.omega_e}, {"phi_e", p.phi_e}};
}

inline json to_json(const Scenario& sc) {
    json j{{"id", sc.id},
           {"mode", sc.mode == ScenarioMode::regulation ? "regulation" : "synchronization"},
           {"reference_init", {sc.reference_init.x1, sc.reference_init.x2}},
           {"plant_init", {sc.plant_init.x1, sc.plant_init.x2}},
           {"horizon", sc.horizon},
           {"dt", sc.dt}};
    if (sc.uncertainty)
        j["uncertainty"] = {{"mu", sc.uncertainty->mu}, {"f_m", sc.uncertainty->f_m}, {"f_e", sc.uncertainty->f_e}};
    else
        j["uncertainty"] = nullptr;
    return j;
}

namespace detail {

inline void apply_overrides(Scenario& sc, const json& o) {
    if (o.contains("horizon")) sc.horizon = o.at("horizon").get<double>();
    if (o.contains("dt")) sc.dt = o.at("dt").get<double>();
    if (o.contains("mode")) {
        const auto mode = o.at("mode").get<std::string>();
        if (mode == "regulation")
            sc.mode = ScenarioMode::regulation;
        else if (mode == "synchronization")
            sc.mode = ScenarioMode::synchronization;
        else
            throw Error(ErrorCode::malformed_input, "mode must be regulation or synchronization");
    }
    auto read_init = [](const json& a) {
        const auto v = a.get<std::vector<double>>();
        if (v.size() != 2) throw Error(ErrorCode::malformed_input, "initial conditions need [x1, x2]");
        return InitialCondition{v[0], v[1]};
    };
    if (o.contains("reference_init")) sc.reference_init = read_init(o.at("reference_init"));
    if (o.contains("plant_init")) sc.plant_init = read_init(o.at("plant_init"));
    if (o.contains("uncertainty")) {
        const json& u = o.at("uncertainty");
        if (u.is_null())
            sc.uncertainty.reset();
        else
            sc.uncertainty = Uncertainty{u.value("mu", 0.0), u.value("f_m", 0.0), u.value("f_e", 0.0)};
    }
}

}  // namespace detail

/// Scenario config file. Top-level keys override every scenario; entries under
/// "scenarios" keyed by id ("1".."4") override one scenario:
///
///   { "horizon": 50, "weights": {"iae": 1, "itae": 0.5},
///     "scenarios": { "2": { "reference_init": [1, -1], "uncertainty": {"mu": 0.2} } } }
struct ScenarioConfig {
    json raw = json::object();

    static ScenarioConfig parse(const json& j) {
        if (!j.is_object()) throw Error(ErrorCode::malformed_input, "scenario config must be a JSON object");
        return {j};
    }

    Scenario scenario(int id) const {
        return detail::guarded("scenario config", [&] {
            Scenario sc = build_scenario(id);
            detail::apply_overrides(sc, raw);
            if (raw.contains("scenarios")) {
                const json& per = raw.at("scenarios");
                const std::string key = std::to_string(id);
                if (per.contains(key)) detail::apply_overrides(sc, per.at(key));
            }
            sc.validate();
            return sc;
        });
    }

    CostWeights weights(CostWeights fallback = {}) const {
        return detail::guarded("scenario config", [&] {
            if (raw.contains("weights")) {
                const json& w = raw.at("weights");
                fallback.iae = w.value("iae", fallback.iae);
                fallback.itae = w.value("itae", fallback.itae);
            }
            return fallback;
        });
    }
};

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::malformed_input, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::malformed_input, path + ": " + e.what());
    }
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::invalid_argument, "cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace gearsync::io
