#pragma once

// Discrete-time PID and fuzzy-scheduled PID laws. Both run once per
// integration step with a backward-difference error derivative and a
// rectangle-rule integral; the integral accumulator is clamped to
// [-integral_limit, integral_limit].

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "gearsync/error.hpp"
#include "gearsync/gains.hpp"
#include "gearsync/it2_fis.hpp"

namespace gearsync {

struct ControllerState {
    double integral_acc = 0.0;
    double prev_error = 0.0;
    bool initialized = false;
};

struct ControlLimits {
    double integral_limit = 50.0;
    /// Saturation of u itself; disabled when empty.
    std::optional<double> output_limit;
};

/// Backward difference (e - prev)/dt; zero until a previous error exists.
/// Does not modify the state.
inline double error_derivative(double e, const ControllerState& state, double dt) noexcept {
    return state.initialized ? (e - state.prev_error) / dt : 0.0;
}

namespace detail {

inline double finish_step(double e, double proportional_term, double derivative_term, ControllerState& state,
                          const ControlLimits& limits) noexcept {
    state.prev_error = e;
    state.initialized = true;
    double u = proportional_term + state.integral_acc + derivative_term;
    if (limits.output_limit) u = std::clamp(u, -*limits.output_limit, *limits.output_limit);
    return u;
}

inline void accumulate(ControllerState& state, double ki, double e, double dt, const ControlLimits& limits) noexcept {
    state.integral_acc =
        std::clamp(state.integral_acc + ki * e * dt, -limits.integral_limit, limits.integral_limit);
}

}  // namespace detail

inline double pid_step(double e, ControllerState& state, const PidGains& gains, double dt,
                       const ControlLimits& limits = {}) noexcept {
    const double de = error_derivative(e, state, dt);
    detail::accumulate(state, gains.ki, e, dt, limits);
    return detail::finish_step(e, gains.kp * e, gains.kd * de, state, limits);
}

struct FpidOutput {
    double u = 0.0;
    PidGains scheduled;
};

/// u = Kp(e,de)*e + sum(Ki(e,de)*e*dt) + Kd(e,de)*de, with the gains
/// re-scheduled by the fuzzy engine every call.
inline FpidOutput fpid_step(double e, ControllerState& state, const IT2FisConfig& cfg, double dt,
                            const ControlLimits& limits = {}) noexcept {
    const double de = error_derivative(e, state, dt);
    const PidGains g = evaluate_gains(e, de, cfg);
    detail::accumulate(state, g.ki, e, dt, limits);
    const double u = detail::finish_step(e, g.kp * e, g.kd * de, state, limits);
    return {u, g};
}

enum class ControllerKind { pid, fpid_t1, fpid_t2 };

inline std::string_view to_string(ControllerKind kind) noexcept {
    switch (kind) {
    case ControllerKind::pid: return "pid";
    case ControllerKind::fpid_t1: return "fpid1";
    case ControllerKind::fpid_t2: return "fpid2";
    }
    return "pid";
}

inline std::string_view display_name(ControllerKind kind) noexcept {
    switch (kind) {
    case ControllerKind::pid: return "PID";
    case ControllerKind::fpid_t1: return "FPID type-I";
    case ControllerKind::fpid_t2: return "FPID type-II";
    }
    return "PID";
}

inline ControllerKind parse_controller_kind(std::string_view name) {
    if (name == "pid") return ControllerKind::pid;
    if (name == "fpid1" || name == "fpid_t1") return ControllerKind::fpid_t1;
    if (name == "fpid2" || name == "fpid_t2") return ControllerKind::fpid_t2;
    throw Error(ErrorCode::invalid_argument, "unknown controller kind '" + std::string(name) + "'");
}

inline constexpr double kType1Weight = 0.5;

struct Type1Fpid {
    IT2FisConfig fis;
};

struct Type2Fpid {
    IT2FisConfig fis;
};

class ControllerSpec {
public:
    using Variant = std::variant<PidGains, Type1Fpid, Type2Fpid>;

    static ControllerSpec pid(PidGains gains) {
        gains.validate();
        return ControllerSpec(Variant{gains});
    }

    /// m has no effect once both bands coincide; it is pinned to kType1Weight.
    static ControllerSpec fpid_t1(IT2FisConfig cfg) {
        cfg.m = kType1Weight;
        cfg.validate();
        if (!cfg.is_type1())
            throw Error(ErrorCode::invalid_argument, "type-I FPID requires sigma_lower == sigma_upper for every MF");
        return ControllerSpec(Variant{Type1Fpid{cfg}});
    }

    static ControllerSpec fpid_t2(IT2FisConfig cfg) {
        cfg.validate();
        return ControllerSpec(Variant{Type2Fpid{cfg}});
    }

    ControllerKind kind() const noexcept { return static_cast<ControllerKind>(value_.index()); }
    const Variant& value() const noexcept { return value_; }

    const IT2FisConfig* fis() const noexcept {
        if (const auto* t1 = std::get_if<Type1Fpid>(&value_)) return &t1->fis;
        if (const auto* t2 = std::get_if<Type2Fpid>(&value_)) return &t2->fis;
        return nullptr;
    }

private:
    explicit ControllerSpec(Variant v) : value_(std::move(v)) {}

    Variant value_;
};

/// One control run: a spec plus its private state.
class Controller {
public:
    explicit Controller(ControllerSpec spec, ControlLimits limits = {}) : spec_(std::move(spec)), limits_(limits) {}

    FpidOutput step(double e, double dt) {
        if (const auto* g = std::get_if<PidGains>(&spec_.value())) return {pid_step(e, state_, *g, dt, limits_), *g};
        return fpid_step(e, state_, *spec_.fis(), dt, limits_);
    }

    const ControllerState& state() const noexcept { return state_; }
    const ControllerSpec& spec() const noexcept { return spec_; }
    void reset() noexcept { state_ = {}; }

private:
    ControllerSpec spec_;
    ControlLimits limits_;
    ControllerState state_;
};

}  // namespace gearsync
