#pragma once

// Forced Duffing-type spur-gear plant and a fixed-step RK4 integrator.
//
//   x1' = x2
//   x2' = -2*eps*mu*x2 + 0.1667*(x1 - x1^3)
//         + eps*(f_m + f_e*Omega^2*cos(Omega*tau + phi)) + u
//
// All quantities are dimensionless. The control input u enters the velocity
// equation only and is zero-order-held across an integration step.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "gearsync/error.hpp"

namespace gearsync {

struct SpurGearParams {
    double epsilon = 0.01;
    double mu = 9.0;
    double f_m = 1.0;
    double f_e = 30.0;
    double omega_e = 0.5;
    double phi_e = 0.0;

    static constexpr SpurGearParams nominal() noexcept { return {}; }

    void validate() const {
        if (!(epsilon > 0.0) || !std::isfinite(epsilon))
            throw Error(ErrorCode::invalid_argument, "epsilon must be positive");
        if (!(omega_e > 0.0) || !std::isfinite(omega_e))
            throw Error(ErrorCode::invalid_argument, "omega_e must be positive");
        if (!std::isfinite(mu) || !std::isfinite(f_m) || !std::isfinite(f_e) || !std::isfinite(phi_e))
            throw Error(ErrorCode::invalid_argument, "gear parameters must be finite");
    }

    friend bool operator==(const SpurGearParams&, const SpurGearParams&) = default;
};

struct GearState {
    double x1 = 0.0;
    double x2 = 0.0;
    double tau = 0.0;

    bool finite() const noexcept { return std::isfinite(x1) && std::isfinite(x2) && std::isfinite(tau); }

    friend bool operator==(const GearState&, const GearState&) = default;
};

struct Derivative {
    double dx1 = 0.0;
    double dx2 = 0.0;
};

/// Stiffness coefficient of the cubic restoring term.
inline constexpr double kCubicStiffness = 0.1667;

/// Mean plus harmonic mesh excitation, eps*(f_m + f_e*Omega^2*cos(Omega*tau + phi)).
inline double gear_forcing(double tau, const SpurGearParams& p) noexcept {
    return p.epsilon * (p.f_m + p.f_e * p.omega_e * p.omega_e * std::cos(p.omega_e * tau + p.phi_e));
}

inline Derivative gear_rhs(const GearState& s, double u, const SpurGearParams& p) noexcept {
    const double restoring = kCubicStiffness * s.x1 - kCubicStiffness * s.x1 * s.x1 * s.x1;
    return {s.x2, -2.0 * p.epsilon * p.mu * s.x2 + restoring + gear_forcing(s.tau, p) + u};
}

namespace detail {

inline void require_finite(const GearState& s, double tau_start) {
    if (!std::isfinite(s.x1) || !std::isfinite(s.x2))
        throw NonFiniteStateError(tau_start, "state became non-finite at tau=" + std::to_string(tau_start));
}

}  // namespace detail

/// Classical four-stage Runge-Kutta step for any right-hand side
/// `rhs(const GearState&) -> Derivative`. Throws NonFiniteStateError if a
/// stage evaluates to NaN/Inf.
template <class Rhs>
GearState rk4_step(const GearState& s, double dt, Rhs&& rhs) {
    const double half = 0.5 * dt;

    const Derivative k1 = rhs(s);
    GearState probe{s.x1 + half * k1.dx1, s.x2 + half * k1.dx2, s.tau + half};
    detail::require_finite(probe, s.tau);

    const Derivative k2 = rhs(probe);
    probe = {s.x1 + half * k2.dx1, s.x2 + half * k2.dx2, s.tau + half};
    detail::require_finite(probe, s.tau);

    const Derivative k3 = rhs(probe);
    probe = {s.x1 + dt * k3.dx1, s.x2 + dt * k3.dx2, s.tau + dt};
    detail::require_finite(probe, s.tau);

    const Derivative k4 = rhs(probe);
    GearState next{s.x1 + dt / 6.0 * (k1.dx1 + 2.0 * k2.dx1 + 2.0 * k3.dx1 + k4.dx1),
                   s.x2 + dt / 6.0 * (k1.dx2 + 2.0 * k2.dx2 + 2.0 * k3.dx2 + k4.dx2), s.tau + dt};
    detail::require_finite(next, s.tau);
    return next;
}

inline GearState rk4_step(const GearState& s, double dt, double u, const SpurGearParams& p) {
    return rk4_step(s, dt, [&](const GearState& st) { return gear_rhs(st, u, p); });
}

struct Sample {
    double tau = 0.0;
    double x1 = 0.0;
    double x2 = 0.0;
    double u = 0.0;
};

struct Trajectory {
    double dt = 0.0;
    std::vector<Sample> samples;

    std::size_t size() const noexcept { return samples.size(); }
};

struct SimulationLimits {
    std::uint64_t max_steps = 10'000'000;
};

/// Number of uniform steps of size dt covering [0, t_end].
inline std::uint64_t step_count(double t_end, double dt, const SimulationLimits& limits = {}) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::invalid_argument, "dt must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw Error(ErrorCode::invalid_argument, "t_end must be positive");
    const double ratio = t_end / dt;
    if (ratio > static_cast<double>(limits.max_steps) + 0.5)
        throw Error(ErrorCode::step_budget_exceeded,
                    "t_end/dt = " + std::to_string(ratio) + " exceeds " + std::to_string(limits.max_steps));
    const auto n = static_cast<std::uint64_t>(std::llround(ratio));
    return n == 0 ? 1 : n;
}

/// Unforced (u = 0) trajectory from (x1, x2) at tau = 0. Sample k sits at
/// tau = k*dt; the result holds step_count(t_end, dt) + 1 samples.
inline Trajectory simulate_open_loop(double x1, double x2, double t_end, double dt, const SpurGearParams& p,
                                     const SimulationLimits& limits = {}) {
    p.validate();
    const std::uint64_t n = step_count(t_end, dt, limits);
    Trajectory traj{dt, {}};
    traj.samples.reserve(n + 1);
    GearState s{x1, x2, 0.0};
    detail::require_finite(s, 0.0);
    traj.samples.push_back({s.tau, s.x1, s.x2, 0.0});
    for (std::uint64_t k = 0; k < n; ++k) {
        s = rk4_step(s, dt, 0.0, p);
        s.tau = static_cast<double>(k + 1) * dt;
        traj.samples.push_back({s.tau, s.x1, s.x2, 0.0});
    }
    return traj;
}

/// Largest Euclidean distance in the (x1, x2) plane between matching samples.
inline double divergence_metric(const Trajectory& a, const Trajectory& b) {
    if (a.size() != b.size() || a.dt != b.dt)
        throw Error(ErrorCode::length_mismatch, "trajectories differ in length or step size");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::hypot(a.samples[i].x1 - b.samples[i].x1, a.samples[i].x2 - b.samples[i].x2);
        if (d > worst) worst = d;
    }
    return worst;
}

}  // namespace gearsync
