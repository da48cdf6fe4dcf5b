#pragma once

// Left-endpoint rectangle-rule error integrals. Sample k sits at t_k = k*dt.

#include <cmath>
#include <limits>
#include <span>

#include "gearsync/error.hpp"

namespace gearsync {

struct IndexReport {
    double iae = 0.0;
    double itae = 0.0;
    double horizon = 0.0;
    double dt = 0.0;
};

namespace detail {

inline void check_series(std::span<const double> errors, double dt) {
    if (errors.empty()) throw Error(ErrorCode::empty_sequence, "error series is empty");
    if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "dt must be positive");
}

}  // namespace detail

inline double iae(std::span<const double> errors, double dt) {
    detail::check_series(errors, dt);
    double sum = 0.0;
    for (double e : errors) sum += std::abs(e);
    return sum * dt;
}

inline double itae(std::span<const double> errors, double dt) {
    detail::check_series(errors, dt);
    double sum = 0.0;
    for (std::size_t k = 0; k < errors.size(); ++k) sum += static_cast<double>(k) * dt * std::abs(errors[k]);
    return sum * dt;
}

inline IndexReport index_report(std::span<const double> errors, double dt) {
    return {iae(errors, dt), itae(errors, dt), static_cast<double>(errors.size()) * dt, dt};
}

struct CostWeights {
    double iae = 1.0;
    double itae = 1.0;

    void validate() const {
        if (!(iae >= 0.0) || !(itae >= 0.0) || (iae == 0.0 && itae == 0.0))
            throw Error(ErrorCode::invalid_argument, "cost weights must be nonnegative and not both zero");
    }
};

inline double cost(const IndexReport& report, const CostWeights& w = {}) noexcept {
    const double c = w.iae * report.iae + w.itae * report.itae;
    return std::isfinite(c) ? c : std::numeric_limits<double>::infinity();
}

/// Cost sentinel for a run that aborted or diverged.
inline constexpr double kUnstableCost = std::numeric_limits<double>::infinity();

}  // namespace gearsync
