#pragma once

#include <cmath>

#include "gearsync/error.hpp"

namespace gearsync {

inline constexpr double kGainMin = 0.0;
inline constexpr double kGainMax = 10.0;

struct PidGains {
    double kp = 0.0;
    double ki = 0.0;
    double kd = 0.0;

    void validate() const {
        for (double g : {kp, ki, kd})
            if (!(g >= kGainMin && g <= kGainMax))
                throw Error(ErrorCode::invalid_argument, "PID gains must lie in [0, 10]");
    }

    friend bool operator==(const PidGains&, const PidGains&) = default;
};

}  // namespace gearsync
