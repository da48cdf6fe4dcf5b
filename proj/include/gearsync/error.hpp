#pragma once

#include <stdexcept>
#include <string>

namespace gearsync {

enum class ErrorCode {
    invalid_argument,
    non_finite_state,
    step_budget_exceeded,
    length_mismatch,
    empty_sequence,
    invalid_bounds,
    unknown_scenario,
    malformed_input,
};

inline const char* to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::non_finite_state: return "NonFiniteState";
    case ErrorCode::step_budget_exceeded: return "StepBudgetExceeded";
    case ErrorCode::length_mismatch: return "LengthMismatch";
    case ErrorCode::empty_sequence: return "EmptySequence";
    case ErrorCode::invalid_bounds: return "InvalidBounds";
    case ErrorCode::unknown_scenario: return "UnknownScenario";
    case ErrorCode::malformed_input: return "MalformedInput";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised when an integration stage produces NaN/Inf. Carries the
/// dimensionless time at which the state stopped being finite.
class NonFiniteStateError : public Error {
public:
    NonFiniteStateError(double tau, const std::string& what)
        : Error(ErrorCode::non_finite_state, what), tau_(tau) {}

    double tau() const noexcept { return tau_; }

private:
    double tau_;
};

}  // namespace gearsync
