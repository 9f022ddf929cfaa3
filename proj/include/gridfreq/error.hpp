#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gridfreq {

enum class ErrorCode {
    DisconnectedGraph,
    NonpositiveParameter,
    BadThermalLimits,
    DuplicateLine,
    DimensionMismatch,
    ZeroCurvature,
    NonFiniteState,
    BadEquilibrium,
    EmptyTrajectory,
    NotConverged,
    UnsortedEvents,
    EmptyBusSet,
    SchemaError,
    ValidationError,
    NotTwoBus,
    BindingLimit,
    TooLarge,
    Infeasible,
};

std::string_view to_string(ErrorCode code);

/// Numeric blow-ups map to a different exit code than bad input.
enum class ErrorCategory { Validation, Numeric, Verification };

ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    ErrorCategory category() const noexcept { return category_of(code_); }

private:
    ErrorCode code_;
};

// Throws DimensionMismatch when sizes differ.
void require_size(std::size_t actual, std::size_t expected, std::string_view what);

}  // namespace gridfreq
