#include "gridfreq/error.hpp"

namespace gridfreq {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
        case ErrorCode::NonpositiveParameter: return "NonpositiveParameter";
        case ErrorCode::BadThermalLimits: return "BadThermalLimits";
        case ErrorCode::DuplicateLine: return "DuplicateLine";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::ZeroCurvature: return "ZeroCurvature";
        case ErrorCode::NonFiniteState: return "NonFiniteState";
        case ErrorCode::BadEquilibrium: return "BadEquilibrium";
        case ErrorCode::EmptyTrajectory: return "EmptyTrajectory";
        case ErrorCode::NotConverged: return "NotConverged";
        case ErrorCode::UnsortedEvents: return "UnsortedEvents";
        case ErrorCode::EmptyBusSet: return "EmptyBusSet";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::NotTwoBus: return "NotTwoBus";
        case ErrorCode::BindingLimit: return "BindingLimit";
        case ErrorCode::TooLarge: return "TooLarge";
        case ErrorCode::Infeasible: return "Infeasible";
    }
    return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonFiniteState:
            return ErrorCategory::Numeric;
        case ErrorCode::BadEquilibrium:
        case ErrorCode::NotConverged:
        case ErrorCode::EmptyTrajectory:
            return ErrorCategory::Verification;
        default:
            return ErrorCategory::Validation;
    }
}

void require_size(std::size_t actual, std::size_t expected, std::string_view what) {
    if (actual != expected) {
        throw Error(ErrorCode::DimensionMismatch,
                    std::string(what) + " has length " + std::to_string(actual) + ", expected " +
                        std::to_string(expected));
    }
}

}  // namespace gridfreq
