#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rwde {

enum class ErrorCode {
    // model
    EmptySide,
    OffsetOutOfRange,
    NegativeWeight,
    NonFiniteWeight,
    EndpointZero,
    GcdViolation,
    CapExceeded,
    ParseError,
    // graphs
    NonpositiveWeight,
    UnknownVertex,
    MTooSmall,
    WTooSmall,
    NonpositiveKappa1,
    NonzeroKappa1,
    // kappa
    EmptySet,
    BadTrapSet,
    DiameterTooSmall,
    DiameterTooLarge,
    // environment
    NonpositiveConcentration,
    IsolatedVertex,
    BadPartition,
    BadRow,
    // solver
    UnreachableBoundary,
    SingularSystem,
    NoExit,
    NotStronglyConnected,
    BadProblem,
    // walk
    StartOutsideWindow,
    DeadEnd,
    NotAPath,
    // stats
    DomainError,
    EmptySample,
    BadK,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::EmptySide: return "EmptySide";
    case ErrorCode::OffsetOutOfRange: return "OffsetOutOfRange";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::NonFiniteWeight: return "NonFiniteWeight";
    case ErrorCode::EndpointZero: return "EndpointZero";
    case ErrorCode::GcdViolation: return "GcdViolation";
    case ErrorCode::CapExceeded: return "CapExceeded";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonpositiveWeight: return "NonpositiveWeight";
    case ErrorCode::UnknownVertex: return "UnknownVertex";
    case ErrorCode::MTooSmall: return "MTooSmall";
    case ErrorCode::WTooSmall: return "WTooSmall";
    case ErrorCode::NonpositiveKappa1: return "NonpositiveKappa1";
    case ErrorCode::NonzeroKappa1: return "NonzeroKappa1";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::BadTrapSet: return "BadTrapSet";
    case ErrorCode::DiameterTooSmall: return "DiameterTooSmall";
    case ErrorCode::DiameterTooLarge: return "DiameterTooLarge";
    case ErrorCode::NonpositiveConcentration: return "NonpositiveConcentration";
    case ErrorCode::IsolatedVertex: return "IsolatedVertex";
    case ErrorCode::BadPartition: return "BadPartition";
    case ErrorCode::BadRow: return "BadRow";
    case ErrorCode::UnreachableBoundary: return "UnreachableBoundary";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NoExit: return "NoExit";
    case ErrorCode::NotStronglyConnected: return "NotStronglyConnected";
    case ErrorCode::BadProblem: return "BadProblem";
    case ErrorCode::StartOutsideWindow: return "StartOutsideWindow";
    case ErrorCode::DeadEnd: return "DeadEnd";
    case ErrorCode::NotAPath: return "NotAPath";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::BadK: return "BadK";
    }
    return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a stable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace rwde
