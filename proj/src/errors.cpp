#include "cnopt/errors.hpp"

namespace cnopt {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::LiftInfeasible: return "LiftInfeasible";
    case ErrorCode::MissingHessian: return "MissingHessian";
    case ErrorCode::NonExactNegativeScale: return "NonExactNegativeScale";
    case ErrorCode::NotExact: return "NotExact";
    case ErrorCode::MonotonicityRefuted: return "MonotonicityRefuted";
    case ErrorCode::LineSearchFailed: return "LineSearchFailed";
    case ErrorCode::NotPsd: return "NotPsd";
    case ErrorCode::GradeMismatch: return "GradeMismatch";
    case ErrorCode::NoLift: return "NoLift";
    case ErrorCode::NotDecomposable: return "NotDecomposable";
    case ErrorCode::BlockIndexOutOfRange: return "BlockIndexOutOfRange";
    case ErrorCode::InnerFailure: return "InnerFailure";
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::TooLarge: return "TooLarge";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{
}

}  // namespace cnopt
