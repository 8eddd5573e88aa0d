#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cnopt {

enum class ErrorCode {
    DimensionMismatch,
    OutOfDomain,
    LiftInfeasible,
    MissingHessian,
    NonExactNegativeScale,
    NotExact,
    MonotonicityRefuted,
    LineSearchFailed,
    NotPsd,
    GradeMismatch,
    NoLift,
    NotDecomposable,
    BlockIndexOutOfRange,
    InnerFailure,
    BadSpec,
    TooLarge,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace cnopt
