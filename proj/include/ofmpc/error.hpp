#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ofmpc {

enum class ErrorCode {
    DimensionMismatch,
    SingularMatrix,
    NoConvergence,
    SingularTarget,
    SingularClosedLoop,
    PreconditionViolated,
    Infeasible,
    MaxIterations,
    NonPhysicalState,
    UnknownEvent,
    InsufficientData,
    CrossCheckFailed,
    SteadyNotReached,
    ConfigParse,
    ParseError,
    Io,
};

[[nodiscard]] std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace ofmpc
