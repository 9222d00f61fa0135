#pragma once

#include <stdexcept>
#include <string>

namespace dualgen {

enum class ErrorCode {
    InvalidArgument,
    NonCommensurate,
    EmptyGrid,
    SingularBasis,
    DimensionMismatch,
    NonLatticeCone,
    SingularityUnhandled,
    PositivityViolation,
    Overflow,
    NotSeparable,
    StructureViolation,
    PSDViolation,
    TailConditionFail,
    MonotonicityFail,
    CompensatorDivergent,
    SignConditionFail,
    MissingDerivative,
    AssumptionAViolation,
    RateBoundExceeded,
    InadmissibleDual,
    NonConvergent,
    UnsupportedKernel,
    TooManyStates,
    SchemaError,
    ExpressionParseError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace dualgen
