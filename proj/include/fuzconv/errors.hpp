#ifndef FUZCONV_ERRORS_HPP
#define FUZCONV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fuzconv {

enum class ErrorCode {
    // series
    SeriesTooShort,
    NonFiniteInput,
    NonMonotoneTimestamps,
    // windowing
    WindowTooSmall,
    WindowTooLarge,
    // fuzzifier
    DegenerateSeries,
    OutOfUniverse,
    EmptyWindow,
    // tensor engine
    ShapeMismatch,
    InputTooShort,
    GraphCycle,
    UnrecordedTensor,
    // baa / pac
    FlankTooShort,
    SpatialUnderflow,
    // trainer
    NoTrainingPairs,
    DivergedLoss,
    NonFiniteGrad,
    HorizonZero,
    CheckpointMismatch,
    LeakGuardTripped,
    // data io
    ParseError,
    IoError,
    // evaluator
    LengthMismatch,
    EmptyInput,
    BadArity,
    // config / cli
    InvalidConfig,
};

const char* error_code_name(ErrorCode code);

/// Process exit category used by the CLI: 2 validation, 3 data, 4 numeric.
int error_exit_code(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + msg),
          code_(code) {}

    ErrorCode code() const { return code_; }
    int exit_code() const { return error_exit_code(code_); }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) {
    throw Error(code, msg);
}

} // namespace fuzconv

#endif
