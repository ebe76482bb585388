#include "fuzconv/errors.hpp"

namespace fuzconv {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::SeriesTooShort: return "SeriesTooShort";
        case ErrorCode::NonFiniteInput: return "NonFiniteInput";
        case ErrorCode::NonMonotoneTimestamps: return "NonMonotoneTimestamps";
        case ErrorCode::WindowTooSmall: return "WindowTooSmall";
        case ErrorCode::WindowTooLarge: return "WindowTooLarge";
        case ErrorCode::DegenerateSeries: return "DegenerateSeries";
        case ErrorCode::OutOfUniverse: return "OutOfUniverse";
        case ErrorCode::EmptyWindow: return "EmptyWindow";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::InputTooShort: return "InputTooShort";
        case ErrorCode::GraphCycle: return "GraphCycle";
        case ErrorCode::UnrecordedTensor: return "UnrecordedTensor";
        case ErrorCode::FlankTooShort: return "FlankTooShort";
        case ErrorCode::SpatialUnderflow: return "SpatialUnderflow";
        case ErrorCode::NoTrainingPairs: return "NoTrainingPairs";
        case ErrorCode::DivergedLoss: return "DivergedLoss";
        case ErrorCode::NonFiniteGrad: return "NonFiniteGrad";
        case ErrorCode::HorizonZero: return "HorizonZero";
        case ErrorCode::CheckpointMismatch: return "CheckpointMismatch";
        case ErrorCode::LeakGuardTripped: return "LeakGuardTripped";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::BadArity: return "BadArity";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
    }
    return "UnknownError";
}

int error_exit_code(ErrorCode code) {
    switch (code) {
        // data errors: malformed or unusable inputs
        case ErrorCode::DegenerateSeries:
        case ErrorCode::NoTrainingPairs:
        case ErrorCode::ParseError:
        case ErrorCode::NonMonotoneTimestamps:
        case ErrorCode::IoError:
        case ErrorCode::OutOfUniverse:
            return 3;
        // numeric divergence
        case ErrorCode::DivergedLoss:
        case ErrorCode::NonFiniteGrad:
        case ErrorCode::NonFiniteInput:
            return 4;
        // everything else is a validation error
        default:
            return 2;
    }
}

} // namespace fuzconv
