#pragma once

#include <stdexcept>
#include <string>

namespace bivol {

// Error categories, used by the CLI to map failures onto exit codes
// (usage=2, data/schema=3, numerical=4).
enum class ErrorCode {
    EmptySession,
    DegenerateWindow,
    InvalidCalibration,
    DegenerateData,
    UnknownFeatureSet,
    DimensionMismatch,
    TooFewSamples,
    TooFewPairs,
    NoConvergence,
    DivergedLoss,
    NumericalDegenerate,
    OutOfOrderWindow,
    OverlappingSpans,
    InvalidSpan,
    InvalidArgument,
    SchemaError,
    IoFailure,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::EmptySession: return "EmptySession";
        case ErrorCode::DegenerateWindow: return "DegenerateWindow";
        case ErrorCode::InvalidCalibration: return "InvalidCalibration";
        case ErrorCode::DegenerateData: return "DegenerateData";
        case ErrorCode::UnknownFeatureSet: return "UnknownFeatureSet";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::TooFewPairs: return "TooFewPairs";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::DivergedLoss: return "DivergedLoss";
        case ErrorCode::NumericalDegenerate: return "NumericalDegenerate";
        case ErrorCode::OutOfOrderWindow: return "OutOfOrderWindow";
        case ErrorCode::OverlappingSpans: return "OverlappingSpans";
        case ErrorCode::InvalidSpan: return "InvalidSpan";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

}  // namespace bivol
