#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace magic_markup {

/// Every failure the library reports is an Error carrying one of these codes.
enum class ErrorCode {
    InvalidUtf8,
    IncompatiblePoint,
    InvertedRange,
    SchemaError,
    StaleSidecar,
    AnchorMismatch,
    ValidationError,
    IoError,
    SpanOutOfRange,
    EmptyNeedle,
    OccurrenceOutOfRange,
    TransportError,
    AuthError,
    JsonModeViolation,
    ReplayMiss,
    NoDelimiterAvailable,
    DelimiterCollision,
    InvalidSegment,
    DelimiterCountError,
    MalformedAnswer,
    NoMatch,
    GenerationError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidUtf8:          return "InvalidUtf8";
        case ErrorCode::IncompatiblePoint:    return "IncompatiblePoint";
        case ErrorCode::InvertedRange:        return "InvertedRange";
        case ErrorCode::SchemaError:          return "SchemaError";
        case ErrorCode::StaleSidecar:         return "StaleSidecar";
        case ErrorCode::AnchorMismatch:       return "AnchorMismatch";
        case ErrorCode::ValidationError:      return "ValidationError";
        case ErrorCode::IoError:              return "IoError";
        case ErrorCode::SpanOutOfRange:       return "SpanOutOfRange";
        case ErrorCode::EmptyNeedle:          return "EmptyNeedle";
        case ErrorCode::OccurrenceOutOfRange: return "OccurrenceOutOfRange";
        case ErrorCode::TransportError:       return "TransportError";
        case ErrorCode::AuthError:            return "AuthError";
        case ErrorCode::JsonModeViolation:    return "JsonModeViolation";
        case ErrorCode::ReplayMiss:           return "ReplayMiss";
        case ErrorCode::NoDelimiterAvailable: return "NoDelimiterAvailable";
        case ErrorCode::DelimiterCollision:   return "DelimiterCollision";
        case ErrorCode::InvalidSegment:       return "InvalidSegment";
        case ErrorCode::DelimiterCountError:  return "DelimiterCountError";
        case ErrorCode::MalformedAnswer:      return "MalformedAnswer";
        case ErrorCode::NoMatch:              return "NoMatch";
        case ErrorCode::GenerationError:      return "GenerationError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace magic_markup
