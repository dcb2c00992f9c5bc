#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace npc {

enum class ErrorCode {
    // core
    EmptyClass,
    ValueOutsideDomain,
    DomainMismatch,
    TooFewClasses,
    NonInjectiveMap,
    InstanceTooLarge,
    UncoveredLevel,
    InvalidDomain,
    PathDisagreement,
    // image io
    UnsupportedFormat,
    AmbiguousChannels,
    DimensionMismatch,
    EmptyClassInMask,
    ManifestError,
    IoError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::ValueOutsideDomain: return "ValueOutsideDomain";
    case ErrorCode::DomainMismatch: return "DomainMismatch";
    case ErrorCode::TooFewClasses: return "TooFewClasses";
    case ErrorCode::NonInjectiveMap: return "NonInjectiveMap";
    case ErrorCode::InstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::UncoveredLevel: return "UncoveredLevel";
    case ErrorCode::InvalidDomain: return "InvalidDomain";
    case ErrorCode::PathDisagreement: return "PathDisagreement";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::AmbiguousChannels: return "AmbiguousChannels";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyClassInMask: return "EmptyClassInMask";
    case ErrorCode::ManifestError: return "ManifestError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// True for errors caused by malformed or unreadable input files, as opposed
/// to inputs that decode fine but cannot be evaluated.
constexpr bool is_input_error(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::AmbiguousChannels:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::EmptyClassInMask:
    case ErrorCode::ManifestError:
    case ErrorCode::IoError:
        return true;
    default:
        return false;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace npc
