#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace levygraph {

/// Machine-readable failure categories. The CLI prints the category name on
/// the diagnostic stream, so the spelling here is part of the interface.
enum class ErrorCategory {
    InvalidModel,
    MissingJumpMoments,
    NegativeActivity,
    OddTopDegree,
    NonPositiveTopTensor,
    CapExceeded,
    MalformedPartition,
    SymbolOrderMissing,
    DimensionMismatch,
    NonDiagonalQuadratic,
    AnisotropicDiffusion,
    SingularSystem,
    PoleOnPath,
    ZeroDenominatorH1,
    NonFiniteDensity,
    ToleranceNotReached,
    EmptySample,
    InvalidArgument,
    Io,
};

constexpr std::string_view category_name(ErrorCategory c) noexcept {
    switch (c) {
    case ErrorCategory::InvalidModel: return "InvalidModel";
    case ErrorCategory::MissingJumpMoments: return "MissingJumpMoments";
    case ErrorCategory::NegativeActivity: return "NegativeActivity";
    case ErrorCategory::OddTopDegree: return "OddTopDegree";
    case ErrorCategory::NonPositiveTopTensor: return "NonPositiveTopTensor";
    case ErrorCategory::CapExceeded: return "CapExceeded";
    case ErrorCategory::MalformedPartition: return "MalformedPartition";
    case ErrorCategory::SymbolOrderMissing: return "SymbolOrderMissing";
    case ErrorCategory::DimensionMismatch: return "DimensionMismatch";
    case ErrorCategory::NonDiagonalQuadratic: return "NonDiagonalQuadratic";
    case ErrorCategory::AnisotropicDiffusion: return "AnisotropicDiffusion";
    case ErrorCategory::SingularSystem: return "SingularSystem";
    case ErrorCategory::PoleOnPath: return "PoleOnPath";
    case ErrorCategory::ZeroDenominatorH1: return "ZeroDenominatorH1";
    case ErrorCategory::NonFiniteDensity: return "NonFiniteDensity";
    case ErrorCategory::ToleranceNotReached: return "ToleranceNotReached";
    case ErrorCategory::EmptySample: return "EmptySample";
    case ErrorCategory::InvalidArgument: return "InvalidArgument";
    case ErrorCategory::Io: return "Io";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& what) {
    throw Error(c, std::string(category_name(c)) + ": " + what);
}

} // namespace levygraph
