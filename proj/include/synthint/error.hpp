#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace synthint {

enum class ErrorCode {
    InvalidArgument,
    NeverReachedThreshold,
    InsufficientPreHistory,
    MissingPreData,
    EmptyPanelAfterAlignment,
    NoMobilityData,
    NonFiniteInput,
    AllZeroSpectrum,
    EmptyDonorGroup,
    DimensionMismatch,
    NoObservedPostData,
    InsufficientPositivePoints,
    MalformedHeader,
    UnparseableRow,
    SchemaVersionMismatch,
    HashMismatch,
    FileNotFound,
    InvalidConfig,
    NoSuccessfulPairs,
    RunTimeout,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a machine-readable code so that
/// batch stages can record it and keep going.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace synthint
