#include "synthint/error.hpp"

namespace synthint {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NeverReachedThreshold: return "NeverReachedThreshold";
        case ErrorCode::InsufficientPreHistory: return "InsufficientPreHistory";
        case ErrorCode::MissingPreData: return "MissingPreData";
        case ErrorCode::EmptyPanelAfterAlignment: return "EmptyPanelAfterAlignment";
        case ErrorCode::NoMobilityData: return "NoMobilityData";
        case ErrorCode::NonFiniteInput: return "NonFiniteInput";
        case ErrorCode::AllZeroSpectrum: return "AllZeroSpectrum";
        case ErrorCode::EmptyDonorGroup: return "EmptyDonorGroup";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NoObservedPostData: return "NoObservedPostData";
        case ErrorCode::InsufficientPositivePoints: return "InsufficientPositivePoints";
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::UnparseableRow: return "UnparseableRow";
        case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
        case ErrorCode::HashMismatch: return "HashMismatch";
        case ErrorCode::FileNotFound: return "FileNotFound";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::NoSuccessfulPairs: return "NoSuccessfulPairs";
        case ErrorCode::RunTimeout: return "RunTimeout";
    }
    return "Unknown";
}

}  // namespace synthint
