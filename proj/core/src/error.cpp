#include "profmon/error.hpp"

namespace profmon {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::InsufficientSamples: return "insufficient-samples";
    case ErrorCode::SingularCovariance: return "singular-covariance";
    case ErrorCode::EmptyInput: return "empty-input";
    case ErrorCode::NonIntegerOrder: return "non-integer-order";
    case ErrorCode::InfiniteArl: return "infinite-arl";
    case ErrorCode::UnsupportedKind: return "unsupported-kind";
    case ErrorCode::Unattainable: return "unattainable";
    case ErrorCode::InsufficientReps: return "insufficient-reps";
    case ErrorCode::RankDeficient: return "rank-deficient";
    case ErrorCode::Parse: return "parse-error";
    case ErrorCode::Io: return "io-error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace profmon
