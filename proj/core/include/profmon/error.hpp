#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace profmon {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  InsufficientSamples,
  SingularCovariance,
  EmptyInput,
  NonIntegerOrder,
  InfiniteArl,
  UnsupportedKind,
  Unattainable,
  InsufficientReps,
  RankDeficient,
  Parse,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so that
/// callers (notably the replication engine) can count failures by kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace profmon
