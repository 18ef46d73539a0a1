#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace medeeg {

enum class ErrorCode {
  TooShort,
  EdgeAboveNyquist,
  InvalidArgument,
  NotSymmetric,
  NoConvergence,
  NotPositiveDefinite,
  EmptyClass,
  DegenerateEpoch,
  RankDeficient,
  SingleClass,
  DimensionMismatch,
  NonFiniteLoss,
  LengthNotDivisible,
  NotDivisible,
  KOutOfRange,
  UnknownEpoch,
  TooFewEpochs,
  TooFewSubjects,
  InvalidParams,
  IoError,
  FormatError,
};

std::string_view to_string(ErrorCode code);

// Every failure in the library surfaces as this exception; callers switch on
// code() when they need to distinguish validation errors from runtime ones.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace medeeg
