#include "medeeg/error.hpp"

namespace medeeg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::EdgeAboveNyquist: return "EdgeAboveNyquist";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::DegenerateEpoch: return "DegenerateEpoch";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::LengthNotDivisible: return "LengthNotDivisible";
    case ErrorCode::NotDivisible: return "NotDivisible";
    case ErrorCode::KOutOfRange: return "KOutOfRange";
    case ErrorCode::UnknownEpoch: return "UnknownEpoch";
    case ErrorCode::TooFewEpochs: return "TooFewEpochs";
    case ErrorCode::TooFewSubjects: return "TooFewSubjects";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "Unknown";
}

}  // namespace medeeg
