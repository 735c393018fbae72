#include "gripwatch/error.hpp"

namespace gripwatch {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::BadWindowLength: return "BadWindowLength";
    case ErrorCode::OutOfOrderTimestamp: return "OutOfOrderTimestamp";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::SingleClassDataset: return "SingleClassDataset";
    case ErrorCode::NonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::WrongModelKind: return "WrongModelKind";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace gripwatch
