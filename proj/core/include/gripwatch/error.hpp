#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gripwatch {

enum class ErrorCode {
  LengthMismatch,
  NonFiniteInput,
  BadWindowLength,
  OutOfOrderTimestamp,
  InvalidConfig,
  ParseError,
  InvariantViolation,
  VersionMismatch,
  SingleClassDataset,
  NonFiniteFeature,
  EmptyDataset,
  WrongModelKind,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so the
// CLI can report it in a machine-parsable form.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gripwatch
