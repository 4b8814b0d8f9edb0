#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace safercross {

enum class ErrorCode {
  InvalidArgument,
  Unreachable,
  SnapFailure,
  EmptyWindow,
  NoCandidates,
  InsufficientSamples,
  NoZones,
  LengthMismatch,
  Empty,
  Untrained,
  ZeroSpeed,
  NoVehicles,
  AlreadyOwner,
  AlreadyMember,
  NoGroupFound,
  NoSamples,
  ParseError,
  ValidationError,
  RuntimeError,
};

std::string_view to_string(ErrorCode code);

// Every library failure is reported through this type; `code()` lets callers
// branch on the failure class without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix, for re-wrapping with more context.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace safercross
