#include "safercross/error.hpp"

namespace safercross {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::SnapFailure: return "SnapFailure";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::NoZones: return "NoZones";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::Untrained: return "Untrained";
    case ErrorCode::ZeroSpeed: return "ZeroSpeed";
    case ErrorCode::NoVehicles: return "NoVehicles";
    case ErrorCode::AlreadyOwner: return "AlreadyOwner";
    case ErrorCode::AlreadyMember: return "AlreadyMember";
    case ErrorCode::NoGroupFound: return "NoGroupFound";
    case ErrorCode::NoSamples: return "NoSamples";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::RuntimeError: return "RuntimeError";
  }
  return "Unknown";
}

}  // namespace safercross
