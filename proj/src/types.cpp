#include "anisopf/types.hpp"

namespace anisopf {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ZeroDirection: return "ZeroDirection";
    case ErrorKind::InvalidDelta: return "InvalidDelta";
    case ErrorKind::NotRotation: return "NotRotation";
    case ErrorKind::InvalidAnisotropy: return "InvalidAnisotropy";
    case ErrorKind::UnknownPreset: return "UnknownPreset";
    case ErrorKind::NotApplicable: return "NotApplicable";
    case ErrorKind::InvalidN: return "InvalidN";
    case ErrorKind::RefinementDepthExceeded: return "RefinementDepthExceeded";
    case ErrorKind::MeshMismatch: return "MeshMismatch";
    case ErrorKind::MeshChanged: return "MeshChanged";
    case ErrorKind::InterfaceTooWide: return "InterfaceTooWide";
    case ErrorKind::InconsistentDimensions: return "InconsistentDimensions";
    case ErrorKind::ZeroDiagonal: return "ZeroDiagonal";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::NewtonDivergence: return "NewtonDivergence";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::StabilityViolation: return "StabilityViolation";
  }
  return "Unknown";
}

}  // namespace anisopf
