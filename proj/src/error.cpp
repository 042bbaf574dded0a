#include "regtrack/error.hpp"

namespace regtrack {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::PointBehindCamera: return "PointBehindCamera";
    case ErrorCode::DegenerateMesh: return "DegenerateMesh";
    case ErrorCode::MeshFormat: return "MeshFormat";
    case ErrorCode::InvalidFrustum: return "InvalidFrustum";
    case ErrorCode::NotVisible: return "NotVisible";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::BorderPixel: return "BorderPixel";
    case ErrorCode::NoVisibleCenters: return "NoVisibleCenters";
    case ErrorCode::Uninitialized: return "Uninitialized";
    case ErrorCode::NotCovered: return "NotCovered";
    case ErrorCode::DegenerateDepth: return "DegenerateDepth";
    case ErrorCode::EmptyAccumulation: return "EmptyAccumulation";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::TrackingDiverged: return "TrackingDiverged";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::SequenceFormat: return "SequenceFormat";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace regtrack
