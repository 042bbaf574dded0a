#pragma once

#include <stdexcept>
#include <string>

namespace regtrack {

enum class ErrorCode {
  PointBehindCamera,
  DegenerateMesh,
  MeshFormat,
  InvalidFrustum,
  NotVisible,
  EmptyRegion,
  BorderPixel,
  NoVisibleCenters,
  Uninitialized,
  NotCovered,
  DegenerateDepth,
  EmptyAccumulation,
  SingularSystem,
  TrackingDiverged,
  DimensionMismatch,
  EmptyMesh,
  SequenceFormat,
  InvalidArgument,
  Io,
};

const char* to_string(ErrorCode code);

/// Exception carrying a machine-checkable error kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace regtrack
