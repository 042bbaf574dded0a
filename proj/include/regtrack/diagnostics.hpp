#pragma once

#include <cstdint>
#include <vector>

#include "regtrack/mesh.hpp"

namespace regtrack {

struct JacobianCheckOptions {
  int width = 64;
  int height = 64;
  int scenes = 1;
  std::uint64_t seed = 0;
  double heaviside_pitch = 1.2;
  double step = 1e-6;
  int band = 8;
  bool flip_sign = false;  // fault injection for the self-test
};

struct JacobianCheckResult {
  std::size_t pixels = 0;
  double max_relative = 0.0;
  double median_relative = 0.0;
  double p99_relative = 0.0;
  std::vector<double> relative_errors;  // sorted ascending
};

/// Compares analytic pixel Jacobians with central differences of the residual on
/// random scenes of `mesh` (random posteriors, random pose). The level set is
/// moved rigidly with the projected surface point, matching the model the
/// analytic derivative assumes. Pixels whose finite-difference Jacobian is
/// negligible are skipped.
JacobianCheckResult check_jacobian(const TriangleMesh& mesh, const JacobianCheckOptions& options);

}  // namespace regtrack
