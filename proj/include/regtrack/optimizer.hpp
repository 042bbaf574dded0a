#pragma once

#include <span>
#include <string>
#include <vector>

#include "regtrack/geometry.hpp"
#include "regtrack/image.hpp"
#include "regtrack/level_set.hpp"
#include "regtrack/mesh.hpp"
#include "regtrack/rasterizer.hpp"
#include "regtrack/segmentation.hpp"

namespace regtrack {

struct OptimizationSettings {
  double heaviside_pitch = 1.2;
  int band = 8;  // px, at every pyramid level
  /// Iterations per pyramid level, coarsest level first. Three entries mean levels
  /// 3, 2, 1 (quarter, half and full resolution).
  std::vector<int> pyramid_iterations{4, 2, 1};
  /// Minimum ROI area (px) for a 640x512 image; scaled by the pixel count of the
  /// actual image.
  double min_roi_area = 3000.0;
  Frustum frustum;
  bool occlusion_handling = true;
  bool backside_terms = true;
  /// Subtracted from the distance values before use, so the zero level lies on
  /// the pixel edge between contour pixels and their outside neighbours.
  double contour_offset = 0.5;
  /// Rescale the averaged memberships of every pixel to pf + pb = 1.
  bool normalize_posteriors = true;
  /// Levenberg damping = damping_factor * trace(H) / 6.
  double damping_factor = 1e-7;
  /// A level whose mean residual grows by more than this factor counts as diverged.
  double divergence_ratio = 10.0;

  void validate() const;
  int levels() const { return static_cast<int>(pyramid_iterations.size()); }
  double min_roi_area_for(const CameraIntrinsics& full_resolution) const;
};

/// Sums of psi * J^T J and J^T over the admissible pixels.
struct NormalEquations {
  Mat6 hessian_approx = Mat6::Zero();
  Vec6 gradient = Vec6::Zero();
  long pixel_count = 0;

  /// Adds one term; only the upper triangle is written until mirror() is called.
  void add(const Row6& jacobian, double psi);
  void merge(const NormalEquations& other);
  void mirror();
};

struct PixelResidual {
  Pixel x;
  double residual = 0.0;  // F
  double psi = 0.0;       // 1 / F
  Row6 jacobian = Row6::Zero();
};

/// Posteriors of one banded pixel, ready for accumulation.
struct BandPixel {
  Pixel x;
  double pf = 0.0;
  double pb = 0.0;
};

/// F = -log(H_e(phi) * pf + (1 - H_e(phi)) * pb), argument clamped to [1e-12, 1 - 1e-12].
double residual(double pf, double pb, double phi, double s);

/// psi = 1 / F, with F bounded away from zero.
double residual_weight(double f);

/// dF/dxi at a fixed pixel, twist order [omega, nu], left-multiplied perturbation
/// exp(xi) * T. The level set moves rigidly with the projection of `surface_point`
/// (camera frame), so dphi/dxi = -grad(phi) * d(pi(K X'))/dxi. DegenerateDepth when
/// Z' <= 1e-9; BorderPixel from the gradient.
Row6 pixel_jacobian(Pixel x, const SignedDistanceField& field, double pf, double pb,
                    const Vec3& surface_point, const CameraIntrinsics& k, double s);

/// False when the distance value at `x` was shaped by another object in front of
/// `object`: outside pixels covered by a nearer foreign object, and inside pixels
/// whose closest contour pixel borders such a pixel.
bool pixel_admissible(Pixel x, int object, const SilhouetteMask& mask, const DepthMap& depth,
                      const SignedDistanceField& field, const Frustum& frustum);

struct AccumulationStats {
  double residual_sum = 0.0;
  long residual_count = 0;
  double mean_residual() const { return residual_count ? residual_sum / residual_count : 0.0; }
};

/// Front-surface (and, with `reverse`, back-surface) Jacobian terms for every
/// pixel. Inside pixels read both depth maps at themselves, outside pixels at
/// their closest contour pixel. EmptyAccumulation when nothing was added.
NormalEquations accumulate(std::span<const BandPixel> pixels, const SignedDistanceField& field,
                           const DepthMap& depth, const ReverseDepthMap* reverse,
                           const CameraIntrinsics& k, const Frustum& frustum, double s,
                           AccumulationStats* stats = nullptr);

/// Solves (H + damping I) dxi = -g by Cholesky. SingularSystem when that fails.
Twist solve_step(const NormalEquations& n, double damping);

struct OptimizerObject {
  const MeshPair* meshes = nullptr;
  const TclcModel* model = nullptr;  // histograms and regions frozen for the frame
  RigidTransform pose;
};

enum class OptimizationStatus { Ok, Diverged, NotVisible };

struct OptimizationResult {
  RigidTransform pose;
  OptimizationStatus status = OptimizationStatus::Ok;
  std::string message;
  int updates = 0;
  double final_mean_residual = 0.0;
};

/// Coarse-to-fine pose refinement of all objects on one frame. Each iteration
/// renders the common mask and depth once, then updates the poses one after
/// another in object order. A failing object is reported, not thrown, and stops
/// taking part in later renders.
std::vector<OptimizationResult> optimize(std::span<const RgbImage> pyramid,
                                         std::span<const OptimizerObject> objects,
                                         const CameraIntrinsics& k,
                                         const OptimizationSettings& settings);
std::vector<OptimizationResult> optimize(const RgbImage& frame,
                                         std::span<const OptimizerObject> objects,
                                         const CameraIntrinsics& k,
                                         const OptimizationSettings& settings);

/// Gathers the banded, admissible, covered pixels of one object inside `roi`.
std::vector<BandPixel> collect_band_pixels(const RgbImage& image, const SignedDistanceField& field,
                                           const SilhouetteMask& mask, const DepthMap& depth,
                                           int object, const PosteriorEvaluator& posteriors,
                                           const RegionOfInterest& roi,
                                           const OptimizationSettings& settings);

}  // namespace regtrack
