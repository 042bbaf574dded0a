#include "regtrack/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "regtrack/error.hpp"

namespace regtrack {

namespace {

constexpr double kMinArgument = 1e-12;
constexpr double kMinDepth = 1e-9;
constexpr double kReferencePixels = 640.0 * 512.0;

}  // namespace

void OptimizationSettings::validate() const {
  if (!(heaviside_pitch > 0.0))
    throw Error(ErrorCode::InvalidArgument, "heaviside pitch must be positive");
  if (band < 1) throw Error(ErrorCode::InvalidArgument, "band must be at least 1 px");
  if (pyramid_iterations.empty() || pyramid_iterations.size() > 3)
    throw Error(ErrorCode::InvalidArgument, "between one and three pyramid levels");
  for (int it : pyramid_iterations)
    if (it < 0) throw Error(ErrorCode::InvalidArgument, "negative iteration count");
  if (!(min_roi_area >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative ROI area");
  if (!(damping_factor >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative damping");
  if (!(std::abs(contour_offset) < band))
    throw Error(ErrorCode::InvalidArgument, "contour offset must be smaller than the band");
  if (!(divergence_ratio > 1.0))
    throw Error(ErrorCode::InvalidArgument, "divergence ratio must exceed 1");
  frustum.validate();
}

double OptimizationSettings::min_roi_area_for(const CameraIntrinsics& k) const {
  return min_roi_area * (double(k.width) * double(k.height)) / kReferencePixels;
}

void NormalEquations::add(const Row6& j, double psi) {
  for (int r = 0; r < 6; ++r) {
    const double wr = psi * j(r);
    for (int c = r; c < 6; ++c) hessian_approx(r, c) += wr * j(c);
    gradient(r) += j(r);
  }
  ++pixel_count;
}

void NormalEquations::merge(const NormalEquations& other) {
  hessian_approx += other.hessian_approx;
  gradient += other.gradient;
  pixel_count += other.pixel_count;
}

void NormalEquations::mirror() {
  for (int r = 1; r < 6; ++r)
    for (int c = 0; c < r; ++c) hessian_approx(r, c) = hessian_approx(c, r);
}

double residual(double pf, double pb, double phi, double s) {
  const double h = smoothed_heaviside(phi, s);
  const double arg = std::clamp(h * pf + (1.0 - h) * pb, kMinArgument, 1.0 - kMinArgument);
  return -std::log(arg);
}

double residual_weight(double f) { return 1.0 / std::max(f, kMinArgument); }

Row6 pixel_jacobian(Pixel x, const SignedDistanceField& field, double pf, double pb,
                    const Vec3& p, const CameraIntrinsics& k, double s) {
  if (!(p.z() > kMinDepth))
    throw Error(ErrorCode::DegenerateDepth, "surface point at Z = " + std::to_string(p.z()));
  const double phi = field.phi(x.x, x.y);
  const Vec2 grad = sdf_gradient(field, x.x, x.y);
  const double h = smoothed_heaviside(phi, s);
  const double denom = std::max(h * (pf - pb) + pb, kMinArgument);
  const double pre = (pb - pf) / denom * smoothed_dirac(phi, s);

  const double iz = 1.0 / p.z();
  Eigen::Matrix<double, 2, 3> dpi;
  dpi << k.fx * iz, 0.0, -p.x() * k.fx * iz * iz,
         0.0, k.fy * iz, -p.y() * k.fy * iz * iz;
  Eigen::Matrix<double, 3, 6> dx;
  dx.leftCols<3>() = -skew(p);
  dx.rightCols<3>() = Mat3::Identity();
  return pre * (grad.transpose() * dpi * dx);
}

bool pixel_admissible(Pixel x, int object, const SilhouetteMask& mask, const DepthMap& depth,
                      const SignedDistanceField& field, const Frustum& frustum) {
  const auto z = [&](int px, int py) {
    return metric_depth(depth(px, py), frustum.z_near, frustum.z_far);
  };
  const double phi = field.phi(x.x, x.y);
  const Pixel c = field.closest(x.x, x.y);
  if (c.x < 0) return true;
  const auto foreign_in_front = [&](int px, int py) {
    const int other = mask(px, py);
    return other != 0 && other != object && z(px, py) < z(c.x, c.y);
  };
  if (phi > 0.0) return !foreign_in_front(x.x, x.y);
  static constexpr int kDx[4] = {1, -1, 0, 0};
  static constexpr int kDy[4] = {0, 0, 1, -1};
  for (int i = 0; i < 4; ++i) {
    const int nx = c.x + kDx[i];
    const int ny = c.y + kDy[i];
    if (!mask.contains(nx, ny) || mask(nx, ny) == object) continue;
    if (foreign_in_front(nx, ny)) return false;
  }
  return true;
}

NormalEquations accumulate(std::span<const BandPixel> pixels, const SignedDistanceField& field,
                           const DepthMap& depth, const ReverseDepthMap* reverse,
                           const CameraIntrinsics& k, const Frustum& frustum, double s,
                           AccumulationStats* stats) {
  NormalEquations n;
  AccumulationStats local;
  for (const BandPixel& bp : pixels) {
    const double phi = field.phi(bp.x.x, bp.x.y);
    if (!std::isfinite(phi)) continue;
    const Pixel at = phi <= 0.0 ? bp.x : field.closest(bp.x.x, bp.x.y);
    if (at.x < 0) continue;
    const double front = depth(at.x, at.y);
    if (!(front < kNoHit)) continue;
    const Vec2 loc(at.x, at.y);
    Row6 jf;
    try {
      jf = pixel_jacobian(bp.x, field, bp.pf, bp.pb,
                          backproject(loc, front, k, frustum.z_near, frustum.z_far), k, s);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::BorderPixel || e.code() == ErrorCode::DegenerateDepth) continue;
      throw;
    }
    const double f = residual(bp.pf, bp.pb, phi, s);
    const double psi = residual_weight(f);
    n.add(jf, psi);
    local.residual_sum += f;
    ++local.residual_count;
    if (reverse) {
      const double back = (*reverse)(at.x, at.y);
      if (back < kNoHit) {
        const Vec3 pb = backproject(loc, back, k, frustum.z_near, frustum.z_far);
        if (pb.z() > kMinDepth) n.add(pixel_jacobian(bp.x, field, bp.pf, bp.pb, pb, k, s), psi);
      }
    }
  }
  if (n.pixel_count == 0)
    throw Error(ErrorCode::EmptyAccumulation, "no admissible pixel contributed");
  n.mirror();
  if (stats) *stats = local;
  return n;
}

Twist solve_step(const NormalEquations& n, double damping) {
  const Mat6 a = n.hessian_approx + damping * Mat6::Identity();
  Eigen::LLT<Mat6> llt(a);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::SingularSystem, "normal equations are not positive definite");
  const Vec6 step = llt.solve(-n.gradient);
  if (!step.allFinite())
    throw Error(ErrorCode::SingularSystem, "non-finite update");
  return Twist::from_vector(step);
}

std::vector<BandPixel> collect_band_pixels(const RgbImage& image, const SignedDistanceField& field,
                                           const SilhouetteMask& mask, const DepthMap& depth,
                                           int object, const PosteriorEvaluator& posteriors,
                                           const RegionOfInterest& roi,
                                           const OptimizationSettings& settings) {
  std::vector<BandPixel> out;
  const RegionOfInterest r =
      RegionOfInterest{1, 1, image.width() - 1, image.height() - 1}.clipped(image.width(),
                                                                          image.height());
  const int x0 = std::max(roi.x0, r.x0), x1 = std::min(roi.x1, r.x1);
  const int y0 = std::max(roi.y0, r.y0), y1 = std::min(roi.y1, r.y1);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      if (!field.in_band(x, y)) continue;
      if (settings.occlusion_handling &&
          !pixel_admissible({x, y}, object, mask, depth, field, settings.frustum))
        continue;
      BandPixel bp{{x, y}, 0.0, 0.0};
      if (!posteriors.evaluate(image(x, y), x, y, bp.pf, bp.pb)) continue;
      out.push_back(bp);
    }
  }
  return out;
}

std::vector<OptimizationResult> optimize(std::span<const RgbImage> pyramid,
                                         std::span<const OptimizerObject> objects,
                                         const CameraIntrinsics& k,
                                         const OptimizationSettings& settings) {
  settings.validate();
  const int levels = settings.levels();
  if (static_cast<int>(pyramid.size()) < levels)
    throw Error(ErrorCode::DimensionMismatch, "pyramid has fewer levels than configured");

  std::vector<OptimizationResult> results(objects.size());
  for (std::size_t j = 0; j < objects.size(); ++j) {
    if (!objects[j].meshes || !objects[j].model)
      throw Error(ErrorCode::InvalidArgument, "object without mesh or model");
    results[j].pose = objects[j].pose;
  }
  const double min_area = settings.min_roi_area_for(k);
  const double s = settings.heaviside_pitch;

  for (int li = 0; li < levels; ++li) {
    const int level = levels - li;
    const int iterations = settings.pyramid_iterations[static_cast<std::size_t>(li)];
    const CameraIntrinsics kl = scale_intrinsics(k, level);
    const RgbImage& image = pyramid[static_cast<std::size_t>(level - 1)];
    if (image.width() != kl.width || image.height() != kl.height)
      throw Error(ErrorCode::DimensionMismatch, "pyramid level size does not match intrinsics");
    const double scale = std::ldexp(1.0, 1 - level);

    std::vector<bool> skip(objects.size(), false);
    std::vector<double> first_mean(objects.size(), -1.0), last_mean(objects.size(), -1.0);

    for (int it = 0; it < iterations; ++it) {
      std::vector<SceneObject> scene;
      std::vector<int> label(objects.size(), 0);
      for (std::size_t j = 0; j < objects.size(); ++j) {
        if (results[j].status != OptimizationStatus::Ok) continue;
        scene.push_back({&objects[j].meshes->full, results[j].pose});
        label[j] = static_cast<int>(scene.size());
      }
      if (scene.empty()) break;
      const SceneRender render = render_scene(scene, kl, settings.frustum);

      for (std::size_t j = 0; j < objects.size(); ++j) {
        OptimizationResult& res = results[j];
        if (res.status != OptimizationStatus::Ok || skip[j]) continue;
        const TriangleMesh& mesh = objects[j].meshes->full;
        RegionOfInterest roi;
        try {
          roi = compute_roi(mesh, res.pose, kl, settings.band);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NotVisible) throw;
          res.status = OptimizationStatus::NotVisible;
          res.message = e.what();
          continue;
        }
        if (roi.empty()) {
          res.status = OptimizationStatus::NotVisible;
          res.message = "projection misses the image";
          continue;
        }
        if (double(roi_area(roi)) < min_area) {
          skip[j] = true;
          continue;
        }
        SignedDistanceField field;
        try {
          field = signed_distance_transform(render.mask, label[j], settings.band,
                                            roi.expanded(1).clipped(kl.width, kl.height));
        } catch (const Error& e) {
          if (e.code() == ErrorCode::EmptyRegion) continue;  // hidden this iteration
          throw;
        }
        if (settings.contour_offset != 0.0)
          for (double& v : field.phi.data())
            if (std::isfinite(v)) v -= settings.contour_offset;
        const PosteriorEvaluator posteriors(*objects[j].model, objects[j].model->active, scale,
                                            settings.normalize_posteriors);
        const auto pixels = collect_band_pixels(image, field, render.mask, render.depth, label[j],
                                                posteriors, roi, settings);
        ReverseDepthMap reverse;
        if (settings.backside_terms)
          reverse = render_reverse_depth(mesh, res.pose, kl, settings.frustum);
        AccumulationStats stats;
        NormalEquations n;
        try {
          n = accumulate(pixels, field, render.depth, settings.backside_terms ? &reverse : nullptr,
                         kl, settings.frustum, s, &stats);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::EmptyAccumulation) continue;
          throw;
        }
        const double mean = stats.mean_residual();
        if (first_mean[j] < 0.0) first_mean[j] = mean;
        last_mean[j] = mean;
        res.final_mean_residual = mean;
        Twist step;
        try {
          step = solve_step(n, settings.damping_factor * n.hessian_approx.trace() / 6.0);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::SingularSystem) continue;
          throw;
        }
        res.pose = compose(exp_twist(step), res.pose);
        ++res.updates;
        if (!res.pose.rotation.allFinite() || !res.pose.translation.allFinite()) {
          res.status = OptimizationStatus::Diverged;
          res.message = "non-finite pose";
        }
      }
    }
    for (std::size_t j = 0; j < objects.size(); ++j) {
      if (results[j].status != OptimizationStatus::Ok || first_mean[j] <= 0.0) continue;
      if (last_mean[j] > settings.divergence_ratio * first_mean[j]) {
        results[j].status = OptimizationStatus::Diverged;
        results[j].message = "mean residual grew from " + std::to_string(first_mean[j]) +
                             " to " + std::to_string(last_mean[j]);
      }
    }
  }
  return results;
}

std::vector<OptimizationResult> optimize(const RgbImage& frame,
                                         std::span<const OptimizerObject> objects,
                                         const CameraIntrinsics& k,
                                         const OptimizationSettings& settings) {
  const auto pyramid = build_pyramid(frame, settings.levels());
  return optimize(std::span<const RgbImage>(pyramid), objects, k, settings);
}

}  // namespace regtrack
