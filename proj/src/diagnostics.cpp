#include "regtrack/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "regtrack/error.hpp"
#include "regtrack/level_set.hpp"
#include "regtrack/optimizer.hpp"
#include "regtrack/rasterizer.hpp"

namespace regtrack {

namespace {

constexpr double kNegligible = 1e-8;

double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const auto i = static_cast<std::size_t>(std::ceil(q * double(sorted.size()))) - 1;
  return sorted[std::min(i, sorted.size() - 1)];
}

}  // namespace

JacobianCheckResult check_jacobian(const TriangleMesh& mesh, const JacobianCheckOptions& o) {
  if (mesh.empty() || !(mesh.diameter() > 0.0))
    throw Error(ErrorCode::DegenerateMesh, "mesh has no extent");
  if (o.scenes < 1 || o.width < 8 || o.height < 8 || !(o.step > 0.0))
    throw Error(ErrorCode::InvalidArgument, "bad Jacobian check options");
  CameraIntrinsics k;
  k.width = o.width;
  k.height = o.height;
  k.fx = k.fy = 1.25 * o.width;
  k.cx = (o.width - 1) / 2.0;
  k.cy = (o.height - 1) / 2.0;
  const Frustum frustum;
  const double s = o.heaviside_pitch;

  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  JacobianCheckResult result;

  for (int scene = 0; scene < o.scenes; ++scene) {
    RigidTransform pose;
    const Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    pose.rotation = q.normalized().toRotationMatrix();
    const double extent_px = (0.35 + 0.2 * unit(rng)) * std::min(o.width, o.height);
    const double z = mesh.diameter() * k.fx / extent_px;
    const auto [lo, hi] = mesh.bounds();
    pose.translation = -(pose.rotation * (0.5 * (lo + hi))) +
                       Vec3((unit(rng) - 0.5) * 0.1 * z, (unit(rng) - 0.5) * 0.1 * z, z);

    const TriangleMesh* meshes[] = {&mesh};
    const SceneObject objects[] = {{meshes[0], pose}};
    const SceneRender render = render_scene(objects, k, frustum);
    SignedDistanceField field;
    try {
      field = signed_distance_transform(render.mask, 1, o.band);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::EmptyRegion) continue;
      throw;
    }
    const ReverseDepthMap reverse = render_reverse_depth(mesh, pose, k, frustum);

    for (int y = 1; y < o.height - 1; ++y) {
      for (int x = 1; x < o.width - 1; ++x) {
        const double pf = 0.02 + 0.96 * unit(rng);
        const double pb = 0.02 + 0.96 * unit(rng);
        if (!field.in_band(x, y)) continue;
        const double phi0 = field.phi(x, y);
        const Pixel at = phi0 <= 0.0 ? Pixel{x, y} : field.closest(x, y);
        Vec2 grad;
        try {
          grad = sdf_gradient(field, x, y);
        } catch (const Error&) {
          continue;
        }
        for (const double d : {render.depth(at.x, at.y), reverse(at.x, at.y)}) {
          if (!(d < kNoHit)) continue;
          const Vec3 p = backproject(Vec2(at.x, at.y), d, k, frustum.z_near, frustum.z_far);
          Row6 analytic = pixel_jacobian({x, y}, field, pf, pb, p, k, s);
          if (o.flip_sign) analytic = -analytic;
          const Vec2 x0 = project(k, p);
          Row6 numeric;
          for (int i = 0; i < 6; ++i) {
            Vec6 e = Vec6::Zero();
            e(i) = o.step;
            const auto f = [&](const Vec6& xi) {
              const Vec2 xm = project(k, exp_twist(Twist::from_vector(xi)).apply(p));
              return residual(pf, pb, phi0 - grad.dot(xm - x0), s);
            };
            numeric(i) = (f(e) - f(-e)) / (2.0 * o.step);
          }
          const double scale = numeric.norm();
          if (scale < kNegligible) continue;
          result.relative_errors.push_back((analytic - numeric).norm() / scale);
        }
      }
    }
  }
  auto& errs = result.relative_errors;
  std::sort(errs.begin(), errs.end());
  result.pixels = errs.size();
  if (!errs.empty()) {
    result.max_relative = errs.back();
    result.median_relative = percentile(errs, 0.5);
    result.p99_relative = percentile(errs, 0.99);
  }
  return result;
}

}  // namespace regtrack
