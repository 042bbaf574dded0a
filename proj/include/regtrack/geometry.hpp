#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace regtrack {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Row6 = Eigen::Matrix<double, 1, 6>;

/// Twist coordinates [omega, nu] of a rigid motion; omega in radians, nu in meters.
struct Twist {
  Vec3 omega = Vec3::Zero();
  Vec3 nu = Vec3::Zero();

  static Twist from_vector(const Vec6& v) { return {v.head<3>(), v.tail<3>()}; }
  Vec6 as_vector() const {
    Vec6 v;
    v << omega, nu;
    return v;
  }
  Twist operator-() const { return {-omega, -nu}; }
};

/// Element of SE(3) mapping model coordinates to camera coordinates.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform translate(const Vec3& t) { return {Mat3::Identity(), t}; }

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
  Eigen::Matrix4d matrix() const;
};

struct CameraIntrinsics {
  double fx = 1.0, fy = 1.0;
  double cx = 0.0, cy = 0.0;
  int width = 1, height = 1;

  /// Throws InvalidArgument unless fx, fy > 0 and the principal point is in the image.
  void validate() const;
  bool operator==(const CameraIntrinsics&) const = default;
};

/// Near and far clipping distances in meters.
struct Frustum {
  double z_near = 0.01;
  double z_far = 100.0;

  void validate() const;  // InvalidFrustum
};

Mat3 skew(const Vec3& v);

RigidTransform exp_twist(const Twist& xi);

/// a * b, with the rotation projected back onto SO(3).
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);

/// Nearest rotation matrix in the Frobenius sense (polar decomposition).
Mat3 orthonormalize(const Mat3& r);

/// Rotation of `angle` radians about `axis` (normalised internally).
Mat3 axis_angle(const Vec3& axis, double angle);

/// Pixel coordinate of the model point `x3d` seen at pose `t`. PointBehindCamera when Z <= 0.
Vec2 project(const CameraIntrinsics& k, const RigidTransform& t, const Vec3& x3d);
/// Pixel coordinate of a camera-frame point.
Vec2 project(const CameraIntrinsics& k, const Vec3& camera_point);

/// Metric depth encoded by a normalised Z-buffer value in [0, 1].
double metric_depth(double depth_value, double z_near, double z_far);
/// Normalised Z-buffer value of metric depth z (inverse of metric_depth).
double normalized_depth(double z, double z_near, double z_far);

/// Camera-frame point that projects to pixel `x` at the depth stored in a Z-buffer.
Vec3 backproject(const Vec2& x, double depth_value, const CameraIntrinsics& k, double z_near,
                 double z_far);

/// Intrinsics of pyramid level `level` (1 = full resolution); each level halves.
CameraIntrinsics scale_intrinsics(const CameraIntrinsics& k, int level);

}  // namespace regtrack
