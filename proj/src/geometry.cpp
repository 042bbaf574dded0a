#include "regtrack/geometry.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "regtrack/error.hpp"

namespace regtrack {

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "empty image size");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
    throw Error(ErrorCode::InvalidArgument, "principal point outside the image");
}

void Frustum::validate() const {
  if (!(z_near > 0.0) || !(z_near < z_far))
    throw Error(ErrorCode::InvalidFrustum, "need 0 < z_near < z_far, got " +
                                               std::to_string(z_near) + ", " +
                                               std::to_string(z_far));
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

RigidTransform exp_twist(const Twist& xi) {
  const Mat3 w = skew(xi.omega);
  const Mat3 w2 = w * w;
  const double theta = xi.omega.norm();
  Mat3 r;
  Mat3 v;
  if (theta < 1e-8) {
    r = Mat3::Identity() + w + 0.5 * w2;
    v = Mat3::Identity() + 0.5 * w + w2 / 6.0;
  } else {
    const double theta2 = theta * theta;
    const double half = std::sin(0.5 * theta) / theta;
    const double a = std::sin(theta) / theta;
    const double b = 2.0 * half * half;  // (1 - cos) / theta^2 without cancellation
    // (theta - sin) / theta^3 cancels badly for small angles; use its series there
    const double c = theta < 1e-3
                         ? 1.0 / 6.0 - theta2 / 120.0 + theta2 * theta2 / 5040.0
                         : (theta - std::sin(theta)) / (theta2 * theta);
    r = Mat3::Identity() + a * w + b * w2;
    v = Mat3::Identity() + b * w + c * w2;
  }
  return {r, v * xi.nu};
}

Mat3 orthonormalize(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {orthonormalize(a.rotation * b.rotation), a.rotation * b.translation + a.translation};
}

RigidTransform invert(const RigidTransform& t) {
  const Mat3 rt = t.rotation.transpose();
  return {rt, -(rt * t.translation)};
}

Mat3 axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n == 0.0) return Mat3::Identity();
  return exp_twist(Twist{axis / n * angle, Vec3::Zero()}).rotation;
}

Vec2 project(const CameraIntrinsics& k, const Vec3& p) {
  if (!(p.z() > 0.0))
    throw Error(ErrorCode::PointBehindCamera, "point with Z = " + std::to_string(p.z()));
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

Vec2 project(const CameraIntrinsics& k, const RigidTransform& t, const Vec3& x3d) {
  return project(k, t.apply(x3d));
}

double metric_depth(double depth_value, double z_near, double z_far) {
  return z_near * z_far / (z_far - depth_value * (z_far - z_near));
}

double normalized_depth(double z, double z_near, double z_far) {
  return z_far * (z - z_near) / ((z_far - z_near) * z);
}

Vec3 backproject(const Vec2& x, double depth_value, const CameraIntrinsics& k, double z_near,
                 double z_far) {
  const double d = metric_depth(depth_value, z_near, z_far);
  return {d * (x.x() - k.cx) / k.fx, d * (x.y() - k.cy) / k.fy, d};
}

CameraIntrinsics scale_intrinsics(const CameraIntrinsics& k, int level) {
  if (level < 1 || level > 3)
    throw Error(ErrorCode::InvalidArgument, "pyramid level must be 1, 2 or 3");
  CameraIntrinsics out = k;
  for (int l = 1; l < level; ++l) {
    out.fx *= 0.5;
    out.fy *= 0.5;
    out.cx *= 0.5;
    out.cy *= 0.5;
    out.width /= 2;
    out.height /= 2;
  }
  return out;
}

}  // namespace regtrack
