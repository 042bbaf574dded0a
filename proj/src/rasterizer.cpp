#include "regtrack/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "regtrack/error.hpp"
#include "regtrack/png_io.hpp"

namespace regtrack {

namespace {

constexpr double kSubpixelScale = double(1 << kSubpixelBits);
// Snapped coordinates stay below 2^28 so every edge function fits in int64.
constexpr double kMaxScreenCoord = double(1 << 20);

struct SnappedTriangle {
  std::int64_t px[3], py[3];
  double inv_z[3];
  std::int64_t area;
  bool swapped;      // vertices 1 and 2 exchanged to make the area positive
  bool top_left[3];  // edge i runs from vertex (i+1)%3 to (i+2)%3
  int xmin, xmax, ymin, ymax;
};

inline std::int64_t edge(std::int64_t ax, std::int64_t ay, std::int64_t bx, std::int64_t by,
                         std::int64_t px, std::int64_t py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

// With positive area (clockwise on a y-down screen) a top edge is horizontal and
// runs right, a left edge runs up.
inline bool is_top_left(std::int64_t ax, std::int64_t ay, std::int64_t bx, std::int64_t by) {
  return (ay == by && bx > ax) || (by < ay);
}

bool setup_triangle(const std::array<Vec3, 3>& cam, const CameraIntrinsics& k,
                    const Frustum& frustum, SnappedTriangle& t) {
  for (int i = 0; i < 3; ++i) {
    const Vec3& p = cam[static_cast<std::size_t>(i)];
    if (!(p.z() >= frustum.z_near)) return false;
    const double sx = k.fx * p.x() / p.z() + k.cx;
    const double sy = k.fy * p.y() / p.z() + k.cy;
    if (!(std::abs(sx) < kMaxScreenCoord && std::abs(sy) < kMaxScreenCoord)) return false;
    t.px[i] = std::llround(sx * kSubpixelScale);
    t.py[i] = std::llround(sy * kSubpixelScale);
    t.inv_z[i] = 1.0 / p.z();
  }
  t.area = edge(t.px[0], t.py[0], t.px[1], t.py[1], t.px[2], t.py[2]);
  if (t.area == 0) return false;
  t.swapped = t.area < 0;
  if (t.swapped) {
    std::swap(t.px[1], t.px[2]);
    std::swap(t.py[1], t.py[2]);
    std::swap(t.inv_z[1], t.inv_z[2]);
    t.area = -t.area;
  }
  for (int i = 0; i < 3; ++i) {
    const int a = (i + 1) % 3;
    const int b = (i + 2) % 3;
    t.top_left[i] = is_top_left(t.px[a], t.py[a], t.px[b], t.py[b]);
  }
  const auto [xlo, xhi] = std::minmax({t.px[0], t.px[1], t.px[2]});
  const auto [ylo, yhi] = std::minmax({t.py[0], t.py[1], t.py[2]});
  const std::int64_t s = 1 << kSubpixelBits;
  auto ceil_div = [s](std::int64_t v) { return v >= 0 ? (v + s - 1) / s : -((-v) / s); };
  auto floor_div = [s](std::int64_t v) { return v >= 0 ? v / s : -((-v + s - 1) / s); };
  t.xmin = static_cast<int>(ceil_div(xlo));
  t.xmax = static_cast<int>(floor_div(xhi));
  t.ymin = static_cast<int>(ceil_div(ylo));
  t.ymax = static_cast<int>(floor_div(yhi));
  return true;
}

// Calls visit(x, y, w0, w1, w2) for every covered pixel center inside the image,
// where w_i are the integer edge functions (barycentric numerators).
template <typename Visit>
void scan_triangle(const SnappedTriangle& t, int width, int height, Visit&& visit) {
  const int x0 = std::max(t.xmin, 0);
  const int x1 = std::min(t.xmax, width - 1);
  const int y0 = std::max(t.ymin, 0);
  const int y1 = std::min(t.ymax, height - 1);
  if (x0 > x1 || y0 > y1) return;
  const std::int64_t s = 1 << kSubpixelBits;
  std::int64_t step_x[3];
  std::int64_t step_y[3];
  for (int i = 0; i < 3; ++i) {
    const int a = (i + 1) % 3;
    const int b = (i + 2) % 3;
    step_x[i] = -(t.py[b] - t.py[a]) * s;
    step_y[i] = (t.px[b] - t.px[a]) * s;
  }
  std::int64_t row[3];
  for (int i = 0; i < 3; ++i) {
    const int a = (i + 1) % 3;
    const int b = (i + 2) % 3;
    row[i] = edge(t.px[a], t.py[a], t.px[b], t.py[b], x0 * s, y0 * s);
  }
  for (int y = y0; y <= y1; ++y) {
    std::int64_t w[3] = {row[0], row[1], row[2]};
    for (int x = x0; x <= x1; ++x) {
      const bool inside = (w[0] > 0 || (w[0] == 0 && t.top_left[0])) &&
                          (w[1] > 0 || (w[1] == 0 && t.top_left[1])) &&
                          (w[2] > 0 || (w[2] == 0 && t.top_left[2]));
      if (inside) visit(x, y, w[0], w[1], w[2]);
      for (int i = 0; i < 3; ++i) w[i] += step_x[i];
    }
    for (int i = 0; i < 3; ++i) row[i] += step_y[i];
  }
}

inline double interpolate_inv_z(const SnappedTriangle& t, std::int64_t w0, std::int64_t w1,
                                std::int64_t w2) {
  return (double(w0) * t.inv_z[0] + double(w1) * t.inv_z[1] + double(w2) * t.inv_z[2]) /
         double(t.area);
}

std::array<Vec3, 3> camera_vertices(const TriangleMesh& mesh, const Triangle& tri,
                                    const RigidTransform& pose) {
  const auto& v = mesh.vertices();
  return {pose.apply(v[static_cast<std::size_t>(tri[0])]),
          pose.apply(v[static_cast<std::size_t>(tri[1])]),
          pose.apply(v[static_cast<std::size_t>(tri[2])])};
}

double to_normalized(double inv_z, const Frustum& f) {
  const double d = f.z_far * (1.0 - f.z_near * inv_z) / (f.z_far - f.z_near);
  return std::clamp(d, 0.0, std::nextafter(1.0, 0.0));
}

}  // namespace

SceneRender render_scene(std::span<const SceneObject> objects, const CameraIntrinsics& k,
                         const Frustum& frustum) {
  frustum.validate();
  const int w = k.width;
  const int h = k.height;
  SceneRender out{SilhouetteMask(w, h, 0), DepthMap(w, h, kNoHit)};
  Image<double> nearest(w, h, 0.0);  // 1/Z, zero = nothing drawn
  const double min_inv_z = 1.0 / frustum.z_far;
  const double max_inv_z = 1.0 / frustum.z_near;
  for (std::size_t j = 0; j < objects.size(); ++j) {
    const auto& obj = objects[j];
    if (obj.mesh == nullptr) continue;
    const auto index = static_cast<std::uint16_t>(j + 1);
    for (const auto& tri : obj.mesh->triangles()) {
      SnappedTriangle t;
      if (!setup_triangle(camera_vertices(*obj.mesh, tri, obj.pose), k, frustum, t)) continue;
      scan_triangle(t, w, h, [&](int x, int y, std::int64_t w0, std::int64_t w1, std::int64_t w2) {
        const double iz = interpolate_inv_z(t, w0, w1, w2);
        if (!(iz > min_inv_z && iz <= max_inv_z)) return;
        if (iz > nearest(x, y)) {
          nearest(x, y) = iz;
          out.mask(x, y) = index;
        }
      });
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (out.mask(x, y) != 0) out.depth(x, y) = to_normalized(nearest(x, y), frustum);
    }
  }
  return out;
}

SceneRender render_scene(std::span<const TriangleMesh> meshes,
                         std::span<const RigidTransform> poses, const CameraIntrinsics& k,
                         const Frustum& frustum) {
  if (meshes.size() != poses.size())
    throw Error(ErrorCode::DimensionMismatch, "one pose per mesh required");
  std::vector<SceneObject> objects;
  objects.reserve(meshes.size());
  for (std::size_t i = 0; i < meshes.size(); ++i) objects.push_back({&meshes[i], poses[i]});
  return render_scene(objects, k, frustum);
}

ReverseDepthMap render_reverse_depth(const TriangleMesh& mesh, const RigidTransform& pose,
                                     const CameraIntrinsics& k, const Frustum& frustum) {
  frustum.validate();
  const int w = k.width;
  const int h = k.height;
  const double min_inv_z = 1.0 / frustum.z_far;
  const double max_inv_z = 1.0 / frustum.z_near;
  constexpr double kUnset = std::numeric_limits<double>::infinity();
  Image<double> farthest(w, h, kUnset);
  for (const auto& tri : mesh.triangles()) {
    SnappedTriangle t;
    if (!setup_triangle(camera_vertices(mesh, tri, pose), k, frustum, t)) continue;
    scan_triangle(t, w, h, [&](int x, int y, std::int64_t w0, std::int64_t w1, std::int64_t w2) {
      const double iz = interpolate_inv_z(t, w0, w1, w2);
      if (!(iz > min_inv_z && iz <= max_inv_z)) return;
      if (iz < farthest(x, y)) farthest(x, y) = iz;
    });
  }
  ReverseDepthMap out(w, h, kNoHit);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (farthest(x, y) != kUnset) out(x, y) = to_normalized(farthest(x, y), frustum);
    }
  }
  return out;
}

void rasterize_mesh(const TriangleMesh& mesh, const RigidTransform& pose,
                    const CameraIntrinsics& k, const Frustum& frustum,
                    const std::function<void(const Fragment&)>& visit) {
  frustum.validate();
  const double min_inv_z = 1.0 / frustum.z_far;
  const double max_inv_z = 1.0 / frustum.z_near;
  const auto& tris = mesh.triangles();
  for (std::size_t ti = 0; ti < tris.size(); ++ti) {
    const auto cam = camera_vertices(mesh, tris[ti], pose);
    SnappedTriangle t;
    if (!setup_triangle(cam, k, frustum, t)) continue;
    const bool swapped = t.swapped;
    scan_triangle(t, k.width, k.height,
                  [&](int x, int y, std::int64_t w0, std::int64_t w1, std::int64_t w2) {
                    const double iz = interpolate_inv_z(t, w0, w1, w2);
                    if (!(iz > min_inv_z && iz <= max_inv_z)) return;
                    Fragment frag;
                    frag.x = x;
                    frag.y = y;
                    frag.triangle = static_cast<int>(ti);
                    frag.inv_z = iz;
                    // Perspective-correct weights: (w_i / Z_i) / sum_k (w_k / Z_k).
                    const double a = double(w0) * t.inv_z[0];
                    const double b = double(w1) * t.inv_z[1];
                    const double c = double(w2) * t.inv_z[2];
                    const double sum = a + b + c;
                    frag.bary[0] = a / sum;
                    frag.bary[1] = (swapped ? c : b) / sum;
                    frag.bary[2] = (swapped ? b : c) / sum;
                    visit(frag);
                  });
  }
}

RegionOfInterest RegionOfInterest::clipped(int width, int height) const {
  RegionOfInterest r{std::clamp(x0, 0, width), std::clamp(y0, 0, height),
                     std::clamp(x1, 0, width), std::clamp(y1, 0, height)};
  if (r.x1 < r.x0) r.x1 = r.x0;
  if (r.y1 < r.y0) r.y1 = r.y0;
  return r;
}

RegionOfInterest RegionOfInterest::expanded(int pixels) const {
  return {x0 - pixels, y0 - pixels, x1 + pixels, y1 + pixels};
}

RegionOfInterest compute_roi(const TriangleMesh& mesh, const RigidTransform& pose,
                             const CameraIntrinsics& k, int band) {
  constexpr double kMinDepth = 1e-9;
  double xmin = std::numeric_limits<double>::infinity();
  double ymin = xmin;
  double xmax = -xmin;
  double ymax = -xmin;
  int in_front = 0;
  const auto corners = mesh.bounding_box_corners();
  for (const auto& c : corners) {
    const Vec3 p = pose.apply(c);
    if (p.z() <= kMinDepth) continue;
    ++in_front;
    const Vec2 px = project(k, p);
    xmin = std::min(xmin, px.x());
    xmax = std::max(xmax, px.x());
    ymin = std::min(ymin, px.y());
    ymax = std::max(ymax, px.y());
  }
  if (in_front == 0) throw Error(ErrorCode::NotVisible, "model is entirely behind the camera");
  if (in_front < static_cast<int>(corners.size())) return {0, 0, k.width, k.height};
  // Guard the integer conversion for points projecting extremely far away.
  const double lim = 1e9;
  auto to_int = [lim](double v) { return static_cast<int>(std::clamp(v, -lim, lim)); };
  const RegionOfInterest bounds{to_int(std::floor(xmin)), to_int(std::floor(ymin)),
                                to_int(std::floor(xmax)) + 1, to_int(std::floor(ymax)) + 1};
  return bounds.expanded(band).clipped(k.width, k.height);
}

long roi_area(const RegionOfInterest& roi) {
  if (roi.empty()) return 0;
  return static_cast<long>(roi.x1 - roi.x0) * static_cast<long>(roi.y1 - roi.y0);
}

void dump_mask_png(const std::filesystem::path& path, const SilhouetteMask& mask) {
  Image<std::uint8_t> out(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i)
    out.data()[i] = static_cast<std::uint8_t>(std::min<int>(mask.data()[i], 255));
  write_png(path, out);
}

void dump_depth_png(const std::filesystem::path& path, const DepthMap& depth) {
  Image<std::uint16_t> out(depth.width(), depth.height());
  for (std::size_t i = 0; i < depth.size(); ++i)
    out.data()[i] = static_cast<std::uint16_t>(std::lround(std::clamp(depth.data()[i], 0.0, 1.0) * 65535.0));
  write_png(path, out);
}

}  // namespace regtrack
