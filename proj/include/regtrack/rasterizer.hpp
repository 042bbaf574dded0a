#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "regtrack/geometry.hpp"
#include "regtrack/image.hpp"
#include "regtrack/mesh.hpp"

namespace regtrack {

/// Per-pixel object index, 0 for background, j for the j-th object (1-based).
using SilhouetteMask = Image<std::uint16_t>;
/// Per-pixel normalised Z-buffer value in [0, 1]; kNoHit where nothing was drawn.
using DepthMap = Image<double>;
/// Same layout as DepthMap, holding the farthest surface of a single object.
using ReverseDepthMap = Image<double>;

inline constexpr double kNoHit = 1.0;

/// Fixed-point sub-pixel precision of snapped vertex positions (1/256 px).
inline constexpr int kSubpixelBits = 8;

struct SceneObject {
  const TriangleMesh* mesh = nullptr;
  RigidTransform pose;
};

struct SceneRender {
  SilhouetteMask mask;
  DepthMap depth;
};

/// Rasterises every object with a shared depth test. Pixel centers sit at integer
/// coordinates; coverage uses exact integer edge functions on vertices snapped to
/// 1/256 px with a top-left fill rule, so adjacent triangles neither overlap nor
/// leave gaps. Triangles with a vertex closer than z_near are dropped, not clipped.
/// Ties in depth keep the earlier triangle (object order, then triangle order).
SceneRender render_scene(std::span<const SceneObject> objects, const CameraIntrinsics& k,
                         const Frustum& frustum);
SceneRender render_scene(std::span<const TriangleMesh> meshes,
                         std::span<const RigidTransform> poses, const CameraIntrinsics& k,
                         const Frustum& frustum);

/// Farthest surface per pixel of a single object (inverted depth test).
ReverseDepthMap render_reverse_depth(const TriangleMesh& mesh, const RigidTransform& pose,
                                     const CameraIntrinsics& k, const Frustum& frustum);

/// Inclusive-exclusive pixel rectangle.
struct RegionOfInterest {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool contains(int x, int y) const noexcept { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  bool empty() const noexcept { return x1 <= x0 || y1 <= y0; }
  RegionOfInterest clipped(int width, int height) const;
  RegionOfInterest expanded(int pixels) const;
  bool operator==(const RegionOfInterest&) const = default;
};

/// Bounds of the projected model bounding box expanded by `band` px, clipped to the
/// image. If only some corners are in front of the camera the whole image is
/// returned. NotVisible when every corner is behind the camera.
RegionOfInterest compute_roi(const TriangleMesh& mesh, const RigidTransform& pose,
                             const CameraIntrinsics& k, int band);

long roi_area(const RegionOfInterest& roi);

/// Writes the mask as 8-bit indices and the depth as 16-bit depth * 65535.
void dump_mask_png(const std::filesystem::path& path, const SilhouetteMask& mask);
void dump_depth_png(const std::filesystem::path& path, const DepthMap& depth);

/// A covered pixel of one triangle: perspective-correct barycentrics and 1/Z.
struct Fragment {
  int x = 0, y = 0;
  int triangle = 0;
  double inv_z = 0.0;
  double bary[3] = {0.0, 0.0, 0.0};
};

/// Visits every pixel covered by the posed mesh in triangle order, using the same
/// coverage rule as render_scene. No depth test is applied.
void rasterize_mesh(const TriangleMesh& mesh, const RigidTransform& pose,
                    const CameraIntrinsics& k, const Frustum& frustum,
                    const std::function<void(const Fragment&)>& visit);

}  // namespace regtrack
