#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "regtrack/geometry.hpp"
#include "regtrack/image.hpp"
#include "regtrack/mesh.hpp"
#include "regtrack/rasterizer.hpp"

namespace regtrack {

/// Mesh with one RGB albedo per vertex, components in [0, 1].
struct ColoredMesh {
  TriangleMesh mesh;
  std::vector<Vec3> colors;

  void validate() const;
};

/// Cube whose faces alternate between two albedos (+x/-x and +z/-z get `a`,
/// +y/-y get `b`).
ColoredMesh make_two_tone_cube(double size, int subdivisions, const Vec3& a, const Vec3& b);
ColoredMesh make_colored_sphere(double radius, int subdivisions, const Vec3& color);
/// Faces mostly facing +-y get `b`, all others `a`.
ColoredMesh paint_two_tone(TriangleMesh mesh, const Vec3& a, const Vec3& b);
/// Uniform albedo on a loaded mesh.
ColoredMesh paint(TriangleMesh mesh, const Vec3& color);

struct Keyframe {
  int frame = 0;
  RigidTransform pose;
};

/// Keyframed poses; rotation by slerp, translation linearly, held constant after
/// the last keyframe.
class TrajectorySpec {
 public:
  explicit TrajectorySpec(std::vector<Keyframe> keyframes);
  RigidTransform pose_at(int frame) const;
  int last_keyframe() const { return keys_.back().frame; }
  const std::vector<Keyframe>& keyframes() const noexcept { return keys_; }

 private:
  std::vector<Keyframe> keys_;
};

/// Continuous tumbling motion in front of the camera, keyed every `spacing` frames.
TrajectorySpec default_trajectory(int frames, double distance, int spacing = 10);

/// Occluder circling `center` (camera frame) in the x-z plane, one turn per
/// `period` frames, while spinning about its own axis.
TrajectorySpec orbit_trajectory(int frames, const Vec3& center, double radius, int period,
                                int spacing = 5);

struct OccluderSpec {
  ColoredMesh mesh;
  TrajectorySpec trajectory;
};

struct SequenceVariant {
  std::string name = "regular";
  bool dynamic_light = false;
  double noise_sigma = 0.0;
  std::optional<OccluderSpec> occluder;

  void validate() const;
};

/// regular, dynlight, noisy (dynamic light + noise) and occlusion (noisy + a box
/// of length `occluder_size` orbiting the target). `noise_sigma` applies to the
/// last two.
SequenceVariant make_variant(const std::string& name, const Vec3& orbit_center,
                             double orbit_radius, int frames, double noise_sigma = 10.0,
                             double occluder_size = 0.07);

struct ShadedObject {
  const ColoredMesh* mesh = nullptr;
  RigidTransform pose;
};

/// Float RGB sprite in [0, 255] with per-pixel coverage in [0, 1].
struct Sprite {
  Image<Vec3> color;
  Image<double> coverage;
  SilhouetteMask index;  // object covering most samples, 0 for none
};

/// Lambertian render albedo * max(0.2, n.l) with flat triangle normals, averaged
/// over `supersample`^2 samples per pixel. NotVisible when nothing is covered.
Sprite shade(std::span<const ShadedObject> objects, const CameraIntrinsics& k,
             const Vec3& light_direction, const Frustum& frustum = {}, int supersample = 2);

/// Sprite over background by coverage, 3x3 Gaussian blur (sigma 0.85) over the
/// object region and a 1 px ring around it, then per-channel Gaussian noise.
RgbImage composite(const RgbImage& background, const Sprite& sprite, double noise_sigma,
                   std::uint64_t seed);

/// Cluttered procedural background: smooth colour noise with random discs and boxes.
RgbImage make_background(int width, int height, std::uint64_t seed);

/// Default camera for a WxH image: fx = fy = 300 * W / 320, principal point at the center.
CameraIntrinsics default_camera(int width, int height);

/// Light direction (unit, towards the light) used for frame `frame`.
Vec3 light_direction(const SequenceVariant& variant, int frame);

struct SequenceRequest {
  ColoredMesh object;
  TrajectorySpec trajectory{{Keyframe{}}};
  SequenceVariant variant;
  std::vector<RgbImage> backgrounds;
  CameraIntrinsics camera;
  int frames = 100;
  std::uint64_t seed = 0;
};

/// Writes frames/%06d.png, poses.txt, camera.txt, meta.txt and one mesh_<id>.obj
/// per rendered object into `out` (created if missing).
void generate_sequence(const SequenceRequest& request, const std::filesystem::path& out);

/// In-memory version: the frames and, per frame, the pose of every object.
struct GeneratedSequence {
  std::vector<RgbImage> frames;
  std::vector<std::vector<RigidTransform>> poses;
};
GeneratedSequence render_sequence(const SequenceRequest& request);

}  // namespace regtrack
