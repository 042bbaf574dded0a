#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "regtrack/geometry.hpp"
#include "regtrack/image.hpp"
#include "regtrack/mesh.hpp"
#include "regtrack/tracker.hpp"

namespace regtrack {

inline constexpr double kDegree = 3.14159265358979323846 / 180.0;

/// acos((trace(R^T R_gt) - 1) / 2), argument clamped to [-1, 1]. Radians.
double rotation_error(const Mat3& r, const Mat3& r_gt);
double translation_error(const Vec3& t, const Vec3& t_gt);
/// Mean distance between corresponding posed vertices. EmptyMesh on an empty mesh.
double vertex_error(const TriangleMesh& mesh, const RigidTransform& t, const RigidTransform& t_gt);

/// Integral over lambda in [0, lambda_max] of the percentage of frames with
/// error < lambda * diameter; at most 100 * lambda_max.
double auc_score(std::span<const double> vertex_errors, double diameter, double lambda_max = 0.2);

struct FrameError {
  double translation_error = 0.0;  // m
  double rotation_error = 0.0;     // rad
  double vertex_error = 0.0;       // m, 0 without a mesh
};

struct FrameRecord {
  int index = 0;
  FrameError error;
  bool success = false;
  double runtime_ms = 0.0;
};

struct SequenceReport {
  int object = 0;
  std::string protocol;
  std::vector<FrameRecord> frames;  // frames 1..N-1
  double success_rate = 0.0;        // percent
  double auc_score = 0.0;
  int resets = 0;
};

struct Thresholds {
  double translation = 0.05;        // m
  double rotation = 5.0 * kDegree;  // rad

  static Thresholds infinite() {
    const double inf = std::numeric_limits<double>::infinity();
    return {inf, inf};
  }
};

/// Frames plus per-frame ground truth of every object, on disk or in memory.
class Sequence {
 public:
  static Sequence in_memory(const CameraIntrinsics& camera, std::vector<RgbImage> frames,
                            std::vector<std::vector<RigidTransform>> poses);

  const CameraIntrinsics& camera() const noexcept { return camera_; }
  std::size_t frame_count() const noexcept { return poses_.size(); }
  std::size_t object_count() const noexcept { return poses_.empty() ? 0 : poses_[0].size(); }
  const std::vector<RigidTransform>& poses(std::size_t frame) const { return poses_.at(frame); }
  RgbImage frame(std::size_t index) const;
  /// Meshes stored next to the frames (mesh_<id>.obj); empty when absent.
  const std::vector<TriangleMesh>& meshes() const noexcept { return meshes_; }

 private:
  friend Sequence load_sequence(const std::filesystem::path& dir);
  CameraIntrinsics camera_;
  std::vector<std::vector<RigidTransform>> poses_;
  std::vector<RgbImage> frames_;
  std::filesystem::path directory_;
  std::vector<TriangleMesh> meshes_;
};

/// Reads a directory with frames/%06d.png, poses.txt, camera.txt and meta.txt.
/// SequenceFormat with the offending file and line.
Sequence load_sequence(const std::filesystem::path& dir);

/// Called after every step with the frame index, image and estimated poses.
using FrameObserver = std::function<void(std::size_t, const RgbImage&,
                                         const std::vector<RigidTransform>&)>;

/// Tracks frames 1..N-1 from the ground truth at frame 0. A frame succeeds when
/// both errors are below the thresholds; otherwise the object is reset to the
/// ground truth before the next frame. `meshes`, when given, adds vertex errors.
std::vector<SequenceReport> rbot_protocol(PoseTracker& tracker, const Sequence& sequence,
                                          const Thresholds& thresholds = {},
                                          std::span<const TriangleMesh> meshes = {},
                                          const FrameObserver& observer = {});

/// Tracks without resets and scores each object by the vertex-error AUC.
std::vector<SequenceReport> auc_protocol(PoseTracker& tracker, const Sequence& sequence,
                                         std::span<const TriangleMesh> meshes,
                                         const Thresholds& thresholds = {},
                                         const FrameObserver& observer = {});

std::string report_json(std::span<const SequenceReport> reports);
void write_report_json(const std::filesystem::path& path, std::span<const SequenceReport> reports);
void write_report_csv(const std::filesystem::path& path, std::span<const SequenceReport> reports);

/// Contours of the posed meshes drawn over `frame`, one colour per object.
RgbImage draw_overlay(const RgbImage& frame, std::span<const TriangleMesh> meshes,
                      std::span<const RigidTransform> poses, const CameraIntrinsics& k);

}  // namespace regtrack
