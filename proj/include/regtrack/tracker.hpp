#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "regtrack/geometry.hpp"
#include "regtrack/image.hpp"
#include "regtrack/mesh.hpp"
#include "regtrack/segmentation.hpp"
#include "regtrack/settings.hpp"

namespace regtrack {

enum class TrackStatus { Tracking, Lost };

struct TrackedObject {
  MeshPair meshes;
  TclcModel model;
  RigidTransform pose;
  TrackStatus status = TrackStatus::Lost;
  std::string last_error;
  std::uint64_t rng_stream = 0;
  std::mt19937_64 rng;
};

struct TrackerState {
  std::vector<TrackedObject> objects;
  TrackerSettings settings;
  CameraIntrinsics camera;
  long frame_index = 0;
  bool initialized = false;
};

/// Frame-loop interface used by the evaluation protocols.
class PoseTracker {
 public:
  virtual ~PoseTracker() = default;
  virtual std::size_t object_count() const = 0;
  virtual void initialize(const RgbImage& frame0, std::span<const RigidTransform> poses0) = 0;
  virtual std::vector<RigidTransform> step(const RgbImage& frame) = 0;
  virtual void reset_pose(std::size_t object, const RigidTransform& pose) = 0;
};

class Tracker : public PoseTracker {
 public:
  Tracker(std::vector<MeshPair> objects, const CameraIntrinsics& camera,
          TrackerSettings settings = {});

  std::size_t object_count() const override { return state_.objects.size(); }

  /// Renders the masks at `poses0` and initialises every qualifying histogram.
  /// Objects that do not show up become Lost with `last_error` set.
  void initialize(const RgbImage& frame0, std::span<const RigidTransform> poses0) override;

  /// Optimises the Tracking objects on `frame`, then updates their histograms at
  /// the new poses. Objects that diverge or leave the image become Lost.
  std::vector<RigidTransform> step(const RgbImage& frame) override;

  /// Overwrites the pose and resumes tracking with the current histograms. The
  /// active regions are re-selected at the new pose unless it equals the old one.
  void reset_pose(std::size_t object, const RigidTransform& pose) override;

  /// Selects the random stream of one object (defaults to its index). Takes effect
  /// at the next initialize.
  void set_rng_stream(std::size_t object, std::uint64_t stream);

  const TrackerState& state() const noexcept { return state_; }
  std::vector<RigidTransform> poses() const;

 private:
  void check_frame(const RgbImage& frame) const;
  void refresh_regions(std::size_t object, const SilhouetteMask& mask, int label,
                       const RgbImage* frame, std::size_t max_count);

  TrackerState state_;
};

}  // namespace regtrack
