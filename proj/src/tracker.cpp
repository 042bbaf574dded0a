#include "regtrack/tracker.hpp"

#include <algorithm>
#include <cstdint>

#include "regtrack/error.hpp"
#include "regtrack/optimizer.hpp"
#include "regtrack/rasterizer.hpp"

namespace regtrack {

namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

void keep_random_subset(std::vector<ActiveRegion>& regions, std::size_t max_count,
                        std::mt19937_64& rng) {
  if (regions.size() <= max_count) return;
  for (std::size_t i = 0; i < max_count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, regions.size() - 1);
    std::swap(regions[i], regions[pick(rng)]);
  }
  regions.resize(max_count);
  std::sort(regions.begin(), regions.end(), [](const ActiveRegion& a, const ActiveRegion& b) {
    return a.vertex_index < b.vertex_index;
  });
}

bool same_pose(const RigidTransform& a, const RigidTransform& b) {
  return a.rotation == b.rotation && a.translation == b.translation;
}

}  // namespace

Tracker::Tracker(std::vector<MeshPair> objects, const CameraIntrinsics& camera,
                 TrackerSettings settings) {
  camera.validate();
  settings.validate();
  state_.camera = camera;
  state_.settings = std::move(settings);
  state_.objects.resize(objects.size());
  for (std::size_t j = 0; j < objects.size(); ++j) {
    if (objects[j].full.empty() || objects[j].reduced.empty())
      throw Error(ErrorCode::EmptyMesh, "object " + std::to_string(j) + " has an empty mesh");
    state_.objects[j].meshes = std::move(objects[j]);
    state_.objects[j].rng_stream = j;
  }
}

void Tracker::set_rng_stream(std::size_t object, std::uint64_t stream) {
  state_.objects.at(object).rng_stream = stream;
}

std::vector<RigidTransform> Tracker::poses() const {
  std::vector<RigidTransform> out;
  for (const auto& o : state_.objects) out.push_back(o.pose);
  return out;
}

void Tracker::check_frame(const RgbImage& frame) const {
  if (frame.width() != state_.camera.width || frame.height() != state_.camera.height)
    throw Error(ErrorCode::DimensionMismatch, "frame size does not match the camera");
}

// Selects centers at the current pose from `mask`, computes their areas and, with
// a frame, updates the histograms. Without a frame only already initialised
// histograms may become active.
void Tracker::refresh_regions(std::size_t j, const SilhouetteMask& mask, int label,
                              const RgbImage* frame, std::size_t max_count) {
  TrackedObject& o = state_.objects[j];
  const TrackerSettings& s = state_.settings;
  const double radius = o.model.radius;
  const SignedDistanceField field =
      signed_distance_transform(mask, label, s.optimization.band);
  ActiveRegionSet active = select_centers(o.meshes.reduced, o.pose, state_.camera, field, radius,
                                          s.center_lambda, max_count, o.rng);
  if (!frame) {
    std::erase_if(active.regions, [&](const ActiveRegion& r) {
      return !o.model.histograms[static_cast<std::size_t>(r.vertex_index)].initialized;
    });
    if (active.regions.empty()) return;
    keep_random_subset(active.regions, s.max_centers, o.rng);
  }
  compute_region_areas(active, field, radius, s.optimization.heaviside_pitch);
  if (frame)
    update_model(o.model, *frame, mask, label, active);
  else
    o.model.active = std::move(active);
}

void Tracker::initialize(const RgbImage& frame0, std::span<const RigidTransform> poses0) {
  check_frame(frame0);
  if (poses0.size() != state_.objects.size())
    throw Error(ErrorCode::DimensionMismatch, "one initial pose per object required");
  const TrackerSettings& s = state_.settings;
  const double radius = s.radius_for(state_.camera);
  std::vector<SceneObject> scene;
  for (std::size_t j = 0; j < state_.objects.size(); ++j) {
    TrackedObject& o = state_.objects[j];
    o.pose = poses0[j];
    o.model = TclcModel::create(o.meshes.reduced.vertex_count(), radius, s.alpha_f, s.alpha_b);
    o.rng = make_rng(s.seed, o.rng_stream);
    o.status = TrackStatus::Tracking;
    o.last_error.clear();
    scene.push_back({&o.meshes.full, o.pose});
  }
  const SceneRender render = render_scene(scene, state_.camera, s.optimization.frustum);
  for (std::size_t j = 0; j < state_.objects.size(); ++j) {
    TrackedObject& o = state_.objects[j];
    try {
      refresh_regions(j, render.mask, static_cast<int>(j + 1), &frame0, SIZE_MAX);
      if (o.model.initialized_count() == 0)
        throw Error(ErrorCode::NotVisible, "no histogram could be initialised");
      // all qualifying histograms are initialised; only a subset drives the next frame
      keep_random_subset(o.model.active.regions, s.max_centers, o.rng);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyRegion && e.code() != ErrorCode::NoVisibleCenters &&
          e.code() != ErrorCode::NotVisible)
        throw;
      o.status = TrackStatus::Lost;
      o.last_error = Error(ErrorCode::NotVisible, e.what()).what();
    }
  }
  state_.frame_index = 0;
  state_.initialized = true;
}

std::vector<RigidTransform> Tracker::step(const RgbImage& frame) {
  if (!state_.initialized) throw Error(ErrorCode::Uninitialized, "tracker not initialised");
  check_frame(frame);
  const TrackerSettings& s = state_.settings;

  std::vector<std::size_t> tracking;
  std::vector<OptimizerObject> inputs;
  for (std::size_t j = 0; j < state_.objects.size(); ++j) {
    TrackedObject& o = state_.objects[j];
    if (o.status != TrackStatus::Tracking) continue;
    tracking.push_back(j);
    inputs.push_back({&o.meshes, &o.model, o.pose});
  }
  if (!tracking.empty()) {
    const auto results = optimize(frame, inputs, state_.camera, s.optimization);
    for (std::size_t i = 0; i < tracking.size(); ++i) {
      TrackedObject& o = state_.objects[tracking[i]];
      o.pose = results[i].pose;
      if (results[i].status == OptimizationStatus::Diverged) {
        o.status = TrackStatus::Lost;
        o.last_error = Error(ErrorCode::TrackingDiverged, results[i].message).what();
      } else if (results[i].status == OptimizationStatus::NotVisible) {
        o.status = TrackStatus::Lost;
        o.last_error = Error(ErrorCode::NotVisible, results[i].message).what();
      }
    }

    std::vector<SceneObject> scene;
    std::vector<int> label(state_.objects.size(), 0);
    for (std::size_t j : tracking) {
      TrackedObject& o = state_.objects[j];
      if (o.status != TrackStatus::Tracking) continue;
      scene.push_back({&o.meshes.full, o.pose});
      label[j] = static_cast<int>(scene.size());
    }
    if (!scene.empty()) {
      const SceneRender render = render_scene(scene, state_.camera, s.optimization.frustum);
      for (std::size_t j : tracking) {
        TrackedObject& o = state_.objects[j];
        if (o.status != TrackStatus::Tracking) continue;
        try {
          refresh_regions(j, render.mask, label[j], &frame, s.max_centers);
        } catch (const Error& e) {
          // hidden behind another object or no center near the contour: keep the model
          if (e.code() != ErrorCode::EmptyRegion && e.code() != ErrorCode::NoVisibleCenters)
            throw;
        }
      }
    }
  }
  ++state_.frame_index;
  return poses();
}

void Tracker::reset_pose(std::size_t object, const RigidTransform& pose) {
  TrackedObject& o = state_.objects.at(object);
  const bool moved = !same_pose(o.pose, pose);
  o.pose = pose;
  o.status = TrackStatus::Tracking;
  o.last_error.clear();
  if (!moved || !state_.initialized || o.model.initialized_count() == 0) return;
  std::vector<SceneObject> scene;
  int label = 0;
  for (std::size_t j = 0; j < state_.objects.size(); ++j) {
    const TrackedObject& other = state_.objects[j];
    if (j != object && other.status != TrackStatus::Tracking) continue;
    scene.push_back({&other.meshes.full, other.pose});
    if (j == object) label = static_cast<int>(scene.size());
  }
  const SceneRender render =
      render_scene(scene, state_.camera, state_.settings.optimization.frustum);
  try {
    refresh_regions(object, render.mask, label, nullptr, SIZE_MAX);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyRegion && e.code() != ErrorCode::NoVisibleCenters) throw;
  }
}

}  // namespace regtrack
