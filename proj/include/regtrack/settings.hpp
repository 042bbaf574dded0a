#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "regtrack/optimizer.hpp"

namespace regtrack {

struct TrackerSettings {
  OptimizationSettings optimization;
  /// Local region radius (px) for a 640x512 image; scaled with sqrt of the pixel count.
  double histogram_radius = 40.0;
  double alpha_f = 0.1;
  double alpha_b = 0.2;
  /// Centers lie within center_lambda * radius of the contour.
  double center_lambda = 0.1;
  std::size_t max_centers = 100;
  std::uint64_t seed = 0;

  void validate() const;
  double radius_for(const CameraIntrinsics& k) const;
};

/// Applies one `key = value` assignment. InvalidArgument for unknown keys or bad values.
void apply_setting(TrackerSettings& settings, const std::string& key, const std::string& value);

/// Reads `key = value` lines; '#' starts a comment. Unspecified keys keep their defaults.
TrackerSettings load_settings(const std::filesystem::path& path);

std::string format_settings(const TrackerSettings& settings);

}  // namespace regtrack
