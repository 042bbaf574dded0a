#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "regtrack/geometry.hpp"
#include "regtrack/image.hpp"
#include "regtrack/rasterizer.hpp"

namespace regtrack {

struct Pixel {
  int x = -1, y = -1;
  bool operator==(const Pixel&) const = default;
};

/// Foreground pixels of one object that have a 4-neighbour outside of it; the
/// image border counts as outside.
struct ContourSet {
  std::vector<Pixel> pixels;
};

/// Signed Euclidean distance (px) to the nearest contour pixel: negative inside the
/// object, positive outside, zero on the contour itself.
struct SignedDistanceField {
  Image<double> phi;        // +infinity outside `region`
  Image<Pixel> closest;     // nearest contour pixel; (-1, -1) outside `region`
  Image<std::uint8_t> band_mask;  // 1 where |phi| <= band
  RegionOfInterest region;  // rectangle in which the values were computed
  double band = 8.0;
  int object = 0;

  int width() const noexcept { return phi.width(); }
  int height() const noexcept { return phi.height(); }
  bool in_band(int x, int y) const { return band_mask(x, y) != 0; }
};

ContourSet extract_contour(const SilhouetteMask& mask, int object);

/// Exact distance transform over the whole image (two separable lower-envelope
/// passes, rows then columns). Ties between equidistant contour pixels resolve
/// deterministically in envelope order. EmptyRegion when the object has no pixels.
SignedDistanceField signed_distance_transform(const SilhouetteMask& mask, int object,
                                              double band);

/// Same, but only evaluated inside `region` (grown to contain the whole contour so
/// the values there are still exact).
SignedDistanceField signed_distance_transform(const SilhouetteMask& mask, int object,
                                              double band, const RegionOfInterest& region);

/// Central-difference gradient of phi. BorderPixel when a neighbour is outside the
/// image or outside the evaluated region.
Vec2 sdf_gradient(const SignedDistanceField& field, int x, int y);

/// (1/pi) * (-atan(s * phi) + pi/2): ~1 inside (phi << 0), ~0 outside.
inline double smoothed_heaviside(double phi, double s) {
  constexpr double kPi = 3.14159265358979323846;
  return (-std::atan(s * phi) + kPi / 2.0) / kPi;
}

/// |dH/dphi| = s / (pi * phi^2 * s^2 + pi).
inline double smoothed_dirac(double phi, double s) {
  constexpr double kPi = 3.14159265358979323846;
  return s / (kPi * phi * phi * s * s + kPi);
}

/// Raw float32 raster: int32 width, int32 height, float32 band, int32 object,
/// then width*height float32 phi values, row-major, host byte order.
void export_sdf(const std::filesystem::path& path, const SignedDistanceField& field);
SignedDistanceField import_sdf_values(const std::filesystem::path& path);

}  // namespace regtrack
