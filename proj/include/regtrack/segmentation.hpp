#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <utility>
#include <vector>

#include "regtrack/geometry.hpp"
#include "regtrack/image.hpp"
#include "regtrack/level_set.hpp"
#include "regtrack/mesh.hpp"
#include "regtrack/rasterizer.hpp"

namespace regtrack {

inline constexpr int kBinsPerChannel = 32;
inline constexpr int kHistogramBins = kBinsPerChannel * kBinsPerChannel * kBinsPerChannel;

/// RGB quantised to 32 levels per channel (value / 8).
inline int color_bin(const Rgb& c) {
  return (c.r >> 3) * kBinsPerChannel * kBinsPerChannel + (c.g >> 3) * kBinsPerChannel +
         (c.b >> 3);
}

/// 32x32x32 RGB histogram. Only non-zero bins are stored, sorted by bin index.
class ColorHistogram {
 public:
  using Entry = std::pair<std::uint16_t, double>;

  ColorHistogram() = default;
  /// Counts the given bins (any order, repeats allowed).
  static ColorHistogram from_bins(std::vector<std::uint16_t> bins);
  static ColorHistogram from_dense(const std::vector<double>& dense);

  double operator[](int bin) const;
  double total() const noexcept { return total_; }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::vector<double> dense() const;

  /// Scales the bins to sum to one; no-op on an empty histogram.
  void normalize();
  /// (1 - alpha) * previous + alpha * fresh, bin by bin.
  static ColorHistogram blend(const ColorHistogram& previous, const ColorHistogram& fresh,
                              double alpha);

  bool operator==(const ColorHistogram&) const = default;

 private:
  void recompute_total();

  std::vector<Entry> entries_;
  double total_ = 0.0;
};

/// Foreground/background histogram pair anchored at one reduced-mesh vertex.
struct TclcHistogram {
  int vertex_index = 0;
  ColorHistogram fg;
  ColorHistogram bg;
  bool initialized = false;
};

/// A local region Omega_i = {x : |x - center| < radius} for the current frame,
/// together with its smoothed foreground and background areas.
struct ActiveRegion {
  int vertex_index = 0;
  Pixel center;
  double eta_f = 0.0;
  double eta_b = 0.0;
};

struct ActiveRegionSet {
  std::vector<ActiveRegion> regions;
};

struct TclcModel {
  std::vector<TclcHistogram> histograms;  // one per reduced-mesh vertex
  double radius = 40.0;                   // px at full resolution
  double alpha_f = 0.1;
  double alpha_b = 0.2;
  /// Regions updated last; they drive posterior evaluation on the next frame.
  ActiveRegionSet active;

  static TclcModel create(std::size_t vertex_count, double radius, double alpha_f,
                          double alpha_b);
  std::size_t initialized_count() const;
};

/// Projected reduced-mesh vertices whose distance to the contour is at most
/// lambda * radius; a seeded uniform subset of `max_count` of them when more
/// qualify. NoVisibleCenters when none qualify.
ActiveRegionSet select_centers(const TriangleMesh& reduced, const RigidTransform& pose,
                               const CameraIntrinsics& k, const SignedDistanceField& field,
                               double radius, double lambda, std::size_t max_count,
                               std::mt19937_64& rng);

/// Fills eta_f = sum H_e(phi) and eta_b = sum (1 - H_e(phi)) over each region's disc.
void compute_region_areas(ActiveRegionSet& active, const SignedDistanceField& field,
                          double radius, double heaviside_pitch);

/// Visits every in-image pixel with |x - center| < radius, row by row.
template <typename Visit>
void for_each_disc_pixel(int width, int height, Pixel center, double radius, Visit&& visit);

struct LocalCounts {
  ColorHistogram fg;
  ColorHistogram bg;
};

/// Raw colour counts of the disc, split by mask(x) == object.
LocalCounts scan_local_region(const RgbImage& frame, const SilhouetteMask& mask, int object,
                              Pixel center, double radius);

/// Initialises or blends the histograms of every active region, leaves all others
/// untouched, and stores the regions that end up initialised as `model.active`.
void update_model(TclcModel& model, const RgbImage& frame, const SilhouetteMask& mask,
                  int object, const ActiveRegionSet& active);

/// Per-region posteriors P(y|M_f) / (eta_f P(y|M_f) + eta_b P(y|M_b)) and the
/// background analogue. The denominator is floored at 1e-12.
std::pair<double, double> local_posteriors(const TclcHistogram& h, int bin, double eta_f,
                                           double eta_b);

/// Mean of the local posteriors over every active region whose disc contains `x`.
/// NotCovered when no disc does.
std::pair<double, double> averaged_posteriors(const RgbImage& frame, Pixel x,
                                              const TclcModel& model,
                                              const ActiveRegionSet& active);

/// Evaluates averaged posteriors on a pyramid level where centers and radius are
/// scaled by `scale` (1, 1/2, 1/4). With `normalize` the averaged pair is rescaled
/// to sum to one (equal halves when both vanish).
class PosteriorEvaluator {
 public:
  PosteriorEvaluator(const TclcModel& model, const ActiveRegionSet& active, double scale,
                     bool normalize = false);
  /// False when no region covers (x, y).
  bool evaluate(const Rgb& color, int x, int y, double& pf, double& pb) const;
  bool empty() const noexcept { return regions_.empty(); }

 private:
  struct Scaled {
    double cx, cy, radius_sq;
    const TclcHistogram* histogram;
    double eta_f, eta_b;
  };
  std::vector<Scaled> regions_;
  bool normalize_ = false;
};

/// Binary model file: "TCLC" magic, uint32 version, uint32 record count, float64
/// radius, alpha_f, alpha_b; then per record uint32 vertex index, uint8 initialised
/// flag, 32768 float64 foreground bins and 32768 float64 background bins.
void save_model(const std::filesystem::path& path, const TclcModel& model);
TclcModel load_model(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

template <typename Visit>
void for_each_disc_pixel(int width, int height, Pixel center, double radius, Visit&& visit) {
  if (!(radius > 0.0)) return;
  const double r2 = radius * radius;
  const int reach = static_cast<int>(std::ceil(radius));
  int half = reach;  // shrinks monotonically as |dy| grows
  for (int dy = 0; dy <= reach; ++dy) {
    while (half >= 0 && double(half) * half + double(dy) * dy >= r2) --half;
    if (half < 0) break;
    for (int sign : {1, -1}) {
      if (dy == 0 && sign < 0) continue;
      const int y = center.y + sign * dy;
      if (y < 0 || y >= height) continue;
      const int x0 = std::max(center.x - half, 0);
      const int x1 = std::min(center.x + half, width - 1);
      for (int x = x0; x <= x1; ++x) visit(x, y);
    }
  }
}

}  // namespace regtrack
