#include "regtrack/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "regtrack/error.hpp"

namespace regtrack {

// ColorHistogram ------------------------------------------------------------

ColorHistogram ColorHistogram::from_bins(std::vector<std::uint16_t> bins) {
  std::sort(bins.begin(), bins.end());
  ColorHistogram h;
  for (std::size_t i = 0; i < bins.size();) {
    std::size_t j = i;
    while (j < bins.size() && bins[j] == bins[i]) ++j;
    h.entries_.emplace_back(bins[i], double(j - i));
    i = j;
  }
  h.total_ = double(bins.size());
  return h;
}

ColorHistogram ColorHistogram::from_dense(const std::vector<double>& dense) {
  if (dense.size() != static_cast<std::size_t>(kHistogramBins))
    throw Error(ErrorCode::DimensionMismatch, "dense histogram needs 32768 bins");
  ColorHistogram h;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] < 0.0) throw Error(ErrorCode::InvalidArgument, "negative histogram bin");
    if (dense[i] > 0.0) h.entries_.emplace_back(static_cast<std::uint16_t>(i), dense[i]);
  }
  h.recompute_total();
  return h;
}

double ColorHistogram::operator[](int bin) const {
  const auto it = std::lower_bound(
      entries_.begin(), entries_.end(), bin,
      [](const Entry& e, int b) { return static_cast<int>(e.first) < b; });
  return (it != entries_.end() && it->first == bin) ? it->second : 0.0;
}

std::vector<double> ColorHistogram::dense() const {
  std::vector<double> out(static_cast<std::size_t>(kHistogramBins), 0.0);
  for (const auto& [bin, value] : entries_) out[bin] = value;
  return out;
}

void ColorHistogram::recompute_total() {
  total_ = 0.0;
  for (const auto& e : entries_) total_ += e.second;
}

void ColorHistogram::normalize() {
  if (total_ <= 0.0) return;
  for (auto& e : entries_) e.second /= total_;
  recompute_total();
}

ColorHistogram ColorHistogram::blend(const ColorHistogram& previous, const ColorHistogram& fresh,
                                     double alpha) {
  ColorHistogram out;
  out.entries_.reserve(previous.entries_.size() + fresh.entries_.size());
  auto a = previous.entries_.begin();
  auto b = fresh.entries_.begin();
  const double keep = 1.0 - alpha;
  while (a != previous.entries_.end() || b != fresh.entries_.end()) {
    Entry e;
    if (b == fresh.entries_.end() || (a != previous.entries_.end() && a->first < b->first)) {
      e = {a->first, keep * a->second};
      ++a;
    } else if (a == previous.entries_.end() || b->first < a->first) {
      e = {b->first, alpha * b->second};
      ++b;
    } else {
      e = {a->first, keep * a->second + alpha * b->second};
      ++a;
      ++b;
    }
    if (e.second > 0.0) out.entries_.push_back(e);
  }
  out.recompute_total();
  return out;
}

// TclcModel -----------------------------------------------------------------

TclcModel TclcModel::create(std::size_t vertex_count, double radius, double alpha_f,
                            double alpha_b) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "histogram radius must be > 0");
  if (alpha_f < 0.0 || alpha_f > 1.0 || alpha_b < 0.0 || alpha_b > 1.0)
    throw Error(ErrorCode::InvalidArgument, "learning rates must lie in [0, 1]");
  TclcModel model;
  model.radius = radius;
  model.alpha_f = alpha_f;
  model.alpha_b = alpha_b;
  model.histograms.resize(vertex_count);
  for (std::size_t i = 0; i < vertex_count; ++i) model.histograms[i].vertex_index = static_cast<int>(i);
  return model;
}

std::size_t TclcModel::initialized_count() const {
  return static_cast<std::size_t>(std::count_if(histograms.begin(), histograms.end(),
                                                [](const TclcHistogram& h) { return h.initialized; }));
}

// Region selection ----------------------------------------------------------

ActiveRegionSet select_centers(const TriangleMesh& reduced, const RigidTransform& pose,
                               const CameraIntrinsics& k, const SignedDistanceField& field,
                               double radius, double lambda, std::size_t max_count,
                               std::mt19937_64& rng) {
  const double limit = lambda * radius;
  ActiveRegionSet candidates;
  const auto& verts = reduced.vertices();
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const Vec3 p = pose.apply(verts[i]);
    if (!(p.z() > 0.0)) continue;
    const Vec2 px = project(k, p);
    if (!(std::abs(px.x()) < 1e9 && std::abs(px.y()) < 1e9)) continue;
    const int x = static_cast<int>(std::lround(px.x()));
    const int y = static_cast<int>(std::lround(px.y()));
    if (x < 0 || y < 0 || x >= field.width() || y >= field.height()) continue;
    const double phi = field.phi(x, y);
    if (std::abs(phi) <= limit) candidates.regions.push_back({static_cast<int>(i), {x, y}, 0.0, 0.0});
  }
  if (candidates.regions.empty())
    throw Error(ErrorCode::NoVisibleCenters, "no model vertex projects near the contour");
  if (candidates.regions.size() > max_count) {
    // Partial Fisher-Yates: the first max_count entries become a uniform sample.
    auto& r = candidates.regions;
    for (std::size_t i = 0; i < max_count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, r.size() - 1);
      std::swap(r[i], r[pick(rng)]);
    }
    r.resize(max_count);
    std::sort(r.begin(), r.end(),
              [](const ActiveRegion& a, const ActiveRegion& b) { return a.vertex_index < b.vertex_index; });
  }
  return candidates;
}

void compute_region_areas(ActiveRegionSet& active, const SignedDistanceField& field,
                          double radius, double heaviside_pitch) {
  for (auto& region : active.regions) {
    double eta_f = 0.0;
    double eta_b = 0.0;
    for_each_disc_pixel(field.width(), field.height(), region.center, radius, [&](int x, int y) {
      const double h = smoothed_heaviside(field.phi(x, y), heaviside_pitch);
      eta_f += h;
      eta_b += 1.0 - h;
    });
    region.eta_f = eta_f;
    region.eta_b = eta_b;
  }
}

// Histogram construction ----------------------------------------------------

LocalCounts scan_local_region(const RgbImage& frame, const SilhouetteMask& mask, int object,
                              Pixel center, double radius) {
  if (frame.width() != mask.width() || frame.height() != mask.height())
    throw Error(ErrorCode::DimensionMismatch, "frame and mask sizes differ");
  std::vector<std::uint16_t> fg;
  std::vector<std::uint16_t> bg;
  const auto j = static_cast<std::uint16_t>(object);
  for_each_disc_pixel(frame.width(), frame.height(), center, radius, [&](int x, int y) {
    const auto bin = static_cast<std::uint16_t>(color_bin(frame(x, y)));
    (mask(x, y) == j ? fg : bg).push_back(bin);
  });
  return {ColorHistogram::from_bins(std::move(fg)), ColorHistogram::from_bins(std::move(bg))};
}

void update_model(TclcModel& model, const RgbImage& frame, const SilhouetteMask& mask,
                  int object, const ActiveRegionSet& active) {
  ActiveRegionSet kept;
  for (const auto& region : active.regions) {
    if (region.vertex_index < 0 ||
        static_cast<std::size_t>(region.vertex_index) >= model.histograms.size())
      throw Error(ErrorCode::InvalidArgument, "region vertex index out of range");
    TclcHistogram& h = model.histograms[static_cast<std::size_t>(region.vertex_index)];
    LocalCounts counts = scan_local_region(frame, mask, object, region.center, model.radius);
    counts.fg.normalize();
    counts.bg.normalize();
    if (!h.initialized) {
      if (counts.fg.empty() || counts.bg.empty()) continue;
      h.fg = std::move(counts.fg);
      h.bg = std::move(counts.bg);
      h.initialized = true;
    } else {
      if (!counts.fg.empty()) h.fg = ColorHistogram::blend(h.fg, counts.fg, model.alpha_f);
      if (!counts.bg.empty()) h.bg = ColorHistogram::blend(h.bg, counts.bg, model.alpha_b);
    }
    kept.regions.push_back(region);
  }
  model.active = std::move(kept);
}

// Posteriors ----------------------------------------------------------------

std::pair<double, double> local_posteriors(const TclcHistogram& h, int bin, double eta_f,
                                           double eta_b) {
  if (!h.initialized)
    throw Error(ErrorCode::Uninitialized,
                "histogram of vertex " + std::to_string(h.vertex_index) + " is not initialised");
  const double lf = h.fg[bin];
  const double lb = h.bg[bin];
  const double denom = std::max(eta_f * lf + eta_b * lb, 1e-12);
  return {lf / denom, lb / denom};
}

PosteriorEvaluator::PosteriorEvaluator(const TclcModel& model, const ActiveRegionSet& active,
                                       double scale, bool normalize)
    : normalize_(normalize) {
  const double r = model.radius * scale;
  for (const auto& region : active.regions) {
    const auto& h = model.histograms.at(static_cast<std::size_t>(region.vertex_index));
    if (!h.initialized) continue;
    regions_.push_back({region.center.x * scale, region.center.y * scale, r * r, &h,
                        region.eta_f, region.eta_b});
  }
}

bool PosteriorEvaluator::evaluate(const Rgb& color, int x, int y, double& pf, double& pb) const {
  const int bin = color_bin(color);
  double sum_f = 0.0;
  double sum_b = 0.0;
  int count = 0;
  for (const auto& r : regions_) {
    const double dx = x - r.cx;
    const double dy = y - r.cy;
    if (dx * dx + dy * dy >= r.radius_sq) continue;
    const auto [f, b] = local_posteriors(*r.histogram, bin, r.eta_f, r.eta_b);
    sum_f += f;
    sum_b += b;
    ++count;
  }
  if (count == 0) return false;
  pf = sum_f / count;
  pb = sum_b / count;
  if (normalize_) {
    const double total = pf + pb;
    if (total > 0.0) {
      pf /= total;
      pb /= total;
    } else {
      pf = pb = 0.5;
    }
  }
  return true;
}

std::pair<double, double> averaged_posteriors(const RgbImage& frame, Pixel x,
                                              const TclcModel& model,
                                              const ActiveRegionSet& active) {
  for (const auto& region : active.regions) {
    const auto& h = model.histograms.at(static_cast<std::size_t>(region.vertex_index));
    if (!h.initialized) throw Error(ErrorCode::Uninitialized, "active region without histogram");
  }
  PosteriorEvaluator evaluator(model, active, 1.0, false);
  double pf = 0.0;
  double pb = 0.0;
  if (!evaluator.evaluate(frame(x.x, x.y), x.x, x.y, pf, pb))
    throw Error(ErrorCode::NotCovered, "pixel lies in no active region");
  return {pf, pb};
}

// Serialisation -------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'T', 'C', 'L', 'C'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(ErrorCode::Io, "truncated model file " + path.string());
  return v;
}

}  // namespace

void save_model(const std::filesystem::path& path, const TclcModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, static_cast<std::uint32_t>(model.histograms.size()));
  put(out, model.radius);
  put(out, model.alpha_f);
  put(out, model.alpha_b);
  for (const auto& h : model.histograms) {
    put(out, static_cast<std::uint32_t>(h.vertex_index));
    put(out, static_cast<std::uint8_t>(h.initialized ? 1 : 0));
    for (const auto* hist : {&h.fg, &h.bg}) {
      const auto dense = hist->dense();
      out.write(reinterpret_cast<const char*>(dense.data()),
                static_cast<std::streamsize>(dense.size() * sizeof(double)));
    }
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

TclcModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw Error(ErrorCode::Io, "not a histogram model file: " + path.string());
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion)
    throw Error(ErrorCode::Io, "unsupported model version " + std::to_string(version));
  const auto count = get<std::uint32_t>(in, path);
  TclcModel model;
  model.radius = get<double>(in, path);
  model.alpha_f = get<double>(in, path);
  model.alpha_b = get<double>(in, path);
  model.histograms.resize(count);
  std::vector<double> dense(static_cast<std::size_t>(kHistogramBins));
  for (auto& h : model.histograms) {
    h.vertex_index = static_cast<int>(get<std::uint32_t>(in, path));
    h.initialized = get<std::uint8_t>(in, path) != 0;
    for (auto* hist : {&h.fg, &h.bg}) {
      in.read(reinterpret_cast<char*>(dense.data()),
              static_cast<std::streamsize>(dense.size() * sizeof(double)));
      if (!in) throw Error(ErrorCode::Io, "truncated model file " + path.string());
      *hist = ColorHistogram::from_dense(dense);
    }
  }
  return model;
}

}  // namespace regtrack
