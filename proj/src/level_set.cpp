#include "regtrack/level_set.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "regtrack/error.hpp"

namespace regtrack {

namespace {

constexpr std::int64_t kNoSite = std::numeric_limits<std::int64_t>::max() / 4;

// 1D squared distance transform: out[q] = min_p (q - p)^2 + f[p], arg[q] = minimising
// p. Entries equal to kNoSite are not sites. Lower envelope of parabolas.
class EnvelopeTransform {
 public:
  void run(const std::vector<std::int64_t>& f, std::vector<std::int64_t>& out,
           std::vector<int>& arg) {
    const int n = static_cast<int>(f.size());
    out.assign(static_cast<std::size_t>(n), kNoSite);
    arg.assign(static_cast<std::size_t>(n), -1);
    v_.resize(static_cast<std::size_t>(n));
    z_.resize(static_cast<std::size_t>(n) + 1);
    int k = -1;
    for (int q = 0; q < n; ++q) {
      const std::int64_t fq = f[static_cast<std::size_t>(q)];
      if (fq >= kNoSite) continue;
      if (k < 0) {
        k = 0;
        v_[0] = q;
        z_[0] = -std::numeric_limits<double>::infinity();
        z_[1] = std::numeric_limits<double>::infinity();
        continue;
      }
      double s = intersect(f, q, v_[static_cast<std::size_t>(k)]);
      while (k >= 0 && s <= z_[static_cast<std::size_t>(k)]) {
        --k;
        if (k >= 0) s = intersect(f, q, v_[static_cast<std::size_t>(k)]);
      }
      if (k < 0) {
        k = 0;
        v_[0] = q;
        z_[0] = -std::numeric_limits<double>::infinity();
      } else {
        ++k;
        v_[static_cast<std::size_t>(k)] = q;
        z_[static_cast<std::size_t>(k)] = s;
      }
      z_[static_cast<std::size_t>(k) + 1] = std::numeric_limits<double>::infinity();
    }
    if (k < 0) return;
    int j = 0;
    for (int q = 0; q < n; ++q) {
      while (z_[static_cast<std::size_t>(j) + 1] < q) ++j;
      const int p = v_[static_cast<std::size_t>(j)];
      const std::int64_t d = static_cast<std::int64_t>(q - p);
      out[static_cast<std::size_t>(q)] = d * d + f[static_cast<std::size_t>(p)];
      arg[static_cast<std::size_t>(q)] = p;
    }
  }

 private:
  static double intersect(const std::vector<std::int64_t>& f, int q, int p) {
    const double num = double(f[static_cast<std::size_t>(q)] + std::int64_t(q) * q) -
                       double(f[static_cast<std::size_t>(p)] + std::int64_t(p) * p);
    return num / double(2 * (q - p));
  }

  std::vector<int> v_;
  std::vector<double> z_;
};

bool is_contour(const SilhouetteMask& mask, int x, int y, std::uint16_t j) {
  if (mask(x, y) != j) return false;
  const int w = mask.width();
  const int h = mask.height();
  if (x == 0 || y == 0 || x == w - 1 || y == h - 1) return true;
  return mask(x - 1, y) != j || mask(x + 1, y) != j || mask(x, y - 1) != j ||
         mask(x, y + 1) != j;
}

}  // namespace

ContourSet extract_contour(const SilhouetteMask& mask, int object) {
  ContourSet contour;
  const auto j = static_cast<std::uint16_t>(object);
  bool any = false;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask(x, y) != j) continue;
      any = true;
      if (is_contour(mask, x, y, j)) contour.pixels.push_back({x, y});
    }
  }
  if (object <= 0 || !any)
    throw Error(ErrorCode::EmptyRegion, "object " + std::to_string(object) + " has no pixels");
  return contour;
}

SignedDistanceField signed_distance_transform(const SilhouetteMask& mask, int object,
                                              double band) {
  return signed_distance_transform(mask, object, band,
                                   RegionOfInterest{0, 0, mask.width(), mask.height()});
}

SignedDistanceField signed_distance_transform(const SilhouetteMask& mask, int object,
                                              double band, const RegionOfInterest& requested) {
  const ContourSet contour = extract_contour(mask, object);
  const int w = mask.width();
  const int h = mask.height();

  RegionOfInterest region = requested.clipped(w, h);
  for (const auto& p : contour.pixels) {
    region.x0 = std::min(region.x0, p.x);
    region.y0 = std::min(region.y0, p.y);
    region.x1 = std::max(region.x1, p.x + 1);
    region.y1 = std::max(region.y1, p.y + 1);
  }
  const int rw = region.x1 - region.x0;
  const int rh = region.y1 - region.y0;

  SignedDistanceField field;
  field.phi = Image<double>(w, h, std::numeric_limits<double>::infinity());
  field.closest = Image<Pixel>(w, h, Pixel{});
  field.band_mask = Image<std::uint8_t>(w, h, 0);
  field.region = region;
  field.band = band;
  field.object = object;

  // Pass 1, per row: squared distance to the nearest contour pixel in that row.
  Image<std::int64_t> row_dist(rw, rh, kNoSite);
  Image<int> row_site(rw, rh, -1);  // column of that pixel, region-relative
  Image<std::uint8_t> site(rw, rh, 0);
  for (const auto& p : contour.pixels) site(p.x - region.x0, p.y - region.y0) = 1;

  EnvelopeTransform envelope;
  std::vector<std::int64_t> f;
  std::vector<std::int64_t> d;
  std::vector<int> arg;
  f.resize(static_cast<std::size_t>(rw));
  for (int y = 0; y < rh; ++y) {
    for (int x = 0; x < rw; ++x) f[static_cast<std::size_t>(x)] = site(x, y) ? 0 : kNoSite;
    envelope.run(f, d, arg);
    for (int x = 0; x < rw; ++x) {
      row_dist(x, y) = d[static_cast<std::size_t>(x)];
      row_site(x, y) = arg[static_cast<std::size_t>(x)];
    }
  }

  // Pass 2, per column over the row results.
  const auto j = static_cast<std::uint16_t>(object);
  f.resize(static_cast<std::size_t>(rh));
  for (int x = 0; x < rw; ++x) {
    for (int y = 0; y < rh; ++y) f[static_cast<std::size_t>(y)] = row_dist(x, y);
    envelope.run(f, d, arg);
    for (int y = 0; y < rh; ++y) {
      const int gx = x + region.x0;
      const int gy = y + region.y0;
      const int src_row = arg[static_cast<std::size_t>(y)];
      const double dist = std::sqrt(double(d[static_cast<std::size_t>(y)]));
      const bool inside = mask(gx, gy) == j;
      const double phi = dist == 0.0 ? 0.0 : (inside ? -dist : dist);
      field.phi(gx, gy) = phi;
      field.closest(gx, gy) = Pixel{row_site(x, src_row) + region.x0, src_row + region.y0};
      field.band_mask(gx, gy) = std::abs(phi) <= band ? 1 : 0;
    }
  }
  return field;
}

Vec2 sdf_gradient(const SignedDistanceField& field, int x, int y) {
  if (x < 1 || y < 1 || x >= field.width() - 1 || y >= field.height() - 1)
    throw Error(ErrorCode::BorderPixel,
                "pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") on the border");
  const double l = field.phi(x - 1, y);
  const double r = field.phi(x + 1, y);
  const double u = field.phi(x, y - 1);
  const double b = field.phi(x, y + 1);
  if (!std::isfinite(l) || !std::isfinite(r) || !std::isfinite(u) || !std::isfinite(b))
    throw Error(ErrorCode::BorderPixel, "neighbour outside the evaluated region");
  return {(r - l) / 2.0, (b - u) / 2.0};
}

void export_sdf(const std::filesystem::path& path, const SignedDistanceField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  const std::int32_t w = field.width();
  const std::int32_t h = field.height();
  const float band = static_cast<float>(field.band);
  const std::int32_t object = field.object;
  out.write(reinterpret_cast<const char*>(&w), 4);
  out.write(reinterpret_cast<const char*>(&h), 4);
  out.write(reinterpret_cast<const char*>(&band), 4);
  out.write(reinterpret_cast<const char*>(&object), 4);
  std::vector<float> values(field.phi.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<float>(field.phi.data()[i]);
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
}

SignedDistanceField import_sdf_values(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::int32_t w = 0, h = 0, object = 0;
  float band = 0.f;
  in.read(reinterpret_cast<char*>(&w), 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  in.read(reinterpret_cast<char*>(&band), 4);
  in.read(reinterpret_cast<char*>(&object), 4);
  if (!in || w < 0 || h < 0) throw Error(ErrorCode::Io, "bad SDF header in " + path.string());
  std::vector<float> values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!in) throw Error(ErrorCode::Io, "truncated SDF raster " + path.string());
  SignedDistanceField field;
  field.phi = Image<double>(w, h);
  for (std::size_t i = 0; i < values.size(); ++i) field.phi.data()[i] = values[i];
  field.closest = Image<Pixel>(w, h);
  field.band_mask = Image<std::uint8_t>(w, h, 0);
  for (std::size_t i = 0; i < values.size(); ++i)
    field.band_mask.data()[i] = std::abs(values[i]) <= band ? 1 : 0;
  field.region = {0, 0, w, h};
  field.band = band;
  field.object = object;
  return field;
}

}  // namespace regtrack
