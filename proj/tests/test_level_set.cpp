#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "regtrack/level_set.hpp"

using namespace regtrack;
using oracle::error_of;

namespace {

// The field must be exact and the reported closest pixel must realise it.
void check_against_oracle(const SilhouetteMask& mask, int object, const SignedDistanceField& f) {
  const auto d2 = oracle::squared_distance(mask, object);
  for (int y = f.region.y0; y < f.region.y1; ++y)
    for (int x = f.region.x0; x < f.region.x1; ++x) {
      const double d = std::sqrt(double(d2(x, y)));
      const double expected = mask(x, y) == object ? -d : d;
      REQUIRE(f.phi(x, y) == expected);
      const Pixel c = f.closest(x, y);
      REQUIRE(mask(c.x, c.y) == object);
      const std::int64_t dx = x - c.x, dy = y - c.y;
      REQUIRE(dx * dx + dy * dy == d2(x, y));
      CHECK(f.in_band(x, y) == (d <= f.band));
    }
}

}  // namespace

TEST_CASE("single pixel object") {
  SilhouetteMask m(11, 11, 0);
  m(5, 5) = 1;
  const auto f = signed_distance_transform(m, 1, 8.0);
  CHECK(f.phi(5, 5) == 0.0);
  CHECK(f.phi(5, 8) == 3.0);
  CHECK(f.phi(8, 9) == 5.0);
  CHECK(f.phi(0, 0) == doctest::Approx(std::sqrt(50.0)));
  CHECK(f.closest(0, 10) == Pixel{5, 5});
  CHECK(extract_contour(m, 1).pixels.size() == 1);
}

TEST_CASE("half plane") {
  SilhouetteMask m(20, 30, 0);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 10; ++x) m(x, y) = 1;
  const auto f = signed_distance_transform(m, 1, 8.0);
  for (int y = 10; y < 20; ++y) {
    // the image border also bounds the object, so stay away from it
    for (int x = 5; x < 20; ++x) CHECK(f.phi(x, y) == double(x - 9));
    const Vec2 g = sdf_gradient(f, 12, y);
    CHECK(g.x() == doctest::Approx(1.0));
    CHECK(g.y() == doctest::Approx(0.0));
  }
}

TEST_CASE("full 3x3 block") {
  SilhouetteMask m(7, 7, 0);
  for (int y = 2; y < 5; ++y)
    for (int x = 2; x < 5; ++x) m(x, y) = 2;
  CHECK(extract_contour(m, 2).pixels.size() == 8);
  const auto f = signed_distance_transform(m, 2, 8.0);
  CHECK(f.phi(3, 3) == -1.0);
  CHECK(f.phi(2, 2) == 0.0);
  CHECK(f.phi(0, 3) == 2.0);
  CHECK(f.object == 2);
}

TEST_CASE("an object filling the image has its border as contour") {
  SilhouetteMask m(5, 5, 1);
  const auto f = signed_distance_transform(m, 1, 8.0);
  CHECK(f.phi(2, 2) == -2.0);
  CHECK(f.phi(0, 3) == 0.0);
}

TEST_CASE("missing object") {
  SilhouetteMask m(5, 5, 0);
  m(1, 1) = 2;
  CHECK(error_of([&] { signed_distance_transform(m, 1, 8.0); }) == ErrorCode::EmptyRegion);
  CHECK(error_of([&] { extract_contour(m, 1); }) == ErrorCode::EmptyRegion);
}

TEST_CASE("exact on random masks") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const int w = 8 + int(rng() % 40), h = 8 + int(rng() % 40);
    const auto m = oracle::random_mask(w, h, rng, 2);
    for (int object : {1, 2}) {
      if (std::find(m.data().begin(), m.data().end(), object) == m.data().end()) continue;
      const auto f = signed_distance_transform(m, object, 4.0);
      check_against_oracle(m, object, f);
    }
  }
}

TEST_CASE("a region-restricted field matches the full one inside the region") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = oracle::random_mask(48, 40, rng);
    if (std::find(m.data().begin(), m.data().end(), 1) == m.data().end()) continue;
    const RegionOfInterest roi{int(rng() % 20), int(rng() % 20), 24 + int(rng() % 24),
                               20 + int(rng() % 20)};
    const auto full = signed_distance_transform(m, 1, 8.0);
    const auto part = signed_distance_transform(m, 1, 8.0, roi);
    CHECK(part.region.x0 <= roi.x0);
    CHECK(part.region.x1 >= roi.x1);
    check_against_oracle(m, 1, part);
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x) {
        if (part.region.contains(x, y))
          CHECK(part.phi(x, y) == full.phi(x, y));
        else
          CHECK(std::isinf(part.phi(x, y)));
      }
  }
}

TEST_CASE("gradient at the border") {
  SilhouetteMask m(9, 9, 0);
  m(4, 4) = 1;
  const auto f = signed_distance_transform(m, 1, 8.0);
  CHECK(error_of([&] { sdf_gradient(f, 0, 4); }) == ErrorCode::BorderPixel);
  CHECK(error_of([&] { sdf_gradient(f, 4, 8); }) == ErrorCode::BorderPixel);
  const Vec2 g = sdf_gradient(f, 4, 6);
  CHECK(g.x() == 0.0);
  CHECK(g.y() == doctest::Approx(1.0));
}

TEST_CASE("heaviside and dirac") {
  CHECK(smoothed_heaviside(0.0, 1.2) == doctest::Approx(0.5));
  CHECK(smoothed_heaviside(8.0, 1.2) == doctest::Approx(0.0331).epsilon(1e-3));
  CHECK(smoothed_heaviside(-8.0, 1.2) == doctest::Approx(1.0 - 0.0331).epsilon(1e-3));
  CHECK(smoothed_dirac(0.0, 1.2) == doctest::Approx(1.2 / M_PI));
  for (double phi = -10.0; phi <= 10.0; phi += 0.37) {
    const double h = 1e-5;
    const double fd = (smoothed_heaviside(phi + h, 1.2) - smoothed_heaviside(phi - h, 1.2)) / (2 * h);
    CHECK(std::abs(std::abs(fd) - smoothed_dirac(phi, 1.2)) < 1e-8);
    CHECK(smoothed_heaviside(phi, 1.2) > smoothed_heaviside(phi + 0.1, 1.2));
  }
}

TEST_CASE("sdf export round trip") {
  SilhouetteMask m(13, 7, 0);
  m(3, 3) = m(4, 3) = m(4, 4) = 1;
  const auto f = signed_distance_transform(m, 1, 2.5);
  const auto path = std::filesystem::temp_directory_path() / "regtrack_sdf_roundtrip.bin";
  export_sdf(path, f);
  CHECK(std::filesystem::file_size(path) == 16 + 13 * 7 * 4);
  const auto g = import_sdf_values(path);
  std::filesystem::remove(path);
  CHECK(g.width() == 13);
  CHECK(g.height() == 7);
  CHECK(g.band == 2.5);
  CHECK(g.object == 1);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 13; ++x) {
      CHECK(g.phi(x, y) == doctest::Approx(f.phi(x, y)).epsilon(1e-6));
      CHECK(g.in_band(x, y) == f.in_band(x, y));
    }
  CHECK(error_of([&] { import_sdf_values(path); }) == ErrorCode::Io);
}
