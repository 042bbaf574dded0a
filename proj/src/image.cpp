#include "regtrack/image.hpp"

#include <algorithm>
#include <cmath>

namespace regtrack {

namespace {

std::array<float, 3> as_float(const Rgb& c) { return {float(c.r), float(c.g), float(c.b)}; }

}  // namespace

RgbImage pyramid_down(const RgbImage& image) {
  const int w = image.width();
  const int h = image.height();
  const int ow = std::max(1, w / 2);
  const int oh = std::max(1, h / 2);
  RgbImage out(ow, oh);
  const auto clamp_x = [w](int x) { return std::clamp(x, 0, w - 1); };
  const auto clamp_y = [h](int y) { return std::clamp(y, 0, h - 1); };
  static constexpr float kTap[3] = {0.25f, 0.5f, 0.25f};
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      std::array<float, 3> acc{0.f, 0.f, 0.f};
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const auto c = as_float(image(clamp_x(2 * x + dx), clamp_y(2 * y + dy)));
          const float wgt = kTap[dx + 1] * kTap[dy + 1];
          for (int k = 0; k < 3; ++k) acc[k] += wgt * c[k];
        }
      }
      auto to_u8 = [](float v) {
        return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      };
      out(x, y) = Rgb{to_u8(acc[0]), to_u8(acc[1]), to_u8(acc[2])};
    }
  }
  return out;
}

std::vector<RgbImage> build_pyramid(const RgbImage& image, int levels) {
  std::vector<RgbImage> pyramid;
  pyramid.reserve(static_cast<std::size_t>(levels));
  pyramid.push_back(image);
  for (int level = 1; level < levels; ++level) pyramid.push_back(pyramid_down(pyramid.back()));
  return pyramid;
}

}  // namespace regtrack
