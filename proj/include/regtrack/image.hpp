#pragma once

#include <array>
#include <cassert>
#include <cstdint>
#include <vector>

namespace regtrack {

/// Row-major 2D raster. Pixel (x, y) has its center at integer coordinates,
/// origin top-left, x to the right and y downwards.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, const T& fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    assert(width >= 0 && height >= 0);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  T& operator()(int x, int y) {
    assert(contains(x, y));
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  const T& operator()(int x, int y) const {
    assert(contains(x, y));
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  T* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_; }
  const T* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_; }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  void fill(const T& value) { std::fill(data_.begin(), data_.end(), value); }

  bool operator==(const Image& other) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

using RgbImage = Image<Rgb>;

/// Halves an image: centered [1 2 1]/4 binomial blur, then keeps even pixels, so
/// that pixel x of the result sits at pixel 2x of the input (consistent with
/// scaling the intrinsics by 1/2).
RgbImage pyramid_down(const RgbImage& image);

/// Levels 1..levels; element 0 is the input itself.
std::vector<RgbImage> build_pyramid(const RgbImage& image, int levels);

}  // namespace regtrack
