#pragma once

#include <cstdint>
#include <filesystem>

#include "regtrack/image.hpp"

namespace regtrack {

RgbImage read_png_rgb(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const RgbImage& image);
void write_png(const std::filesystem::path& path, const Image<std::uint8_t>& image);
void write_png(const std::filesystem::path& path, const Image<std::uint16_t>& image);

}  // namespace regtrack
