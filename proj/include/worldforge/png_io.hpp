#pragma once

#include "worldforge/image.hpp"

#include <cstdint>
#include <filesystem>

namespace worldforge {

// 8- or 16-bit PNG of any color type, expanded to gray/gray+alpha/RGB/RGBA floats in [0, 1].
Image read_png(const std::filesystem::path& path);
// Single-channel 8- or 16-bit PNG as exact integer values.
Raster<std::uint16_t> read_png_u16(const std::filesystem::path& path);
Raster<std::uint8_t> read_png_u8(const std::filesystem::path& path);

// Writers use fixed zlib/filter settings and emit no timestamp chunks, so output bytes are a
// pure function of the pixels.
void write_png(const std::filesystem::path& path, const Image& image);  // 1, 3 or 4 channels, 8-bit
void write_png_u8(const std::filesystem::path& path, const Raster<std::uint8_t>& image);
void write_png_u16(const std::filesystem::path& path, const Raster<std::uint16_t>& image);

std::uint8_t float_to_u8(float v);

}  // namespace worldforge
