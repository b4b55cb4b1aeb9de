#include "worldforge/png_io.hpp"

#include "worldforge/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <vector>

namespace worldforge {

namespace {

struct PngContext {
  std::FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  char message[256] = {};
};

void on_png_error(png_structp png, png_const_charp msg)
{
  auto* ctx = static_cast<PngContext*>(png_get_error_ptr(png));
  std::snprintf(ctx->message, sizeof(ctx->message), "%s", msg);
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 8;
  std::vector<std::uint8_t> bytes;  // 16-bit samples are big-endian
};

// The setjmp-protected regions below hold only trivially destructible locals.
bool read_header(PngContext& c, png_uint_32& w, png_uint_32& h, int& channels, int& depth)
{
  if (setjmp(png_jmpbuf(c.png))) return false;
  png_init_io(c.png, c.fp);
  png_read_info(c.png, c.info);
  const int color = png_get_color_type(c.png, c.info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(c.png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(c.png, c.info) < 8) png_set_expand_gray_1_2_4_to_8(c.png);
  if (png_get_valid(c.png, c.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(c.png);
  png_read_update_info(c.png, c.info);
  w = png_get_image_width(c.png, c.info);
  h = png_get_image_height(c.png, c.info);
  channels = png_get_channels(c.png, c.info);
  depth = png_get_bit_depth(c.png, c.info);
  return true;
}

bool read_rows(PngContext& c, png_bytepp rows)
{
  if (setjmp(png_jmpbuf(c.png))) return false;
  png_read_image(c.png, rows);
  png_read_end(c.png, nullptr);
  return true;
}

bool write_all(PngContext& c, png_uint_32 w, png_uint_32 h, int color_type, int depth, png_bytepp rows)
{
  if (setjmp(png_jmpbuf(c.png))) return false;
  png_init_io(c.png, c.fp);
  png_set_IHDR(c.png, c.info, w, h, depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(c.png, 6);
  png_set_filter(c.png, PNG_FILTER_TYPE_BASE, PNG_ALL_FILTERS);
  png_write_info(c.png, c.info);
  png_write_image(c.png, rows);
  png_write_end(c.png, nullptr);
  return true;
}

RawPng decode(const std::filesystem::path& path)
{
  PngContext c;
  c.fp = std::fopen(path.string().c_str(), "rb");
  if (!c.fp) throw Error(ErrorCode::FileNotFound, path.string());
  unsigned char sig[8] = {};
  if (std::fread(sig, 1, 8, c.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    std::fclose(c.fp);
    throw Error(ErrorCode::BadHeader, path.string() + " is not a PNG file");
  }
  c.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &c, on_png_error, on_png_warning);
  c.info = png_create_info_struct(c.png);
  png_set_sig_bytes(c.png, 8);

  png_uint_32 w = 0, h = 0;
  int channels = 0, depth = 0;
  RawPng raw;
  bool ok = read_header(c, w, h, channels, depth);
  if (ok) {
    raw.width = static_cast<int>(w);
    raw.height = static_cast<int>(h);
    raw.channels = channels;
    raw.bit_depth = depth;
    const std::size_t stride = static_cast<std::size_t>(w) * static_cast<std::size_t>(channels) * (depth == 16 ? 2u : 1u);
    raw.bytes.resize(stride * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.bytes.data() + y * stride;
    ok = read_rows(c, rows.data());
  }
  png_destroy_read_struct(&c.png, &c.info, nullptr);
  std::fclose(c.fp);
  if (!ok) throw Error(ErrorCode::TruncatedFile, path.string() + ": " + c.message);
  return raw;
}

void encode(const std::filesystem::path& path, int width, int height, int channels, int depth, const std::vector<std::uint8_t>& bytes)
{
  int color_type = PNG_COLOR_TYPE_GRAY;
  switch (channels) {
    case 1: color_type = PNG_COLOR_TYPE_GRAY; break;
    case 2: color_type = PNG_COLOR_TYPE_GRAY_ALPHA; break;
    case 3: color_type = PNG_COLOR_TYPE_RGB; break;
    case 4: color_type = PNG_COLOR_TYPE_RGB_ALPHA; break;
    default: throw Error(ErrorCode::InvalidArgument, "unsupported PNG channel count");
  }
  if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "empty PNG image");
  PngContext c;
  c.fp = std::fopen(path.string().c_str(), "wb");
  if (!c.fp) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  c.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &c, on_png_error, on_png_warning);
  c.info = png_create_info_struct(c.png);
  const std::size_t stride = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels) * (depth == 16 ? 2u : 1u);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(bytes.data() + static_cast<std::size_t>(y) * stride);
  const bool ok = write_all(c, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), color_type, depth, rows.data());
  png_destroy_write_struct(&c.png, &c.info);
  const bool closed = std::fclose(c.fp) == 0;
  if (!ok || !closed) throw Error(ErrorCode::IoError, path.string() + ": " + c.message);
}

}  // namespace

std::uint8_t float_to_u8(float v)
{
  if (!(v > 0.0f)) return 0;
  if (v >= 1.0f) return 255;
  return static_cast<std::uint8_t>(std::lround(v * 255.0f));
}

Image read_png(const std::filesystem::path& path)
{
  const RawPng raw = decode(path);
  Image img(raw.width, raw.height, raw.channels);
  if (raw.bit_depth == 16) {
    for (std::size_t i = 0; i < img.data.size(); ++i)
      img.data[i] = static_cast<float>((raw.bytes[2 * i] << 8) | raw.bytes[2 * i + 1]) / 65535.0f;
  } else {
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>(raw.bytes[i]) / 255.0f;
  }
  return img;
}

Raster<std::uint16_t> read_png_u16(const std::filesystem::path& path)
{
  const RawPng raw = decode(path);
  if (raw.channels != 1) throw Error(ErrorCode::BadHeader, path.string() + " is not a single-channel PNG");
  Raster<std::uint16_t> out(raw.width, raw.height, 1);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = raw.bit_depth == 16 ? static_cast<std::uint16_t>((raw.bytes[2 * i] << 8) | raw.bytes[2 * i + 1]) : raw.bytes[i];
  return out;
}

Raster<std::uint8_t> read_png_u8(const std::filesystem::path& path)
{
  const RawPng raw = decode(path);
  if (raw.bit_depth != 8) throw Error(ErrorCode::BadHeader, path.string() + " is not an 8-bit PNG");
  Raster<std::uint8_t> out(raw.width, raw.height, raw.channels);
  out.data = raw.bytes;
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image)
{
  std::vector<std::uint8_t> bytes(image.data.size());
  std::transform(image.data.begin(), image.data.end(), bytes.begin(), float_to_u8);
  encode(path, image.width, image.height, image.channels, 8, bytes);
}

void write_png_u8(const std::filesystem::path& path, const Raster<std::uint8_t>& image)
{
  encode(path, image.width, image.height, image.channels, 8, image.data);
}

void write_png_u16(const std::filesystem::path& path, const Raster<std::uint16_t>& image)
{
  std::vector<std::uint8_t> bytes(image.data.size() * 2);
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    bytes[2 * i] = static_cast<std::uint8_t>(image.data[i] >> 8);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(image.data[i] & 0xFF);
  }
  encode(path, image.width, image.height, image.channels, 16, bytes);
}

}  // namespace worldforge
