#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace worldforge {

// Row-major interleaved raster; row 0 is the top of the image.
template <typename T>
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<T> data;

  Raster() = default;
  Raster(int w, int h, int c, T fill = T{})
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(c), fill)
  {
  }

  std::size_t index(int x, int y, int c = 0) const
  {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels) +
           static_cast<std::size_t>(c);
  }
  T& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  bool same_shape(const Raster& o) const { return width == o.width && height == o.height; }
  bool operator==(const Raster&) const = default;
};

// Float image with values nominally in [0, 1].
using Image = Raster<float>;
using DepthMap = Raster<float>;
// Two channels (u, v) in pixels.
using FlowMap = Raster<float>;
using InstanceMap = Raster<std::uint32_t>;
using SemanticMapImage = Raster<std::uint16_t>;

}  // namespace worldforge
