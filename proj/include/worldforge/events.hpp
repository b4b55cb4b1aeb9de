#pragma once

#include "worldforge/image.hpp"

#include <cstdint>
#include <vector>

namespace worldforge {

// Intensities are clamped to [kEventEpsilon, 1] before taking logs.
inline constexpr double kEventEpsilon = 1e-4;

using PolarityMap = Raster<std::int8_t>;

struct EventFrame {
  PolarityMap polarity;  // -1, 0, +1 per pixel
  double t_start = 0.0;
  double t_end = 0.0;
  double tau = 0.2;
  double noise_sigma = 0.0;
};

// d = log I_next - log I_t + N(0, sigma^2); +1 if d >= tau, -1 if d <= -tau, else 0.
// Noise is drawn per pixel from a counter stream keyed on (seed, pixel index).
EventFrame events_from_pair(const Image& intensity_t, const Image& intensity_next, double tau, double noise_sigma,
                            std::uint64_t seed);

// Per-pixel sum of polarities reduced to its sign; the time span is the union of the inputs.
EventFrame accumulate_events(const std::vector<EventFrame>& frames);

// Single-channel linear intensity from an sRGB-encoded color image (luma of the decoded channels).
Image linear_intensity(const Image& srgb);

// -1 -> 0, 0 -> 128, +1 -> 255
Raster<std::uint8_t> encode_polarity(const PolarityMap& map);
PolarityMap decode_polarity(const Raster<std::uint8_t>& image);

}  // namespace worldforge
