#include "worldforge/events.hpp"

#include "worldforge/error.hpp"
#include "worldforge/random.hpp"

#include <algorithm>
#include <cmath>

namespace worldforge {

EventFrame events_from_pair(const Image& a, const Image& b, double tau, double noise_sigma, std::uint64_t seed)
{
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "event threshold must be positive");
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "event noise sigma must be non-negative");
  if (!a.same_shape(b) || a.channels != 1 || b.channels != 1)
    throw Error(ErrorCode::ResolutionMismatch, "event input images must be single-channel and equally sized");
  EventFrame out;
  out.tau = tau;
  out.noise_sigma = noise_sigma;
  out.polarity = PolarityMap(a.width, a.height, 1, 0);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double ia = std::clamp(static_cast<double>(a.data[i]), kEventEpsilon, 1.0);
    const double ib = std::clamp(static_cast<double>(b.data[i]), kEventEpsilon, 1.0);
    double d = std::log(ib) - std::log(ia);
    if (noise_sigma > 0.0) d += noise_sigma * Rng(hash_keys(seed, {i})).normal();
    out.polarity.data[i] = d >= tau ? 1 : (d <= -tau ? -1 : 0);
  }
  return out;
}

EventFrame accumulate_events(const std::vector<EventFrame>& frames)
{
  if (frames.empty()) throw Error(ErrorCode::EmptyInput, "no event frames to accumulate");
  EventFrame out = frames.front();
  if (frames.size() == 1) return out;
  std::vector<int> sum(out.polarity.data.begin(), out.polarity.data.end());
  for (std::size_t k = 1; k < frames.size(); ++k) {
    const EventFrame& f = frames[k];
    if (!f.polarity.same_shape(out.polarity)) throw Error(ErrorCode::ResolutionMismatch, "event frames differ in size");
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += f.polarity.data[i];
    out.t_start = std::min(out.t_start, f.t_start);
    out.t_end = std::max(out.t_end, f.t_end);
  }
  for (std::size_t i = 0; i < sum.size(); ++i) out.polarity.data[i] = static_cast<std::int8_t>((sum[i] > 0) - (sum[i] < 0));
  return out;
}

Image linear_intensity(const Image& srgb)
{
  Image out(srgb.width, srgb.height, 1);
  for (int y = 0; y < srgb.height; ++y)
    for (int x = 0; x < srgb.width; ++x) {
      auto lin = [&](int c) { return std::pow(std::clamp(static_cast<double>(srgb.at(x, y, std::min(c, srgb.channels - 1))), 0.0, 1.0), 2.2); };
      out.at(x, y) = static_cast<float>(0.2126 * lin(0) + 0.7152 * lin(1) + 0.0722 * lin(2));
    }
  return out;
}

Raster<std::uint8_t> encode_polarity(const PolarityMap& map)
{
  Raster<std::uint8_t> out(map.width, map.height, 1);
  for (std::size_t i = 0; i < map.data.size(); ++i)
    out.data[i] = map.data[i] > 0 ? 255 : (map.data[i] < 0 ? 0 : 128);
  return out;
}

PolarityMap decode_polarity(const Raster<std::uint8_t>& image)
{
  if (image.channels != 1) throw Error(ErrorCode::InvalidArgument, "polarity image must be single-channel");
  PolarityMap out(image.width, image.height, 1);
  for (std::size_t i = 0; i < image.data.size(); ++i)
    out.data[i] = image.data[i] >= 192 ? 1 : (image.data[i] < 64 ? -1 : 0);
  return out;
}

}  // namespace worldforge
