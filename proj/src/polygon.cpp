#include "worldforge/polygon.hpp"

#include "worldforge/error.hpp"

#include <algorithm>
#include <numeric>

namespace worldforge {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double orient(const Vec2& a, const Vec2& b, const Vec2& c) { return cross2(b - a, c - a); }

bool segments_touch(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1, double tol)
{
  const double d1 = orient(b0, b1, a0);
  const double d2 = orient(b0, b1, a1);
  const double d3 = orient(a0, a1, b0);
  const double d4 = orient(a0, a1, b1);
  if (((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol)) && ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol)))
    return true;
  auto on_segment = [tol](const Vec2& p, const Vec2& q, const Vec2& r) {
    return std::abs(orient(p, q, r)) <= tol && r.x() >= std::min(p.x(), q.x()) - tol &&
           r.x() <= std::max(p.x(), q.x()) + tol && r.y() >= std::min(p.y(), q.y()) - tol &&
           r.y() <= std::max(p.y(), q.y()) + tol;
  };
  return on_segment(b0, b1, a0) || on_segment(b0, b1, a1) || on_segment(a0, a1, b0) || on_segment(a0, a1, b1);
}

}  // namespace

double signed_area(std::span<const Vec2> poly)
{
  double twice = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) twice += cross2(poly[i], poly[(i + 1) % n]);
  return 0.5 * twice;
}

bool is_simple(std::span<const Vec2> poly, double tol)
{
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_touch(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n], tol)) return false;
    }
  }
  return true;
}

void make_ccw(Polygon2& poly)
{
  if (signed_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());
}

bool point_in_polygon(const Vec2& p, std::span<const Vec2> poly)
{
  bool inside = false;
  for (std::size_t i = 0, n = poly.size(), j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b)
{
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * ab - p).norm();
}

double distance_to_boundary(const Vec2& p, std::span<const Vec2> poly)
{
  double best = kInf;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i)
    best = std::min(best, distance_to_segment(p, poly[i], poly[(i + 1) % n]));
  return best;
}

std::optional<Vec2> segment_intersection(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1, double tol)
{
  const Vec2 r = a1 - a0;
  const Vec2 s = b1 - b0;
  const double denom = cross2(r, s);
  const double scale = r.norm() * s.norm();
  if (scale == 0.0 || std::abs(denom) <= 1e-12 * scale) return std::nullopt;
  const double t = cross2(b0 - a0, s) / denom;
  const double u = cross2(b0 - a0, r) / denom;
  const double ta = tol / r.norm();
  const double tb = tol / s.norm();
  if (t < -ta || t > 1.0 + ta || u < -tb || u > 1.0 + tb) return std::nullopt;
  return a0 + t * r;
}

std::vector<std::array<int, 3>> triangulate(std::span<const Vec2> poly)
{
  const int n = static_cast<int>(poly.size());
  std::vector<std::array<int, 3>> out;
  if (n < 3) return out;
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);

  auto is_ear = [&](int pi, int ci, int ni) {
    const Vec2& a = poly[idx[pi]];
    const Vec2& b = poly[idx[ci]];
    const Vec2& c = poly[idx[ni]];
    if (orient(a, b, c) <= 0.0) return false;
    for (int k = 0; k < static_cast<int>(idx.size()); ++k) {
      if (k == pi || k == ci || k == ni) continue;
      const Vec2& p = poly[idx[k]];
      if (p == a || p == b || p == c) continue;
      if (orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0) return false;
    }
    return true;
  };

  int guard = 0;
  int i = 0;
  while (idx.size() > 3) {
    const int m = static_cast<int>(idx.size());
    const int prev = (i + m - 1) % m;
    const int next = (i + 1) % m;
    if (is_ear(prev, i, next)) {
      out.push_back({idx[prev], idx[i], idx[next]});
      idx.erase(idx.begin() + i);
      guard = 0;
      if (i >= static_cast<int>(idx.size())) i = 0;
      continue;
    }
    if (++guard > 2 * m) {
      // Numerically degenerate remainder: clip whatever corner we are on.
      out.push_back({idx[prev], idx[i], idx[next]});
      idx.erase(idx.begin() + i);
      guard = 0;
      if (i >= static_cast<int>(idx.size())) i = 0;
      continue;
    }
    i = next;
  }
  out.push_back({idx[0], idx[1], idx[2]});
  return out;
}

}  // namespace worldforge
