#pragma once

#include "worldforge/math.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace worldforge {

using Polygon2 = std::vector<Vec2>;

// Shoelace area; positive for counter-clockwise winding.
double signed_area(std::span<const Vec2> poly);
bool is_simple(std::span<const Vec2> poly, double tol = 1e-12);
void make_ccw(Polygon2& poly);
bool point_in_polygon(const Vec2& p, std::span<const Vec2> poly);
double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b);
double distance_to_boundary(const Vec2& p, std::span<const Vec2> poly);

// Intersection point of segments [a0,a1] and [b0,b1]; nullopt for parallel or disjoint segments.
std::optional<Vec2> segment_intersection(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1,
                                         double tol = 1e-9);

// Ear clipping of a simple CCW polygon; returns index triples into poly, each CCW.
std::vector<std::array<int, 3>> triangulate(std::span<const Vec2> poly);

}  // namespace worldforge
