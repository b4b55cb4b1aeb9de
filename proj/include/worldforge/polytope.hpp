#pragma once

#include "worldforge/math.hpp"
#include "worldforge/mesh.hpp"

#include <vector>

namespace worldforge {

// Convex polytope stored as planar faces. Each face polygon is counter-clockwise seen from
// outside; points satisfy normal . x <= offset for every face.
struct PolytopeFace {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  std::vector<Vec3> polygon;
};

struct ConvexPolytope {
  std::vector<PolytopeFace> faces;
  std::vector<Vec3> vertices;  // unique corners

  bool empty() const { return faces.size() < 4; }
  void rebuild_vertices(double tol = 1e-12);
  // Unit directions of distinct edges, sign-normalized; used for separating-axis tests.
  std::vector<Vec3> edge_directions(double tol = 1e-9) const;
  ConvexPolytope transformed(const Pose& pose) const;
};

ConvexPolytope box_polytope(const Aabb& box);
// Merges coplanar triangles of a closed convex mesh.
ConvexPolytope polytope_from_mesh(const TriMesh& convex_mesh, double tol = 1e-9);
ConvexPolytope polytope_from_points(const std::vector<Vec3>& points);

// Keeps the part with normal . x <= offset; the cut is capped with a new face.
ConvexPolytope clip(const ConvexPolytope& poly, const Vec3& normal, double offset);

double polytope_volume(const ConvexPolytope& poly);
Vec3 polytope_centroid(const ConvexPolytope& poly);
// Flat-shaded triangle mesh, one vertex ring per face.
TriMesh polytope_mesh(const ConvexPolytope& poly);

// Orders coplanar points counter-clockwise around `normal`, dropping near-duplicates.
std::vector<Vec3> order_polygon(std::vector<Vec3> points, const Vec3& normal, double tol);

}  // namespace worldforge
