#pragma once

#include "worldforge/math.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace worldforge {

// Indexed triangle mesh; the unit of all geometry.
struct TriMesh {
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;
  std::vector<Vec2> uvs;  // empty when the mesh has no texture coordinates
  std::vector<std::array<std::uint32_t, 3>> triangles;
  int material_id = 0;
  // Renderer shades with the geometric face normal instead of interpolated vertex normals.
  bool flat_shaded = false;

  std::size_t vertex_count() const { return positions.size(); }
  bool has_uvs() const { return !uvs.empty() && uvs.size() == positions.size(); }
  bool operator==(const TriMesh&) const = default;
};

struct MassProperties {
  double mass = 0.0;
  double volume = 0.0;
  Vec3 center = Vec3::Zero();
  Mat3 inertia = Mat3::Zero();  // about center, mesh frame
};

// Signed enclosed volume by the divergence theorem; positive for outward-facing closed meshes.
double mesh_volume(const TriMesh& mesh);
MassProperties mass_properties(const TriMesh& mesh, double density);
Aabb mesh_bounds(const TriMesh& mesh);
double surface_area(const TriMesh& mesh);

// Area-weighted vertex normals, replacing any existing normals.
void compute_vertex_normals(TriMesh& mesh);
Vec3 face_normal(const TriMesh& mesh, std::size_t tri);

// Index bounds, normal length, and finiteness.
bool mesh_is_valid(const TriMesh& mesh, double normal_tol = 1e-6);

// Every vertex lies on or behind every face plane within tol.
bool is_convex(const TriMesh& mesh, double tol = 1e-6);

TriMesh transformed(const TriMesh& mesh, const Pose& pose);
void append_mesh(TriMesh& dst, const TriMesh& src);

// Built-in low-poly primitives, all closed with outward normals.
TriMesh make_box(const Vec3& half_extents);
TriMesh make_uv_sphere(double radius, int segments = 24, int rings = 12);
TriMesh make_cylinder(double radius, double half_height, int segments = 24);
TriMesh make_cone(double radius, double height, int segments = 16);
TriMesh make_torus(double major_radius, double minor_radius, int major_segments = 24, int minor_segments = 12);
// Single-sided quad in the local XY plane facing +z.
TriMesh make_quad(double half_x, double half_y);

// Incremental 3D convex hull. Throws InvalidArgument for fewer than 4 non-coplanar points.
TriMesh convex_hull(std::span<const Vec3> points, double eps = 1e-12);

}  // namespace worldforge
