#pragma once

#include "worldforge/dynamics.hpp"
#include "worldforge/polytope.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace worldforge::fracture {

struct HalfSpace {
  Vec3 normal;  // unit; the cell is normal . x <= offset
  double offset = 0.0;
};

struct VoronoiCell {
  Vec3 seed = Vec3::Zero();
  std::vector<HalfSpace> half_spaces;  // bisectors only; the bounds are implicit
  ConvexPolytope polytope;
};

struct FractureSpec {
  int fragment_count = 8;
  std::uint64_t seed = 0;
  double impulse_threshold = 0.0;  // N*s
  bool inherit_velocity = true;
  double density = 500.0;  // kg/m^3, used only when the parent is static
};

inline constexpr double kMinFragmentVolume = 1e-9;

// Cell i is `bounds` clipped by the bisector half-spaces toward every other seed.
// Throws DuplicateSeeds for seeds closer than 1e-9, InvalidArgument for seeds outside bounds.
std::vector<VoronoiCell> voronoi_cells(const std::vector<Vec3>& seeds, const Aabb& bounds);

// Seeds drawn uniformly inside the polytope by rejection sampling in its bounding box.
std::vector<Vec3> sample_interior_seeds(const ConvexPolytope& parent, int count, std::uint64_t seed);

// Voronoi fracture of a convex polytope; empty and sub-1e-9 m^3 fragments are dropped.
std::vector<ConvexPolytope> fracture_polytope(const ConvexPolytope& parent, const FractureSpec& spec);
// Mesh front end: NonConvexInput unless every vertex is on or inside the mesh's own hull (1e-6).
std::vector<TriMesh> fracture_mesh(const TriMesh& mesh, const FractureSpec& spec);

struct Fragment {
  std::uint32_t id = 0;
  TriMesh local_mesh;  // in the fragment body's frame
};

struct FractureEvent {
  std::uint32_t parent = 0;
  double time = 0.0;
  std::vector<Fragment> fragments;
};

// Replaces every spec'd body whose contact pair impulse within `contacts` reaches its threshold by
// convex-hull fragment bodies with fresh ids starting at `next_id`. Fired specs are removed.
// Throws UnknownBody if a spec names a body that is not in the world.
std::vector<FractureEvent> apply_fracture_trigger(physics::World& world, const std::vector<physics::Contact>& contacts,
                                                  std::map<std::uint32_t, FractureSpec>& specs, std::uint32_t& next_id,
                                                  double time = 0.0);

}  // namespace worldforge::fracture
