#include "worldforge/fracture.hpp"

#include "worldforge/error.hpp"
#include "worldforge/random.hpp"

#include <algorithm>

namespace worldforge::fracture {

namespace {

bool inside(const ConvexPolytope& poly, const Vec3& p, double tol = 0.0)
{
  for (const auto& f : poly.faces)
    if (f.normal.dot(p) - f.offset > tol) return false;
  return true;
}

ConvexPolytope cell_of(const ConvexPolytope& start, const std::vector<Vec3>& seeds, std::size_t i, std::vector<HalfSpace>* planes)
{
  ConvexPolytope cell = start;
  for (std::size_t j = 0; j < seeds.size() && !cell.empty(); ++j) {
    if (j == i) continue;
    const Vec3 n = (seeds[j] - seeds[i]).normalized();
    const double offset = n.dot(0.5 * (seeds[i] + seeds[j]));
    if (planes) planes->push_back({n, offset});
    cell = clip(cell, n, offset);
  }
  return cell;
}

}  // namespace

std::vector<VoronoiCell> voronoi_cells(const std::vector<Vec3>& seeds, const Aabb& bounds)
{
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!bounds.contains(seeds[i])) throw Error(ErrorCode::InvalidArgument, "seed outside bounds");
    for (std::size_t j = i + 1; j < seeds.size(); ++j)
      if ((seeds[i] - seeds[j]).norm() <= 1e-9) throw Error(ErrorCode::DuplicateSeeds, "seeds " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
  }
  const ConvexPolytope box = box_polytope(bounds);
  std::vector<VoronoiCell> cells;
  cells.reserve(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    VoronoiCell c;
    c.seed = seeds[i];
    c.polytope = cell_of(box, seeds, i, &c.half_spaces);
    cells.push_back(std::move(c));
  }
  return cells;
}

std::vector<Vec3> sample_interior_seeds(const ConvexPolytope& parent, int count, std::uint64_t seed)
{
  Aabb box;
  for (const Vec3& v : parent.vertices) box.extend(v);
  Rng rng(hash_keys(seed, {0x5EED}));
  std::vector<Vec3> out;
  const long max_attempts = 10000L * std::max(1, count);
  for (long attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < count; ++attempt) {
    const Vec3 p(rng.uniform(box.min.x(), box.max.x()), rng.uniform(box.min.y(), box.max.y()), rng.uniform(box.min.z(), box.max.z()));
    if (!inside(parent, p)) continue;
    bool distinct = true;
    for (const Vec3& q : out) distinct = distinct && (q - p).norm() > 1e-9;
    if (distinct) out.push_back(p);
  }
  return out;
}

std::vector<ConvexPolytope> fracture_polytope(const ConvexPolytope& parent, const FractureSpec& spec)
{
  if (spec.fragment_count < 1) throw Error(ErrorCode::InvalidArgument, "fragment count must be at least 1");
  if (spec.fragment_count == 1) return {parent};
  const std::vector<Vec3> seeds = sample_interior_seeds(parent, spec.fragment_count, spec.seed);
  std::vector<ConvexPolytope> out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    ConvexPolytope cell = cell_of(parent, seeds, i, nullptr);
    if (cell.empty() || polytope_volume(cell) < kMinFragmentVolume) continue;
    out.push_back(std::move(cell));
  }
  return out;
}

std::vector<TriMesh> fracture_mesh(const TriMesh& mesh, const FractureSpec& spec)
{
  if (spec.fragment_count < 1) throw Error(ErrorCode::InvalidArgument, "fragment count must be at least 1");
  if (mesh.triangles.size() < 4 || !is_convex(mesh, 1e-6)) throw Error(ErrorCode::NonConvexInput, "fracture needs a closed convex mesh");
  const ConvexPolytope parent = polytope_from_mesh(mesh);
  std::vector<TriMesh> out;
  for (const ConvexPolytope& p : fracture_polytope(parent, spec)) {
    TriMesh m = polytope_mesh(p);
    m.material_id = mesh.material_id;
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<FractureEvent> apply_fracture_trigger(physics::World& world, const std::vector<physics::Contact>& contacts,
                                                  std::map<std::uint32_t, FractureSpec>& specs, std::uint32_t& next_id, double time)
{
  for (const auto& [id, spec] : specs)
    if (!world.find(id)) throw Error(ErrorCode::UnknownBody, "fracture spec for missing body " + std::to_string(id));
  if (specs.empty() || contacts.empty()) return {};

  // Total impulse per body pair in this step; a pair touching with zero impulse still counts.
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> pair_impulse;
  for (const auto& c : contacts) pair_impulse[{c.body_a, c.body_b}] += c.impulse;
  std::vector<std::uint32_t> fired;
  for (const auto& [pair, j] : pair_impulse)
    for (std::uint32_t id : {pair.first, pair.second}) {
      auto it = specs.find(id);
      if (it != specs.end() && j >= it->second.impulse_threshold && std::find(fired.begin(), fired.end(), id) == fired.end())
        fired.push_back(id);
    }
  std::sort(fired.begin(), fired.end());

  std::vector<FractureEvent> events;
  for (std::uint32_t id : fired) {
    const FractureSpec spec = specs.at(id);
    specs.erase(id);
    auto it = std::find_if(world.bodies.begin(), world.bodies.end(), [id](const physics::RigidBody& b) { return b.id == id; });
    const physics::RigidBody parent = *it;
    world.bodies.erase(it);

    ConvexPolytope local = parent.shape.kind == physics::ShapeKind::Sphere
                               ? polytope_from_mesh(convex_hull(make_uv_sphere(parent.shape.radius).positions))
                               : *parent.shape.polytope;
    const ConvexPolytope world_poly = local.transformed(parent.pose);
    const double volume = polytope_volume(world_poly);
    const double density = parent.is_static() ? spec.density : parent.mass / volume;
    const Vec3 center = parent.pose.position;

    FractureEvent ev;
    ev.parent = id;
    ev.time = time;
    for (const ConvexPolytope& piece : fracture_polytope(world_poly, spec)) {
      physics::RigidBody frag = physics::body_from_world_hull(next_id, piece.vertices, density);
      frag.restitution = parent.restitution;
      frag.friction = parent.friction;
      frag.margin = parent.margin;
      if (spec.inherit_velocity && !parent.is_static()) {
        frag.linear_velocity = parent.linear_velocity + parent.angular_velocity.cross(frag.pose.position - center);
        frag.angular_velocity = parent.angular_velocity;
      }
      ev.fragments.push_back({next_id, frag.shape.mesh()});
      world.bodies.push_back(std::move(frag));
      ++next_id;
    }
    events.push_back(std::move(ev));
  }
  return events;
}

}  // namespace worldforge::fracture
