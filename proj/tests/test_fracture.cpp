#include "doctest.h"

#include "worldforge/error.hpp"
#include "worldforge/fracture.hpp"
#include "worldforge/random.hpp"

using namespace worldforge;
using namespace worldforge::fracture;
using physics::RigidBody;

namespace {

Aabb unit_cube()
{
  Aabb b;
  b.min = Vec3::Zero();
  b.max = Vec3::Ones();
  return b;
}

TriMesh random_convex_mesh(Rng& rng)
{
  std::vector<Vec3> pts;
  const int n = 6 + static_cast<int>(rng.below(20));
  const Vec3 scale(rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0));
  for (int i = 0; i < n; ++i) pts.push_back(Vec3(rng.normal(), rng.normal(), rng.normal()).cwiseProduct(scale));
  return convex_hull(pts);
}

RigidBody box_parent(std::uint32_t id)
{
  RigidBody b;
  b.id = id;
  b.shape = physics::CollisionShape::box(Vec3(1, 1, 1));
  physics::set_mass_from_density(b, 100.0);
  return b;
}

}  // namespace

TEST_SUITE("fracture")
{
  TEST_CASE("voronoi cells tile their bounds")
  {
    const auto one = voronoi_cells({Vec3(0.3, 0.3, 0.3)}, unit_cube());
    REQUIRE(one.size() == 1);
    CHECK(polytope_volume(one[0].polytope) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(one[0].half_spaces.empty());

    Aabb sym;
    sym.min = Vec3(-0.5, 0, 0);
    sym.max = Vec3(0.5, 1, 1);
    const auto two = voronoi_cells({Vec3(-0.25, 0.3, 0.6), Vec3(0.25, 0.3, 0.6)}, sym);
    REQUIRE(two.size() == 2);
    for (const auto& c : two) CHECK(std::abs(polytope_volume(c.polytope) - 0.5) <= 1e-9);
    for (const Vec3& v : two[0].polytope.vertices) CHECK(v.x() <= 1e-12);

    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<Vec3> seeds;
      for (int i = 0; i < 20; ++i) seeds.push_back(Vec3(rng.uniform(), rng.uniform(), rng.uniform()));
      double total = 0.0;
      for (const auto& c : voronoi_cells(seeds, unit_cube())) {
        total += polytope_volume(c.polytope);
        for (const auto& h : c.half_spaces) {
          CHECK(h.normal.dot(c.seed) < h.offset);
          for (const Vec3& v : c.polytope.vertices) CHECK(h.normal.dot(v) - h.offset <= 1e-9);
        }
        for (const auto& f : c.polytope.faces) CHECK(f.normal.dot(c.seed) - f.offset < 0.0);
      }
      CHECK(std::abs(total - 1.0) <= 1e-6);
    }
    CHECK_THROWS_AS(voronoi_cells({Vec3(0.5, 0.5, 0.5), Vec3(0.5, 0.5, 0.5)}, unit_cube()), Error);
  }

  TEST_CASE("fracturing a cube")
  {
    const TriMesh cube = make_box(Vec3::Constant(0.5));
    FractureSpec spec;
    spec.fragment_count = 1;
    const auto whole = fracture_mesh(cube, spec);
    REQUIRE(whole.size() == 1);
    CHECK(mesh_volume(whole[0]) == doctest::Approx(1.0).epsilon(1e-9));

    spec.fragment_count = 8;
    spec.seed = 17;
    const auto pieces = fracture_mesh(cube, spec);
    CHECK(pieces.size() <= 8);
    CHECK(pieces.size() >= 2);
    double total = 0.0;
    for (const TriMesh& m : pieces) {
      total += mesh_volume(m);
      CHECK(is_convex(m, 1e-6));
      CHECK(mesh_is_valid(m));
    }
    CHECK(std::abs(total - 1.0) <= 1e-6);
    // Deterministic per seed.
    CHECK(fracture_mesh(cube, spec) == pieces);

    try {
      fracture_mesh(make_torus(1.0, 0.3), spec);
      FAIL("expected NonConvexInput");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonConvexInput);
    }
  }

  TEST_CASE("volume conservation on random convex parents")
  {
    Rng rng(99);
    for (int trial = 0; trial < 8; ++trial) {
      const TriMesh parent = random_convex_mesh(rng);
      const double v = mesh_volume(parent);
      for (int n : {2, 8, 32}) {
        FractureSpec spec;
        spec.fragment_count = n;
        spec.seed = rng.next_u64();
        double total = 0.0;
        for (const TriMesh& m : fracture_mesh(parent, spec)) {
          total += mesh_volume(m);
          CHECK(is_convex(m, 1e-6));
        }
        CHECK(std::abs(total - v) <= 1e-6 * v);
      }
    }
  }

  TEST_CASE("trigger thresholds")
  {
    for (const double threshold : {0.0, kInf}) {
      physics::World w;
      w.bodies.push_back(box_parent(1));
      RigidBody other = box_parent(2);
      other.pose.position = Vec3(0, 0, 2.0);
      w.bodies.push_back(other);
      std::map<std::uint32_t, FractureSpec> specs;
      FractureSpec spec;
      spec.fragment_count = 4;
      spec.impulse_threshold = threshold;
      specs[1] = spec;
      std::uint32_t next_id = 10;
      const auto contacts = physics::detect_contacts(w.bodies);
      REQUIRE_FALSE(contacts.empty());
      const auto events = apply_fracture_trigger(w, contacts, specs, next_id);
      if (threshold == 0.0) {
        REQUIRE(events.size() == 1);
        CHECK(events[0].parent == 1);
        CHECK(w.find(1) == nullptr);
        CHECK(specs.empty());
        CHECK(next_id == 10 + events[0].fragments.size());
        CHECK(w.bodies.size() == 1 + events[0].fragments.size());
      } else {
        CHECK(events.empty());
        CHECK(w.find(1) != nullptr);
        CHECK(specs.size() == 1);
      }
    }
  }

  TEST_CASE("fragments inherit rigid velocity and conserve mass and momentum")
  {
    physics::World w;
    RigidBody parent = box_parent(1);
    parent.angular_velocity = Vec3(0, 0, 1);
    parent.pose.position = Vec3(3, -2, 1);
    w.bodies.push_back(parent);
    w.bodies.push_back(box_parent(2));
    w.bodies.back().pose.position = Vec3(3, -2, 3);
    std::map<std::uint32_t, FractureSpec> specs{{1, FractureSpec{16, 5, 0.0, true}}};
    std::uint32_t next_id = 100;
    const auto events = apply_fracture_trigger(w, physics::detect_contacts(w.bodies), specs, next_id);
    REQUIRE(events.size() == 1);
    double mass = 0.0;
    for (const auto& f : events[0].fragments) {
      const RigidBody* b = w.find(f.id);
      REQUIRE(b);
      const Vec3 r = b->pose.position - parent.pose.position;
      CHECK((b->linear_velocity - Vec3(0, 0, 1).cross(r)).norm() <= 1e-9);
      mass += b->mass;
      CHECK(is_convex(f.local_mesh, 1e-6));
    }
    CHECK(std::abs(mass - parent.mass) <= 1e-6 * parent.mass);

    // Translation only: total momentum matches the parent's.
    physics::World w2;
    parent.angular_velocity = Vec3::Zero();
    parent.linear_velocity = Vec3(1, 2, -3);
    w2.bodies = {parent, w.bodies.front()};
    specs = {{1, FractureSpec{16, 5, 0.0, true}}};
    const auto ev2 = apply_fracture_trigger(w2, physics::detect_contacts(w2.bodies), specs, next_id);
    REQUIRE(ev2.size() == 1);
    Vec3 p = Vec3::Zero();
    for (const auto& f : ev2[0].fragments) p += w2.find(f.id)->mass * w2.find(f.id)->linear_velocity;
    CHECK((p - parent.mass * parent.linear_velocity).norm() <= 1e-6 * parent.mass);
  }

  TEST_CASE("unknown bodies are rejected")
  {
    physics::World w;
    w.bodies.push_back(box_parent(1));
    std::map<std::uint32_t, FractureSpec> specs{{42, FractureSpec{}}};
    std::uint32_t next_id = 2;
    try {
      apply_fracture_trigger(w, {}, specs, next_id);
      FAIL("expected UnknownBody");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownBody);
    }
  }
}
