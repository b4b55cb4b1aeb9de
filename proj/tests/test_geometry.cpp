#include "doctest.h"

#include "worldforge/error.hpp"
#include "worldforge/mesh.hpp"
#include "worldforge/polygon.hpp"
#include "worldforge/random.hpp"

using namespace worldforge;

TEST_SUITE("geometry") {

TEST_CASE("primitive volumes are positive and match closed forms")
{
  CHECK(mesh_volume(make_box(Vec3(0.5, 1.0, 1.5))) == doctest::Approx(6.0).epsilon(1e-12));
  const double sphere = mesh_volume(make_uv_sphere(1.0, 48, 24));
  CHECK(sphere > 0.0);
  CHECK(sphere == doctest::Approx(4.0 / 3.0 * kPi).epsilon(0.02));
  CHECK(mesh_volume(make_cylinder(1.0, 1.0, 24)) > 0.0);
  CHECK(mesh_volume(make_cone(1.0, 2.0, 16)) > 0.0);
  CHECK(mesh_volume(make_torus(2.0, 0.5)) > 0.0);
  for (const TriMesh& m : {make_box(Vec3::Ones()), make_uv_sphere(1.0), make_cylinder(1, 1), make_cone(1, 1)})
    CHECK(mesh_is_valid(m));
}

TEST_CASE("box mass properties match the analytic inertia tensor")
{
  const Vec3 h(0.5, 1.0, 1.5);
  const MassProperties mp = mass_properties(make_box(h), 2.0);
  const double m = 2.0 * 8.0 * h.prod();
  CHECK(mp.mass == doctest::Approx(m));
  CHECK(mp.center.norm() < 1e-12);
  const Vec3 d = 2.0 * h;
  CHECK(mp.inertia(0, 0) == doctest::Approx(m * (d.y() * d.y() + d.z() * d.z()) / 12.0));
  CHECK(mp.inertia(1, 1) == doctest::Approx(m * (d.x() * d.x() + d.z() * d.z()) / 12.0));
  CHECK(mp.inertia(2, 2) == doctest::Approx(m * (d.x() * d.x() + d.y() * d.y()) / 12.0));
  CHECK(std::abs(mp.inertia(0, 1)) < 1e-12);

  const MassProperties shifted = mass_properties(transformed(make_box(h), Pose{Vec3(3, -2, 1), Quat::Identity()}), 2.0);
  CHECK((shifted.center - Vec3(3, -2, 1)).norm() < 1e-12);
  CHECK((shifted.inertia - mp.inertia).norm() < 1e-9);
}

TEST_CASE("convexity check separates convex and non-convex meshes")
{
  CHECK(is_convex(make_box(Vec3::Ones())));
  CHECK(is_convex(make_uv_sphere(1.0)));
  CHECK_FALSE(is_convex(make_torus(2.0, 0.5)));
}

TEST_CASE("convex hull of random points contains every input point")
{
  Rng rng(7);
  std::vector<Vec3> pts;
  for (int i = 0; i < 200; ++i) pts.emplace_back(rng.uniform(-1, 1), rng.uniform(-2, 2), rng.uniform(-0.5, 0.5));
  const TriMesh hull = convex_hull(pts);
  CHECK(mesh_volume(hull) > 0.0);
  CHECK(is_convex(hull, 1e-9));
  for (const auto& t : hull.triangles) {
    const Vec3 n = (hull.positions[t[1]] - hull.positions[t[0]]).cross(hull.positions[t[2]] - hull.positions[t[0]]).normalized();
    for (const Vec3& p : pts) CHECK(n.dot(p - hull.positions[t[0]]) <= 1e-9);
  }

  std::vector<Vec3> cube;
  for (int i = 0; i < 8; ++i) cube.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  cube.emplace_back(0.5, 0.5, 0.5);
  CHECK(mesh_volume(convex_hull(cube)) == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<Vec3> flat = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)};
  CHECK_THROWS_AS(convex_hull(flat), Error);
}

TEST_CASE("polygon area, winding and simplicity")
{
  Polygon2 sq = {Vec2(0, 0), Vec2(0, 2), Vec2(2, 2), Vec2(2, 0)};
  CHECK(signed_area(sq) == doctest::Approx(-4.0));
  make_ccw(sq);
  CHECK(signed_area(sq) == doctest::Approx(4.0));
  CHECK(is_simple(sq));
  const Polygon2 bowtie = {Vec2(0, 0), Vec2(2, 2), Vec2(2, 0), Vec2(0, 2)};
  CHECK_FALSE(is_simple(bowtie));
  CHECK(point_in_polygon(Vec2(1, 1), sq));
  CHECK_FALSE(point_in_polygon(Vec2(3, 1), sq));
  CHECK(distance_to_boundary(Vec2(1, 0.5), sq) == doctest::Approx(0.5));
}

TEST_CASE("ear clipping covers the polygon area exactly")
{
  // L-shaped concave polygon.
  const Polygon2 l = {Vec2(0, 0), Vec2(4, 0), Vec2(4, 1), Vec2(1, 1), Vec2(1, 3), Vec2(0, 3)};
  const auto tris = triangulate(l);
  CHECK(tris.size() == 4);
  double area = 0.0;
  for (const auto& t : tris) {
    const std::array<Vec2, 3> tri = {l[t[0]], l[t[1]], l[t[2]]};
    const double a = signed_area(tri);
    CHECK(a > 0.0);
    area += a;
  }
  CHECK(area == doctest::Approx(signed_area(l)).epsilon(1e-12));
}

TEST_CASE("segment intersection")
{
  auto p = segment_intersection(Vec2(0, 0), Vec2(10, 10), Vec2(0, 10), Vec2(10, 0));
  REQUIRE(p);
  CHECK((*p - Vec2(5, 5)).norm() < 1e-12);
  CHECK_FALSE(segment_intersection(Vec2(0, 0), Vec2(10, 0), Vec2(0, 1), Vec2(10, 1)));
  CHECK_FALSE(segment_intersection(Vec2(0, 0), Vec2(1, 0), Vec2(2, -1), Vec2(2, 1)));
}

TEST_CASE("counter-based rng is reproducible and roughly normal")
{
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng g(3);
  double sum = 0, sum2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = g.normal();
    sum += x;
    sum2 += x * x;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sum2 / n - 1.0) < 0.02);
}

}
