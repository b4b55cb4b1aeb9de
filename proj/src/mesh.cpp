#include "worldforge/mesh.hpp"

#include "worldforge/error.hpp"

#include <map>
#include <set>
#include <utility>

namespace worldforge {

double mesh_volume(const TriMesh& mesh)
{
  double six_v = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.positions[t[0]];
    const Vec3& b = mesh.positions[t[1]];
    const Vec3& c = mesh.positions[t[2]];
    six_v += a.dot(b.cross(c));
  }
  return six_v / 6.0;
}

MassProperties mass_properties(const TriMesh& mesh, double density)
{
  // Canonical second moment of the unit tetrahedron (0, e1, e2, e3).
  Mat3 canonical;
  canonical << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  canonical /= 120.0;

  double volume = 0.0;
  Vec3 first = Vec3::Zero();
  Mat3 covariance = Mat3::Zero();
  for (const auto& t : mesh.triangles) {
    Mat3 a;
    a.col(0) = mesh.positions[t[0]];
    a.col(1) = mesh.positions[t[1]];
    a.col(2) = mesh.positions[t[2]];
    const double det = a.determinant();
    volume += det / 6.0;
    first += det / 24.0 * (a.col(0) + a.col(1) + a.col(2));
    covariance += det * a * canonical * a.transpose();
  }

  MassProperties out;
  out.volume = volume;
  out.mass = density * volume;
  if (volume == 0.0) return out;
  out.center = first / volume;
  const Mat3 centered = density * (covariance - volume * out.center * out.center.transpose());
  out.inertia = centered.trace() * Mat3::Identity() - centered;
  return out;
}

Aabb mesh_bounds(const TriMesh& mesh)
{
  Aabb box;
  for (const Vec3& p : mesh.positions) box.extend(p);
  return box;
}

double surface_area(const TriMesh& mesh)
{
  double area = 0.0;
  for (const auto& t : mesh.triangles) {
    area += 0.5 * (mesh.positions[t[1]] - mesh.positions[t[0]]).cross(mesh.positions[t[2]] - mesh.positions[t[0]]).norm();
  }
  return area;
}

void compute_vertex_normals(TriMesh& mesh)
{
  std::vector<Vec3> acc(mesh.positions.size(), Vec3::Zero());
  for (const auto& t : mesh.triangles) {
    const Vec3 n = (mesh.positions[t[1]] - mesh.positions[t[0]]).cross(mesh.positions[t[2]] - mesh.positions[t[0]]);
    for (std::uint32_t i : t) acc[i] += n;
  }
  mesh.normals.resize(mesh.positions.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double len = acc[i].norm();
    mesh.normals[i] = len > 0.0 ? Vec3(acc[i] / len) : Vec3::UnitZ();
  }
}

Vec3 face_normal(const TriMesh& mesh, std::size_t tri)
{
  const auto& t = mesh.triangles[tri];
  const Vec3 n = (mesh.positions[t[1]] - mesh.positions[t[0]]).cross(mesh.positions[t[2]] - mesh.positions[t[0]]);
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::UnitZ();
}

bool mesh_is_valid(const TriMesh& mesh, double normal_tol)
{
  const std::size_t n = mesh.positions.size();
  for (const auto& t : mesh.triangles)
    for (std::uint32_t i : t)
      if (i >= n) return false;
  for (const Vec3& p : mesh.positions)
    if (!p.allFinite()) return false;
  if (!mesh.normals.empty()) {
    if (mesh.normals.size() != n) return false;
    for (const Vec3& v : mesh.normals)
      if (!v.allFinite() || std::abs(v.norm() - 1.0) > normal_tol) return false;
  }
  for (const Vec2& uv : mesh.uvs)
    if (!uv.allFinite()) return false;
  return true;
}

bool is_convex(const TriMesh& mesh, double tol)
{
  if (mesh.triangles.empty()) return false;
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.positions[t[0]];
    const Vec3 n = (mesh.positions[t[1]] - a).cross(mesh.positions[t[2]] - a);
    const double len = n.norm();
    if (len < 1e-300) continue;
    const Vec3 u = n / len;
    for (const Vec3& p : mesh.positions)
      if (u.dot(p - a) > tol) return false;
  }
  return true;
}

TriMesh transformed(const TriMesh& mesh, const Pose& pose)
{
  TriMesh out = mesh;
  for (Vec3& p : out.positions) p = pose.apply(p);
  for (Vec3& n : out.normals) n = pose.rotate(n);
  return out;
}

void append_mesh(TriMesh& dst, const TriMesh& src)
{
  const auto base = static_cast<std::uint32_t>(dst.positions.size());
  const bool uvs = dst.has_uvs() || dst.positions.empty();
  dst.positions.insert(dst.positions.end(), src.positions.begin(), src.positions.end());
  dst.normals.insert(dst.normals.end(), src.normals.begin(), src.normals.end());
  if (uvs && src.has_uvs())
    dst.uvs.insert(dst.uvs.end(), src.uvs.begin(), src.uvs.end());
  else
    dst.uvs.clear();
  for (auto t : src.triangles) dst.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
}

TriMesh make_box(const Vec3& h)
{
  TriMesh m;
  // Shared corners so vertex displacement cannot open seams.
  for (int i = 0; i < 8; ++i) {
    const Vec3 p((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z());
    m.positions.push_back(p);
    m.uvs.emplace_back((i & 1) ? 1.0 : 0.0, ((i & 2) ? 0.5 : 0.0) + ((i & 4) ? 0.5 : 0.0));
  }
  const std::array<std::array<std::uint32_t, 4>, 6> faces = {{
      {0, 2, 3, 1},  // -z
      {4, 5, 7, 6},  // +z
      {0, 1, 5, 4},  // -y
      {2, 6, 7, 3},  // +y
      {0, 4, 6, 2},  // -x
      {1, 3, 7, 5},  // +x
  }};
  for (const auto& f : faces) {
    m.triangles.push_back({f[0], f[1], f[2]});
    m.triangles.push_back({f[0], f[2], f[3]});
  }
  compute_vertex_normals(m);
  m.flat_shaded = true;
  return m;
}

TriMesh make_uv_sphere(double radius, int segments, int rings)
{
  TriMesh m;
  m.positions.push_back(Vec3(0, 0, radius));
  m.uvs.emplace_back(0.5, 1.0);
  for (int r = 1; r < rings; ++r) {
    const double phi = kPi * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double theta = 2.0 * kPi * s / segments;
      m.positions.push_back(radius * Vec3(std::sin(phi) * std::cos(theta), std::sin(phi) * std::sin(theta), std::cos(phi)));
      m.uvs.emplace_back(static_cast<double>(s) / segments, 1.0 - static_cast<double>(r) / rings);
    }
  }
  m.positions.push_back(Vec3(0, 0, -radius));
  m.uvs.emplace_back(0.5, 0.0);
  const auto south = static_cast<std::uint32_t>(m.positions.size() - 1);
  auto ring_index = [&](int r, int s) { return static_cast<std::uint32_t>(1 + (r - 1) * segments + (s % segments)); };
  for (int s = 0; s < segments; ++s) m.triangles.push_back({0, ring_index(1, s), ring_index(1, s + 1)});
  for (int r = 1; r + 1 < rings; ++r) {
    for (int s = 0; s < segments; ++s) {
      const auto a = ring_index(r, s), b = ring_index(r, s + 1), c = ring_index(r + 1, s), d = ring_index(r + 1, s + 1);
      m.triangles.push_back({a, c, d});
      m.triangles.push_back({a, d, b});
    }
  }
  for (int s = 0; s < segments; ++s) m.triangles.push_back({south, ring_index(rings - 1, s + 1), ring_index(rings - 1, s)});
  m.normals.reserve(m.positions.size());
  for (const Vec3& p : m.positions) m.normals.push_back(p.normalized());
  return m;
}

TriMesh make_cylinder(double radius, double half_height, int segments)
{
  TriMesh m;
  for (int k = 0; k < 2; ++k) {
    const double z = k == 0 ? -half_height : half_height;
    for (int s = 0; s < segments; ++s) {
      const double theta = 2.0 * kPi * s / segments;
      m.positions.emplace_back(radius * std::cos(theta), radius * std::sin(theta), z);
      m.uvs.emplace_back(static_cast<double>(s) / segments, static_cast<double>(k));
    }
  }
  const auto bottom = static_cast<std::uint32_t>(m.positions.size());
  m.positions.emplace_back(0, 0, -half_height);
  m.uvs.emplace_back(0.5, 0.0);
  const auto top = static_cast<std::uint32_t>(m.positions.size());
  m.positions.emplace_back(0, 0, half_height);
  m.uvs.emplace_back(0.5, 1.0);
  const auto n = static_cast<std::uint32_t>(segments);
  for (std::uint32_t s = 0; s < n; ++s) {
    const std::uint32_t a = s, b = (s + 1) % n, c = n + s, d = n + (s + 1) % n;
    m.triangles.push_back({a, b, d});
    m.triangles.push_back({a, d, c});
    m.triangles.push_back({bottom, b, a});
    m.triangles.push_back({top, c, d});
  }
  compute_vertex_normals(m);
  return m;
}

TriMesh make_cone(double radius, double height, int segments)
{
  TriMesh m;
  const auto n = static_cast<std::uint32_t>(segments);
  for (int s = 0; s < segments; ++s) {
    const double theta = 2.0 * kPi * s / segments;
    m.positions.emplace_back(radius * std::cos(theta), radius * std::sin(theta), 0.0);
    m.uvs.emplace_back(static_cast<double>(s) / segments, 0.0);
  }
  m.positions.emplace_back(0, 0, 0);
  m.uvs.emplace_back(0.5, 0.0);
  m.positions.emplace_back(0, 0, height);
  m.uvs.emplace_back(0.5, 1.0);
  for (std::uint32_t s = 0; s < n; ++s) {
    m.triangles.push_back({n, (s + 1) % n, s});
    m.triangles.push_back({s, (s + 1) % n, n + 1});
  }
  compute_vertex_normals(m);
  return m;
}

TriMesh make_torus(double major_radius, double minor_radius, int major_segments, int minor_segments)
{
  TriMesh m;
  for (int i = 0; i < major_segments; ++i) {
    const double u = 2.0 * kPi * i / major_segments;
    for (int j = 0; j < minor_segments; ++j) {
      const double v = 2.0 * kPi * j / minor_segments;
      const double r = major_radius + minor_radius * std::cos(v);
      m.positions.emplace_back(r * std::cos(u), r * std::sin(u), minor_radius * std::sin(v));
      m.uvs.emplace_back(static_cast<double>(i) / major_segments, static_cast<double>(j) / minor_segments);
    }
  }
  auto idx = [&](int i, int j) {
    return static_cast<std::uint32_t>((i % major_segments) * minor_segments + (j % minor_segments));
  };
  for (int i = 0; i < major_segments; ++i) {
    for (int j = 0; j < minor_segments; ++j) {
      m.triangles.push_back({idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)});
      m.triangles.push_back({idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)});
    }
  }
  compute_vertex_normals(m);
  return m;
}

TriMesh make_quad(double half_x, double half_y)
{
  TriMesh m;
  m.positions = {Vec3(-half_x, -half_y, 0), Vec3(half_x, -half_y, 0), Vec3(half_x, half_y, 0), Vec3(-half_x, half_y, 0)};
  m.normals.assign(4, Vec3::UnitZ());
  m.uvs = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  m.flat_shaded = true;
  return m;
}

namespace {

struct HullFace {
  std::array<int, 3> v;
  Vec3 normal;
  double offset;
  bool alive = true;
};

HullFace make_face(const std::vector<Vec3>& pts, int a, int b, int c)
{
  HullFace f;
  f.v = {a, b, c};
  f.normal = (pts[b] - pts[a]).cross(pts[c] - pts[a]).normalized();
  f.offset = f.normal.dot(pts[a]);
  return f;
}

}  // namespace

TriMesh convex_hull(std::span<const Vec3> input, double eps)
{
  std::vector<Vec3> pts(input.begin(), input.end());
  if (pts.size() < 4) throw Error(ErrorCode::InvalidArgument, "convex hull needs at least 4 points");

  Aabb box;
  for (const Vec3& p : pts) box.extend(p);
  const double scale = std::max(1.0, box.extent().maxCoeff());
  const double tol = std::max(eps, 1e-12 * scale);

  // Initial simplex from extreme points.
  int i0 = 0, i1 = 0;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    if (pts[i].x() < pts[i0].x()) i0 = i;
    if (pts[i].x() > pts[i1].x()) i1 = i;
  }
  if (i0 == i1) {
    double best = -1.0;
    for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
      const double d = (pts[i] - pts[0]).squaredNorm();
      if (d > best) best = d, i1 = i;
    }
    i0 = 0;
  }
  int i2 = -1;
  double best = tol;
  const Vec3 axis = (pts[i1] - pts[i0]);
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    const double d = axis.cross(pts[i] - pts[i0]).norm();
    if (d > best) best = d, i2 = i;
  }
  if (i2 < 0) throw Error(ErrorCode::InvalidArgument, "convex hull input is collinear");
  const Vec3 plane_n = axis.cross(pts[i2] - pts[i0]).normalized();
  int i3 = -1;
  best = tol;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    const double d = std::abs(plane_n.dot(pts[i] - pts[i0]));
    if (d > best) best = d, i3 = i;
  }
  if (i3 < 0) throw Error(ErrorCode::InvalidArgument, "convex hull input is coplanar");

  std::vector<HullFace> faces;
  const Vec3 inside = 0.25 * (pts[i0] + pts[i1] + pts[i2] + pts[i3]);
  auto add_oriented = [&](int a, int b, int c) {
    HullFace f = make_face(pts, a, b, c);
    if (f.normal.dot(inside) - f.offset > 0.0) f = make_face(pts, a, c, b);
    faces.push_back(f);
  };
  add_oriented(i0, i1, i2);
  add_oriented(i0, i1, i3);
  add_oriented(i0, i2, i3);
  add_oriented(i1, i2, i3);

  for (int p = 0; p < static_cast<int>(pts.size()); ++p) {
    if (p == i0 || p == i1 || p == i2 || p == i3) continue;
    std::vector<std::size_t> visible;
    for (std::size_t f = 0; f < faces.size(); ++f)
      if (faces[f].alive && faces[f].normal.dot(pts[p]) - faces[f].offset > tol) visible.push_back(f);
    if (visible.empty()) continue;

    std::set<std::pair<int, int>> edges;
    for (std::size_t f : visible) {
      const auto& v = faces[f].v;
      for (int e = 0; e < 3; ++e) edges.insert({v[e], v[(e + 1) % 3]});
      faces[f].alive = false;
    }
    // Horizon edges are those whose reverse is not on a visible face.
    for (const auto& [a, b] : edges) {
      if (edges.count({b, a})) continue;
      faces.push_back(make_face(pts, a, b, p));
    }
  }

  std::map<int, std::uint32_t> remap;
  TriMesh out;
  for (const HullFace& f : faces) {
    if (!f.alive) continue;
    std::array<std::uint32_t, 3> tri{};
    for (int k = 0; k < 3; ++k) {
      auto [it, inserted] = remap.emplace(f.v[k], static_cast<std::uint32_t>(out.positions.size()));
      if (inserted) out.positions.push_back(pts[f.v[k]]);
      tri[k] = it->second;
    }
    out.triangles.push_back(tri);
  }
  compute_vertex_normals(out);
  out.flat_shaded = true;
  return out;
}

}  // namespace worldforge
