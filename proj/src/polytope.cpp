#include "worldforge/polytope.hpp"

#include <numeric>

namespace worldforge {

namespace {

double scale_of(const std::vector<Vec3>& pts)
{
  double s = 1.0;
  for (const Vec3& p : pts) s = std::max(s, p.cwiseAbs().maxCoeff());
  return s;
}

void push_unique(std::vector<Vec3>& out, const Vec3& p, double tol)
{
  for (const Vec3& q : out)
    if ((q - p).squaredNorm() <= tol * tol) return;
  out.push_back(p);
}

}  // namespace

std::vector<Vec3> order_polygon(std::vector<Vec3> points, const Vec3& normal, double tol)
{
  std::vector<Vec3> uniq;
  for (const Vec3& p : points) push_unique(uniq, p, tol);
  if (uniq.size() < 3) return uniq;
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : uniq) c += p;
  c /= static_cast<double>(uniq.size());
  Vec3 t1, t2;
  orthonormal_basis(normal, t1, t2);
  std::vector<std::pair<double, Vec3>> keyed;
  keyed.reserve(uniq.size());
  for (const Vec3& p : uniq) keyed.emplace_back(std::atan2((p - c).dot(t2), (p - c).dot(t1)), p);
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Vec3> out;
  out.reserve(keyed.size());
  for (const auto& [angle, p] : keyed) out.push_back(p);
  return out;
}

void ConvexPolytope::rebuild_vertices(double tol)
{
  vertices.clear();
  std::vector<Vec3> all;
  for (const auto& f : faces) all.insert(all.end(), f.polygon.begin(), f.polygon.end());
  const double t = tol * scale_of(all);
  for (const Vec3& p : all) push_unique(vertices, p, t);
}

std::vector<Vec3> ConvexPolytope::edge_directions(double tol) const
{
  std::vector<Vec3> dirs;
  for (const auto& f : faces) {
    for (std::size_t i = 0, n = f.polygon.size(); i < n; ++i) {
      Vec3 d = f.polygon[(i + 1) % n] - f.polygon[i];
      const double len = d.norm();
      if (len <= 1e-12) continue;
      d /= len;
      bool seen = false;
      for (const Vec3& e : dirs)
        if (std::abs(std::abs(e.dot(d)) - 1.0) <= tol) {
          seen = true;
          break;
        }
      if (!seen) dirs.push_back(d);
    }
  }
  return dirs;
}

ConvexPolytope ConvexPolytope::transformed(const Pose& pose) const
{
  ConvexPolytope out;
  out.faces.reserve(faces.size());
  for (const auto& f : faces) {
    PolytopeFace g;
    g.normal = pose.rotate(f.normal);
    g.polygon.reserve(f.polygon.size());
    for (const Vec3& p : f.polygon) g.polygon.push_back(pose.apply(p));
    g.offset = g.normal.dot(g.polygon.front());
    out.faces.push_back(std::move(g));
  }
  out.vertices.reserve(vertices.size());
  for (const Vec3& v : vertices) out.vertices.push_back(pose.apply(v));
  return out;
}

ConvexPolytope box_polytope(const Aabb& b)
{
  const Vec3& lo = b.min;
  const Vec3& hi = b.max;
  auto corner = [&](int i) { return Vec3(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(), i & 4 ? hi.z() : lo.z()); };
  // Corner indices per face, counter-clockwise from outside.
  static const int kFaces[6][4] = {{0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}};
  static const Vec3 kNormals[6] = {-Vec3::UnitX(), Vec3::UnitX(), -Vec3::UnitY(), Vec3::UnitY(), -Vec3::UnitZ(), Vec3::UnitZ()};
  ConvexPolytope out;
  for (int f = 0; f < 6; ++f) {
    PolytopeFace face;
    face.normal = kNormals[f];
    for (int k = 0; k < 4; ++k) face.polygon.push_back(corner(kFaces[f][k]));
    face.offset = face.normal.dot(face.polygon.front());
    out.faces.push_back(std::move(face));
  }
  out.rebuild_vertices();
  return out;
}

ConvexPolytope polytope_from_mesh(const TriMesh& mesh, double tol)
{
  const double scale = scale_of(mesh.positions);
  struct Group {
    Vec3 normal;
    double offset;
    std::vector<Vec3> pts;
  };
  std::vector<Group> groups;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.positions[tri[0]];
    const Vec3& b = mesh.positions[tri[1]];
    const Vec3& c = mesh.positions[tri[2]];
    const Vec3 cr = (b - a).cross(c - a);
    if (cr.norm() <= 1e-14 * scale * scale) continue;
    const Vec3 n = cr.normalized();
    const double d = n.dot(a);
    Group* g = nullptr;
    for (auto& cand : groups)
      if (cand.normal.dot(n) >= 1.0 - tol && std::abs(cand.offset - d) <= tol * scale) {
        g = &cand;
        break;
      }
    if (!g) {
      groups.push_back({n, d, {}});
      g = &groups.back();
    }
    g->pts.insert(g->pts.end(), {a, b, c});
  }
  ConvexPolytope out;
  for (auto& g : groups) {
    PolytopeFace f;
    f.normal = g.normal;
    f.offset = g.offset;
    f.polygon = order_polygon(std::move(g.pts), g.normal, 1e-12 * scale);
    if (f.polygon.size() >= 3) out.faces.push_back(std::move(f));
  }
  out.rebuild_vertices();
  return out;
}

ConvexPolytope polytope_from_points(const std::vector<Vec3>& points)
{
  return polytope_from_mesh(convex_hull(points));
}

ConvexPolytope clip(const ConvexPolytope& poly, const Vec3& normal, double offset)
{
  const double tol = 1e-12 * scale_of(poly.vertices);
  bool any_out = false, any_in = false;
  for (const Vec3& v : poly.vertices) {
    const double s = normal.dot(v) - offset;
    any_out = any_out || s > tol;
    any_in = any_in || s < -tol;
  }
  if (!any_out) return poly;
  if (!any_in) return {};

  ConvexPolytope out;
  std::vector<Vec3> cap;
  for (const auto& f : poly.faces) {
    std::vector<Vec3> kept;
    const std::size_t n = f.polygon.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& p = f.polygon[i];
      const Vec3& q = f.polygon[(i + 1) % n];
      const double sp = normal.dot(p) - offset;
      const double sq = normal.dot(q) - offset;
      if (sp <= tol) kept.push_back(p);
      if (std::abs(sp) <= tol) cap.push_back(p);
      if ((sp < -tol && sq > tol) || (sp > tol && sq < -tol)) {
        const Vec3 x = p + (q - p) * (sp / (sp - sq));
        kept.push_back(x);
        cap.push_back(x);
      }
    }
    std::vector<Vec3> cleaned;
    for (const Vec3& p : kept)
      if (cleaned.empty() || (cleaned.back() - p).norm() > tol) cleaned.push_back(p);
    while (cleaned.size() > 1 && (cleaned.front() - cleaned.back()).norm() <= tol) cleaned.pop_back();
    if (cleaned.size() < 3) continue;
    // Faces that collapsed onto the cutting plane are replaced by the cap.
    bool on_plane = true;
    for (const Vec3& p : cleaned) on_plane = on_plane && std::abs(normal.dot(p) - offset) <= tol;
    if (on_plane) continue;
    out.faces.push_back({f.normal, f.offset, std::move(cleaned)});
  }
  PolytopeFace capf;
  capf.normal = normal;
  capf.offset = offset;
  capf.polygon = order_polygon(std::move(cap), normal, tol);
  if (capf.polygon.size() >= 3) out.faces.push_back(std::move(capf));
  if (out.faces.size() < 4) return {};
  out.rebuild_vertices();
  return out;
}

double polytope_volume(const ConvexPolytope& poly)
{
  double v = 0.0;
  for (const auto& f : poly.faces) {
    const Vec3& a = f.polygon[0];
    for (std::size_t i = 1; i + 1 < f.polygon.size(); ++i) v += a.dot(f.polygon[i].cross(f.polygon[i + 1]));
  }
  return v / 6.0;
}

Vec3 polytope_centroid(const ConvexPolytope& poly)
{
  double vol = 0.0;
  Vec3 acc = Vec3::Zero();
  for (const auto& f : poly.faces) {
    const Vec3& a = f.polygon[0];
    for (std::size_t i = 1; i + 1 < f.polygon.size(); ++i) {
      const double v = a.dot(f.polygon[i].cross(f.polygon[i + 1]));
      vol += v;
      acc += v * (a + f.polygon[i] + f.polygon[i + 1]);
    }
  }
  if (vol == 0.0) return Vec3::Zero();
  return acc / (4.0 * vol);
}

TriMesh polytope_mesh(const ConvexPolytope& poly)
{
  TriMesh m;
  m.flat_shaded = true;
  for (const auto& f : poly.faces) {
    const auto base = static_cast<std::uint32_t>(m.positions.size());
    for (const Vec3& p : f.polygon) {
      m.positions.push_back(p);
      m.normals.push_back(f.normal);
    }
    for (std::uint32_t i = 1; i + 1 < f.polygon.size(); ++i) m.triangles.push_back({base, base + i, base + i + 1});
  }
  return m;
}

}  // namespace worldforge
