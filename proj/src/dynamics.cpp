#include "worldforge/dynamics.hpp"

#include "worldforge/error.hpp"

#include <json.hpp>

#include <map>
#include <numeric>
#include <optional>

namespace worldforge::physics {

// ---------------------------------------------------------------------------------------------
// Shapes and bodies

CollisionShape CollisionShape::sphere(double radius)
{
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "sphere radius must be positive");
  CollisionShape s;
  s.kind = ShapeKind::Sphere;
  s.radius = radius;
  return s;
}

CollisionShape CollisionShape::box(const Vec3& h)
{
  if (!(h.minCoeff() > 0.0)) throw Error(ErrorCode::InvalidArgument, "box half-extents must be positive");
  CollisionShape s;
  s.kind = ShapeKind::Box;
  s.half_extents = h;
  Aabb b;
  b.min = -h;
  b.max = h;
  s.polytope = std::make_shared<const ConvexPolytope>(box_polytope(b));
  return s;
}

CollisionShape CollisionShape::hull(const std::vector<Vec3>& points)
{
  CollisionShape s;
  s.kind = ShapeKind::ConvexHull;
  s.polytope = std::make_shared<const ConvexPolytope>(polytope_from_points(points));
  if (s.polytope->empty()) throw Error(ErrorCode::InvalidArgument, "degenerate convex hull");
  return s;
}

Aabb CollisionShape::local_bounds() const
{
  Aabb b;
  if (kind == ShapeKind::Sphere) {
    b.min = Vec3::Constant(-radius);
    b.max = Vec3::Constant(radius);
  } else {
    for (const Vec3& v : polytope->vertices) b.extend(v);
  }
  return b;
}

TriMesh CollisionShape::mesh() const
{
  switch (kind) {
    case ShapeKind::Sphere: return make_uv_sphere(radius);
    case ShapeKind::Box: return make_box(half_extents);
    case ShapeKind::ConvexHull: return polytope_mesh(*polytope);
  }
  return {};
}

Mat3 RigidBody::inverse_inertia_world() const
{
  if (is_static()) return Mat3::Zero();
  const Mat3 r = pose.orientation.toRotationMatrix();
  return r * inertia.inverse() * r.transpose();
}

void set_mass_from_density(RigidBody& body, double density)
{
  const CollisionShape& s = body.shape;
  if (s.kind == ShapeKind::Sphere) {
    body.mass = density * 4.0 / 3.0 * kPi * std::pow(s.radius, 3);
    body.inertia = Mat3::Identity() * (0.4 * body.mass * s.radius * s.radius);
  } else if (s.kind == ShapeKind::Box) {
    const Vec3 h = s.half_extents;
    body.mass = density * 8.0 * h.prod();
    body.inertia = Mat3::Zero();
    body.inertia(0, 0) = body.mass / 3.0 * (h.y() * h.y() + h.z() * h.z());
    body.inertia(1, 1) = body.mass / 3.0 * (h.x() * h.x() + h.z() * h.z());
    body.inertia(2, 2) = body.mass / 3.0 * (h.x() * h.x() + h.y() * h.y());
  } else {
    const MassProperties mp = mass_properties(polytope_mesh(*s.polytope), density);
    body.mass = mp.mass;
    body.inertia = mp.inertia;
  }
}

RigidBody body_from_world_hull(std::uint32_t id, const std::vector<Vec3>& world_points, double density)
{
  const TriMesh hull = convex_hull(world_points);
  const MassProperties mp = mass_properties(hull, density);
  std::vector<Vec3> local;
  local.reserve(hull.positions.size());
  for (const Vec3& p : hull.positions) local.push_back(p - mp.center);
  RigidBody b;
  b.id = id;
  b.pose.position = mp.center;
  b.shape = CollisionShape::hull(local);
  b.mass = mp.mass;
  b.inertia = mp.inertia;
  return b;
}

RigidBody* World::find(std::uint32_t id)
{
  for (auto& b : bodies)
    if (b.id == id) return &b;
  return nullptr;
}

const RigidBody* World::find(std::uint32_t id) const
{
  for (const auto& b : bodies)
    if (b.id == id) return &b;
  return nullptr;
}

Vec3 accumulate_forces(const RigidBody& body, const std::vector<ForceField>& fields)
{
  Vec3 f = Vec3::Zero();
  if (body.is_static()) return f;
  for (const ForceField& field : fields) {
    switch (field.kind) {
      case ForceField::Kind::Gravity: f += body.mass * field.vector; break;
      case ForceField::Kind::Wind: f += field.coefficient * (field.vector - body.linear_velocity); break;
      case ForceField::Kind::Drag: f -= field.coefficient * body.linear_velocity; break;
    }
  }
  return f;
}

// ---------------------------------------------------------------------------------------------
// Narrow phase

namespace {

constexpr double kTouchEps = 1e-9;

struct Proxy {
  const RigidBody* body = nullptr;
  Aabb bounds;
  std::optional<ConvexPolytope> poly;  // world space
};

Proxy make_proxy(const RigidBody& b)
{
  Proxy p;
  p.body = &b;
  if (b.shape.kind == ShapeKind::Sphere) {
    p.bounds.min = b.pose.position - Vec3::Constant(b.shape.radius);
    p.bounds.max = b.pose.position + Vec3::Constant(b.shape.radius);
  } else {
    p.poly = b.shape.polytope->transformed(b.pose);
    for (const Vec3& v : p.poly->vertices) p.bounds.extend(v);
  }
  p.bounds.min -= Vec3::Constant(b.margin);
  p.bounds.max += Vec3::Constant(b.margin);
  return p;
}

Contact make_contact(const Proxy& a, const Proxy& b, const Vec3& point, const Vec3& normal, double separation)
{
  Contact c;
  c.body_a = a.body->id;
  c.body_b = b.body->id;
  c.point = point;
  c.normal = normal;
  c.penetration = std::max(0.0, a.body->margin + b.body->margin - separation);
  return c;
}

void sphere_sphere(const Proxy& a, const Proxy& b, std::vector<Contact>& out)
{
  const Vec3 ca = a.body->pose.position, cb = b.body->pose.position;
  const double ra = a.body->shape.radius, rb = b.body->shape.radius;
  const Vec3 d = cb - ca;
  const double dist = d.norm();
  const double sep = dist - ra - rb;
  if (sep > a.body->margin + b.body->margin + kTouchEps) return;
  const Vec3 n = dist > 0.0 ? Vec3(d / dist) : Vec3::UnitZ();
  const Vec3 pa = ca + n * ra, pb = cb - n * rb;
  out.push_back(make_contact(a, b, 0.5 * (pa + pb), n, sep));
}

Vec3 closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b)
{
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return a + t * ab;
}

Vec3 closest_on_face(const Vec3& p, const PolytopeFace& f)
{
  const Vec3 q = p - (f.normal.dot(p) - f.offset) * f.normal;
  bool inside = true;
  const std::size_t n = f.polygon.size();
  for (std::size_t i = 0; i < n && inside; ++i) {
    const Vec3& a = f.polygon[i];
    const Vec3& b = f.polygon[(i + 1) % n];
    inside = (b - a).cross(q - a).dot(f.normal) >= 0.0;
  }
  if (inside) return q;
  Vec3 best = f.polygon[0];
  double best_d = kInf;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 c = closest_on_segment(p, f.polygon[i], f.polygon[(i + 1) % n]);
    const double d = (c - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

// Sphere `s` against polytope `p`; `sphere_first` says whether the sphere is body a.
void sphere_polytope(const Proxy& s, const Proxy& p, bool sphere_first, std::vector<Contact>& out)
{
  const Vec3 c = s.body->pose.position;
  const double r = s.body->shape.radius;
  const double margins = s.body->margin + p.body->margin;
  const ConvexPolytope& poly = *p.poly;

  double max_plane = -kInf;
  const PolytopeFace* deepest = nullptr;
  for (const auto& f : poly.faces) {
    const double d = f.normal.dot(c) - f.offset;
    if (d > max_plane) {
      max_plane = d;
      deepest = &f;
    }
  }
  Vec3 n;  // from polytope toward sphere
  Vec3 surface;
  double sep;
  if (max_plane <= 0.0) {
    n = deepest->normal;
    surface = c - max_plane * n;
    sep = max_plane - r;
  } else {
    double best = kInf;
    for (const auto& f : poly.faces) {
      if (f.normal.dot(c) - f.offset < -r - margins) continue;
      const Vec3 q = closest_on_face(c, f);
      const double d = (c - q).squaredNorm();
      if (d < best) {
        best = d;
        surface = q;
      }
    }
    const double dist = std::sqrt(best);
    sep = dist - r;
    if (sep > margins + kTouchEps) return;
    n = dist > 0.0 ? Vec3((c - surface) / dist) : deepest->normal;
  }
  if (sep > margins + kTouchEps) return;
  const Vec3 point = 0.5 * (surface + (c - n * r));
  if (sphere_first)
    out.push_back(make_contact(s, p, point, -n, sep));
  else
    out.push_back(make_contact(p, s, point, n, sep));
}

struct Interval {
  double lo = kInf, hi = -kInf;
};

Interval project_onto(const std::vector<Vec3>& pts, const Vec3& axis)
{
  Interval iv;
  for (const Vec3& p : pts) {
    const double d = axis.dot(p);
    iv.lo = std::min(iv.lo, d);
    iv.hi = std::max(iv.hi, d);
  }
  return iv;
}

std::vector<Vec3> clip_polygon(const std::vector<Vec3>& poly, const Vec3& n, double offset)
{
  std::vector<Vec3> out;
  const std::size_t m = poly.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Vec3& p = poly[i];
    const Vec3& q = poly[(i + 1) % m];
    const double sp = n.dot(p) - offset, sq = n.dot(q) - offset;
    if (sp <= 0.0) out.push_back(p);
    if ((sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0)) out.push_back(p + (q - p) * (sp / (sp - sq)));
  }
  return out;
}

// Face contact: `ref` owns the reference face with outward normal pointing at `inc`.
void face_manifold(const Proxy& ref, const PolytopeFace& rf, const Proxy& inc, bool ref_is_a, double margins,
                   std::vector<Contact>& out)
{
  const PolytopeFace* incident = nullptr;
  double most = kInf;
  for (const auto& f : inc.poly->faces) {
    const double d = f.normal.dot(rf.normal);
    if (d < most) {
      most = d;
      incident = &f;
    }
  }
  std::vector<Vec3> pts = incident->polygon;
  const std::size_t m = rf.polygon.size();
  for (std::size_t i = 0; i < m && !pts.empty(); ++i) {
    const Vec3& a = rf.polygon[i];
    const Vec3& b = rf.polygon[(i + 1) % m];
    const Vec3 side = (b - a).cross(rf.normal).normalized();
    pts = clip_polygon(pts, side, side.dot(a));
  }
  const std::size_t before = out.size();
  for (const Vec3& p : pts) {
    const double sep = rf.normal.dot(p) - rf.offset;
    if (sep > margins + kTouchEps) continue;
    const Vec3 point = p - 0.5 * sep * rf.normal;
    if (ref_is_a)
      out.push_back(make_contact(ref, inc, point, rf.normal, sep));
    else
      out.push_back(make_contact(inc, ref, point, -rf.normal, sep));
  }
  if (out.size() == before) {
    // Degenerate clip (e.g. vertex touching a face edge): fall back to the deepest incident vertex.
    Vec3 best = inc.poly->vertices[0];
    for (const Vec3& v : inc.poly->vertices)
      if (rf.normal.dot(v) < rf.normal.dot(best)) best = v;
    const double sep = rf.normal.dot(best) - rf.offset;
    const Vec3 point = best - 0.5 * sep * rf.normal;
    if (ref_is_a)
      out.push_back(make_contact(ref, inc, point, rf.normal, sep));
    else
      out.push_back(make_contact(inc, ref, point, -rf.normal, sep));
  }
}

// Closest points between segments p1-q1 and p2-q2.
std::pair<Vec3, Vec3> segment_closest(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2)
{
  const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0.0, t = 0.0;
  const double c = d1.dot(r), b = d1.dot(d2);
  const double denom = a * e - b * b;
  if (denom > 1e-14 * a * e) s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
  t = e > 0.0 ? (b * s + f) / e : 0.0;
  if (t < 0.0) {
    t = 0.0;
    s = a > 0.0 ? std::clamp(-c / a, 0.0, 1.0) : 0.0;
  } else if (t > 1.0) {
    t = 1.0;
    s = a > 0.0 ? std::clamp((b - c) / a, 0.0, 1.0) : 0.0;
  }
  return {p1 + d1 * s, p2 + d2 * t};
}

// Edge of `poly` parallel to `dir` whose midpoint is extreme along `axis` (max if `maximize`).
std::pair<Vec3, Vec3> support_edge(const ConvexPolytope& poly, const Vec3& dir, const Vec3& axis, bool maximize)
{
  std::pair<Vec3, Vec3> best{poly.vertices[0], poly.vertices[0]};
  double best_score = -kInf;
  for (const auto& f : poly.faces) {
    for (std::size_t i = 0, n = f.polygon.size(); i < n; ++i) {
      const Vec3& a = f.polygon[i];
      const Vec3& b = f.polygon[(i + 1) % n];
      const Vec3 e = b - a;
      const double len = e.norm();
      if (len <= 1e-12 || std::abs(std::abs(e.dot(dir)) / len - 1.0) > 1e-9) continue;
      const double score = (maximize ? 1.0 : -1.0) * axis.dot(0.5 * (a + b));
      if (score > best_score) {
        best_score = score;
        best = {a, b};
      }
    }
  }
  return best;
}

void polytope_polytope(const Proxy& a, const Proxy& b, std::vector<Contact>& out)
{
  const ConvexPolytope& pa = *a.poly;
  const ConvexPolytope& pb = *b.poly;
  const double margins = a.body->margin + b.body->margin;

  // Face axes of A: separation = min over B of plane distance.
  double best_a = -kInf;
  const PolytopeFace* face_a = nullptr;
  for (const auto& f : pa.faces) {
    double s = kInf;
    for (const Vec3& v : pb.vertices) s = std::min(s, f.normal.dot(v) - f.offset);
    if (s > margins + kTouchEps) return;
    if (s > best_a) {
      best_a = s;
      face_a = &f;
    }
  }
  double best_b = -kInf;
  const PolytopeFace* face_b = nullptr;
  for (const auto& f : pb.faces) {
    double s = kInf;
    for (const Vec3& v : pa.vertices) s = std::min(s, f.normal.dot(v) - f.offset);
    if (s > margins + kTouchEps) return;
    if (s > best_b) {
      best_b = s;
      face_b = &f;
    }
  }
  const Vec3 ca = a.body->pose.position, cb = b.body->pose.position;
  double best_e = -kInf;
  Vec3 axis_e, dir_a, dir_b;
  const auto edges_a = pa.edge_directions();
  const auto edges_b = pb.edge_directions();
  for (const Vec3& ea : edges_a) {
    for (const Vec3& eb : edges_b) {
      Vec3 axis = ea.cross(eb);
      const double len = axis.norm();
      if (len < 1e-6) continue;
      axis /= len;
      if (axis.dot(cb - ca) < 0.0) axis = -axis;
      const Interval ia = project_onto(pa.vertices, axis);
      const Interval ib = project_onto(pb.vertices, axis);
      const double s = ib.lo - ia.hi;
      if (s > margins + kTouchEps) return;
      if (s > best_e) {
        best_e = s;
        axis_e = axis;
        dir_a = ea;
        dir_b = eb;
      }
    }
  }

  // Prefer face contacts unless an edge axis is clearly better; keeps manifolds stable.
  constexpr double kRelTol = 0.95, kAbsTol = 1e-4;
  const double best_face = std::max(best_a, best_b);
  if (best_e > kRelTol * best_face + kAbsTol && best_e > best_face) {
    const auto [a0, a1] = support_edge(pa, dir_a, axis_e, true);
    const auto [b0, b1] = support_edge(pb, dir_b, axis_e, false);
    const auto [qa, qb] = segment_closest(a0, a1, b0, b1);
    out.push_back(make_contact(a, b, 0.5 * (qa + qb), axis_e, best_e));
    return;
  }
  if (best_b > kRelTol * best_a + kAbsTol)
    face_manifold(b, *face_b, a, false, margins, out);
  else
    face_manifold(a, *face_a, b, true, margins, out);
}

void narrow_phase(const Proxy& a, const Proxy& b, std::vector<Contact>& out)
{
  const bool sa = a.body->shape.kind == ShapeKind::Sphere;
  const bool sb = b.body->shape.kind == ShapeKind::Sphere;
  if (sa && sb)
    sphere_sphere(a, b, out);
  else if (sa)
    sphere_polytope(a, b, true, out);
  else if (sb)
    sphere_polytope(b, a, false, out);
  else
    polytope_polytope(a, b, out);
}

}  // namespace

std::vector<Contact> detect_contacts(const std::vector<RigidBody>& bodies)
{
  std::vector<Proxy> proxies;
  proxies.reserve(bodies.size());
  for (const auto& b : bodies) proxies.push_back(make_proxy(b));

  std::vector<std::size_t> order(bodies.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (proxies[i].bounds.min.x() != proxies[j].bounds.min.x()) return proxies[i].bounds.min.x() < proxies[j].bounds.min.x();
    return bodies[i].id < bodies[j].id;
  });

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> active;
  for (std::size_t idx : order) {
    const Proxy& p = proxies[idx];
    std::erase_if(active, [&](std::size_t k) { return proxies[k].bounds.max.x() < p.bounds.min.x(); });
    for (std::size_t k : active) {
      if (bodies[k].is_static() && bodies[idx].is_static()) continue;
      if (!proxies[k].bounds.overlaps(p.bounds)) continue;
      if (bodies[k].id < bodies[idx].id)
        pairs.emplace_back(k, idx);
      else
        pairs.emplace_back(idx, k);
    }
    active.push_back(idx);
  }
  std::sort(pairs.begin(), pairs.end(), [&](const auto& x, const auto& y) {
    return std::pair(bodies[x.first].id, bodies[x.second].id) < std::pair(bodies[y.first].id, bodies[y.second].id);
  });

  std::vector<Contact> contacts;
  for (const auto& [i, j] : pairs) narrow_phase(proxies[i], proxies[j], contacts);
  return contacts;
}

// ---------------------------------------------------------------------------------------------
// Resolution

namespace {

struct ContactRow {
  RigidBody* a;
  RigidBody* b;
  Vec3 ra, rb, n, t1, t2;
  double kn, kt1, kt2;
  double target = 0.0;
  double mu = 0.0;
  double jn = 0.0, jt1 = 0.0, jt2 = 0.0;
};

Vec3 point_velocity(const RigidBody& body, const Vec3& r)
{
  return body.linear_velocity + body.angular_velocity.cross(r);
}

double effective_mass(const RigidBody& a, const RigidBody& b, const Mat3& ia, const Mat3& ib, const Vec3& ra, const Vec3& rb,
                      const Vec3& dir)
{
  const Vec3 rna = ra.cross(dir), rnb = rb.cross(dir);
  return a.inverse_mass() + b.inverse_mass() + rna.dot(ia * rna) + rnb.dot(ib * rnb);
}

void apply_impulse(RigidBody& a, RigidBody& b, const Mat3& ia, const Mat3& ib, const Vec3& ra, const Vec3& rb, const Vec3& j)
{
  if (!a.is_static()) {
    a.linear_velocity -= a.inverse_mass() * j;
    a.angular_velocity -= ia * ra.cross(j);
  }
  if (!b.is_static()) {
    b.linear_velocity += b.inverse_mass() * j;
    b.angular_velocity += ib * rb.cross(j);
  }
}

}  // namespace

void resolve_contacts(World& world, std::vector<Contact>& contacts, double dt)
{
  (void)dt;
  if (contacts.empty()) return;
  std::map<std::uint32_t, RigidBody*> by_id;
  for (auto& b : world.bodies) by_id[b.id] = &b;
  std::map<std::uint32_t, Mat3> inv_inertia;
  for (auto& b : world.bodies) inv_inertia[b.id] = b.inverse_inertia_world();

  const SolverSettings& cfg = world.settings;
  std::vector<ContactRow> rows;
  rows.reserve(contacts.size());
  for (const Contact& c : contacts) {
    auto ia = by_id.find(c.body_a), ib = by_id.find(c.body_b);
    if (ia == by_id.end() || ib == by_id.end()) throw Error(ErrorCode::UnknownBody, "contact references a missing body");
    ContactRow row{ia->second, ib->second, {}, {}, c.normal, {}, {}, 0, 0, 0};
    RigidBody& a = *row.a;
    RigidBody& b = *row.b;
    const Mat3& Ia = inv_inertia[a.id];
    const Mat3& Ib = inv_inertia[b.id];
    row.ra = c.point - a.pose.position;
    row.rb = c.point - b.pose.position;
    orthonormal_basis(row.n, row.t1, row.t2);
    row.kn = effective_mass(a, b, Ia, Ib, row.ra, row.rb, row.n);
    row.kt1 = effective_mass(a, b, Ia, Ib, row.ra, row.rb, row.t1);
    row.kt2 = effective_mass(a, b, Ia, Ib, row.ra, row.rb, row.t2);
    const double vn = row.n.dot(point_velocity(b, row.rb) - point_velocity(a, row.ra));
    const double e = std::min(a.restitution, b.restitution);
    row.target = vn < -cfg.restitution_threshold ? -e * vn : 0.0;
    row.mu = std::sqrt(std::max(0.0, a.friction) * std::max(0.0, b.friction));
    rows.push_back(row);
  }

  for (int it = 0; it < cfg.iterations; ++it) {
    for (ContactRow& row : rows) {
      if (row.kn <= 0.0) continue;
      RigidBody& a = *row.a;
      RigidBody& b = *row.b;
      const Mat3& Ia = inv_inertia[a.id];
      const Mat3& Ib = inv_inertia[b.id];

      const double vn = row.n.dot(point_velocity(b, row.rb) - point_velocity(a, row.ra));
      const double jn = std::max(0.0, row.jn + (row.target - vn) / row.kn);
      const double djn = jn - row.jn;
      row.jn = jn;
      if (djn != 0.0) apply_impulse(a, b, Ia, Ib, row.ra, row.rb, djn * row.n);

      if (row.mu <= 0.0) continue;
      const Vec3 vrel = point_velocity(b, row.rb) - point_velocity(a, row.ra);
      double j1 = row.jt1 - row.t1.dot(vrel) / row.kt1;
      double j2 = row.jt2 - row.t2.dot(vrel) / row.kt2;
      const double limit = row.mu * row.jn;
      const double mag = std::hypot(j1, j2);
      if (mag > limit) {
        const double s = mag > 0.0 ? limit / mag : 0.0;
        j1 *= s;
        j2 *= s;
      }
      const Vec3 dj = (j1 - row.jt1) * row.t1 + (j2 - row.jt2) * row.t2;
      row.jt1 = j1;
      row.jt2 = j2;
      if (dj.squaredNorm() > 0.0) apply_impulse(a, b, Ia, Ib, row.ra, row.rb, dj);
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) contacts[i].impulse = rows[i].jn;

  // Positional projection, once per body pair using its deepest point.
  for (std::size_t i = 0; i < contacts.size();) {
    std::size_t j = i;
    double deepest = 0.0;
    Vec3 n = contacts[i].normal;
    while (j < contacts.size() && contacts[j].body_a == contacts[i].body_a && contacts[j].body_b == contacts[i].body_b) {
      if (contacts[j].penetration > deepest) {
        deepest = contacts[j].penetration;
        n = contacts[j].normal;
      }
      ++j;
    }
    RigidBody& a = *rows[i].a;
    RigidBody& b = *rows[i].b;
    const double wa = a.inverse_mass(), wb = b.inverse_mass();
    const double corr = cfg.baumgarte * std::max(0.0, deepest - cfg.slop);
    if (corr > 0.0 && wa + wb > 0.0) {
      a.pose.position -= n * (corr * wa / (wa + wb));
      b.pose.position += n * (corr * wb / (wa + wb));
    }
    i = j;
  }
}

double kinetic_energy(const World& world)
{
  double e = 0.0;
  for (const auto& b : world.bodies) {
    if (b.is_static()) continue;
    const Mat3 r = b.pose.orientation.toRotationMatrix();
    const Mat3 iw = r * b.inertia * r.transpose();
    e += 0.5 * b.mass * b.linear_velocity.squaredNorm() + 0.5 * b.angular_velocity.dot(iw * b.angular_velocity);
  }
  return e;
}

double potential_energy(const World& world)
{
  double e = 0.0;
  for (const auto& f : world.fields)
    if (f.kind == ForceField::Kind::Gravity)
      for (const auto& b : world.bodies)
        if (!b.is_static()) e -= b.mass * f.vector.dot(b.pose.position);
  return e;
}

std::vector<Contact> step(World& world, double dt)
{
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "time step must be positive");
  const bool has_wind =
      std::any_of(world.fields.begin(), world.fields.end(), [](const ForceField& f) { return f.kind == ForceField::Kind::Wind; });
  const double e_before = has_wind ? 0.0 : kinetic_energy(world) + potential_energy(world);

  for (auto& b : world.bodies) {
    if (b.is_static()) continue;
    const Vec3 f = accumulate_forces(b, world.fields);
    b.linear_velocity += f * (dt / b.mass);
    b.pose.position += b.linear_velocity * dt;
    b.pose.orientation = integrate_rotation(b.pose.orientation, b.angular_velocity, dt);
  }
  std::vector<Contact> contacts = detect_contacts(world.bodies);
  resolve_contacts(world, contacts, dt);

  if (!has_wind && !contacts.empty()) {
    // Projection can lift bodies against gravity; shed that energy from the contacting bodies so
    // a step never creates mechanical energy.
    const double excess = kinetic_energy(world) + potential_energy(world) - e_before;
    if (excess > 0.0) {
      std::vector<RigidBody*> touched;
      for (const Contact& c : contacts)
        for (std::uint32_t id : {c.body_a, c.body_b}) {
          RigidBody* b = world.find(id);
          if (b && !b->is_static() && std::find(touched.begin(), touched.end(), b) == touched.end()) touched.push_back(b);
        }
      double ke = 0.0;
      for (RigidBody* b : touched) {
        const Mat3 r = b->pose.orientation.toRotationMatrix();
        ke += 0.5 * b->mass * b->linear_velocity.squaredNorm() +
              0.5 * b->angular_velocity.dot(r * b->inertia * r.transpose() * b->angular_velocity);
      }
      const double scale = ke > 0.0 ? std::sqrt(std::max(0.0, ke - excess) / ke) : 0.0;
      for (RigidBody* b : touched) {
        b->linear_velocity *= scale;
        b->angular_velocity *= scale;
      }
    }
  }

  for (const auto& b : world.bodies) {
    if (!b.pose.position.allFinite() || !b.pose.orientation.coeffs().allFinite() || !b.linear_velocity.allFinite() ||
        !b.angular_velocity.allFinite())
      throw Error(ErrorCode::NonFiniteState, "body " + std::to_string(b.id) + " has a non-finite state");
  }
  return contacts;
}

// ---------------------------------------------------------------------------------------------
// Simulation driver

namespace {

FrameRecord snapshot(const World& world, int frame, double time)
{
  FrameRecord rec;
  rec.frame = frame;
  rec.time = time;
  rec.bodies.reserve(world.bodies.size());
  for (const auto& b : world.bodies) rec.bodies.push_back({b.id, b.pose.position, b.pose.orientation});
  return rec;
}

}  // namespace

Trajectory simulate(World& world, double duration, double frame_rate, int substeps, const StepHook& hook,
                    double report_threshold)
{
  if (!(duration > 0.0) || !(frame_rate >= 1.0) || substeps < 1)
    throw Error(ErrorCode::InvalidArgument, "simulate needs duration > 0, frame rate >= 1, substeps >= 1");
  Trajectory traj;
  traj.frame_rate = frame_rate;
  if (world.bodies.empty()) return traj;
  const int frames = std::max(1, static_cast<int>(std::lround(duration * frame_rate)));
  const double dt = 1.0 / (frame_rate * substeps);
  traj.frames.push_back(snapshot(world, 0, 0.0));
  for (int k = 1; k < frames; ++k) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> impulses;
    for (int s = 0; s < substeps; ++s) {
      std::vector<Contact> contacts = step(world, dt);
      for (const Contact& c : contacts) impulses[{c.body_a, c.body_b}] += c.impulse;
      if (hook) hook(world, contacts, static_cast<double>((k - 1) * substeps + s + 1) * dt);
    }
    FrameRecord rec = snapshot(world, k, static_cast<double>(k) / frame_rate);
    for (const auto& [pair, j] : impulses)
      if (j > report_threshold) rec.contacts.push_back({pair.first, pair.second, j});
    traj.frames.push_back(std::move(rec));
  }
  return traj;
}

std::string trajectory_to_jsonl(const Trajectory& trajectory)
{
  std::string out;
  for (const FrameRecord& f : trajectory.frames) {
    nlohmann::json j;
    j["frame"] = f.frame;
    j["time"] = f.time;
    j["bodies"] = nlohmann::json::array();
    for (const BodyState& b : f.bodies) {
      j["bodies"].push_back({{"id", b.id},
                             {"position", {b.position.x(), b.position.y(), b.position.z()}},
                             {"quaternion", {b.orientation.w(), b.orientation.x(), b.orientation.y(), b.orientation.z()}}});
    }
    j["contacts"] = nlohmann::json::array();
    for (const PairImpulse& c : f.contacts) j["contacts"].push_back({{"a", c.body_a}, {"b", c.body_b}, {"impulse", c.impulse}});
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace worldforge::physics
