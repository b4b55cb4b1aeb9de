#include "worldforge/render.hpp"

#include "worldforge/error.hpp"
#include "worldforge/parallel.hpp"
#include "worldforge/random.hpp"

#include <algorithm>
#include <cmath>

namespace worldforge {

// ---------------------------------------------------------------------------------------------
// BVH

namespace {

constexpr int kLeafSize = 4;

Aabb triangle_box(const WorldTriangle& t)
{
  Aabb b;
  b.extend(t.a);
  b.extend(t.b);
  b.extend(t.c);
  return b;
}

bool ray_box(const Aabb& b, const Vec3& o, const Vec3& inv, double t_max)
{
  double t0 = 0.0, t1 = t_max;
  for (int k = 0; k < 3; ++k) {
    double a = (b.min[k] - o[k]) * inv[k];
    double c = (b.max[k] - o[k]) * inv[k];
    if (a > c) std::swap(a, c);
    // NaN from 0 * inf means the ray lies in the slab plane; treat as inside.
    if (!std::isnan(a)) t0 = std::max(t0, a);
    if (!std::isnan(c)) t1 = std::min(t1, c);
    if (t0 > t1) return false;
  }
  return true;
}

// Moller-Trumbore without culling.
bool ray_triangle(const WorldTriangle& tri, const Vec3& o, const Vec3& d, double& t, double& u, double& v)
{
  const Vec3 e1 = tri.b - tri.a, e2 = tri.c - tri.a;
  const Vec3 p = d.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-18) return false;
  const double inv = 1.0 / det;
  const Vec3 s = o - tri.a;
  u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 q = s.cross(e1);
  v = d.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  t = e2.dot(q) * inv;
  return t > 0.0;
}

}  // namespace

Bvh::Bvh(std::vector<WorldTriangle> triangles) : tris_(std::move(triangles))
{
  if (!tris_.empty()) build(0, static_cast<int>(tris_.size()), 0);
}

int Bvh::build(int first, int count, int depth)
{
  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  Aabb box, centroids;
  for (int i = first; i < first + count; ++i) {
    box.extend(triangle_box(tris_[i]));
    centroids.extend((tris_[i].a + tris_[i].b + tris_[i].c) / 3.0);
  }
  nodes_[index].box = box;
  nodes_[index].first = first;
  nodes_[index].count = count;
  const Vec3 extent = centroids.max - centroids.min;
  if (count <= kLeafSize || depth > 48 || extent.maxCoeff() <= 0.0) return index;
  int axis = 0;
  extent.maxCoeff(&axis);
  const int mid = first + count / 2;
  std::nth_element(tris_.begin() + first, tris_.begin() + mid, tris_.begin() + first + count,
                   [axis](const WorldTriangle& p, const WorldTriangle& q) {
                     const double cp = p.a[axis] + p.b[axis] + p.c[axis], cq = q.a[axis] + q.b[axis] + q.c[axis];
                     if (cp != cq) return cp < cq;
                     return std::tie(p.entity, p.triangle) < std::tie(q.entity, q.triangle);
                   });
  const int left = build(first, mid - first, depth + 1);
  const int right = build(mid, first + count - mid, depth + 1);
  nodes_[index].left = left;
  nodes_[index].right = right;
  nodes_[index].count = 0;
  return index;
}

std::optional<RayHit> Bvh::intersect(const Vec3& o, const Vec3& d, double t_max) const
{
  if (nodes_.empty()) return std::nullopt;
  const Vec3 inv = d.cwiseInverse();
  RayHit best;
  best.t = t_max;
  bool found = false;
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& n = nodes_[stack[--top]];
    if (!ray_box(n.box, o, inv, best.t)) continue;
    if (n.left < 0) {
      for (int i = n.first; i < n.first + n.count; ++i) {
        double t, u, v;
        if (!ray_triangle(tris_[i], o, d, t, u, v)) continue;
        const WorldTriangle& w = tris_[i];
        const bool closer = t < best.t ||
                            (found && t == best.t && std::tie(w.entity, w.triangle) < std::tie(best.entity, best.triangle));
        if (!closer) continue;
        best = {t, w.entity, w.triangle, u, v};
        found = true;
      }
    } else {
      stack[top++] = n.left;
      stack[top++] = n.right;
    }
  }
  if (!found) return std::nullopt;
  return best;
}

bool Bvh::occluded(const Vec3& o, const Vec3& d, double t_max) const
{
  if (nodes_.empty()) return false;
  const Vec3 inv = d.cwiseInverse();
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& n = nodes_[stack[--top]];
    if (!ray_box(n.box, o, inv, t_max)) continue;
    if (n.left < 0) {
      for (int i = n.first; i < n.first + n.count; ++i) {
        double t, u, v;
        if (ray_triangle(tris_[i], o, d, t, u, v) && t < t_max) return true;
      }
    } else {
      stack[top++] = n.left;
      stack[top++] = n.right;
    }
  }
  return false;
}

PosedScene pose_scene(const Scene& scene, double t)
{
  PosedScene ps;
  ps.time = t;
  std::vector<WorldTriangle> tris;
  for (const Entity& e : scene.entities) {
    if (!e.visible_at(t) || !e.mesh) continue;
    const int index = static_cast<int>(ps.entities.size());
    const Pose pose = e.track.eval(t);
    ps.entities.push_back({&e, pose});
    const TriMesh& m = *e.mesh;
    std::vector<Vec3> world(m.positions.size());
    for (std::size_t i = 0; i < world.size(); ++i) world[i] = pose.apply(m.positions[i]);
    for (std::size_t k = 0; k < m.triangles.size(); ++k) {
      const auto& tri = m.triangles[k];
      tris.push_back({world[tri[0]], world[tri[1]], world[tri[2]], index, static_cast<int>(k)});
    }
  }
  ps.bvh = Bvh(std::move(tris));
  return ps;
}

View view_at(const CameraRig& rig, double t) { return {rig.pose_at(t), rig.intrinsics_at(t)}; }

// ---------------------------------------------------------------------------------------------
// G-buffer

namespace {

void fill_sample(GSample& g, const PosedScene& scene, int entity, int triangle, const Vec3& bary, const Vec3& eye,
                 double depth)
{
  const PosedEntity& pe = scene.entities[entity];
  const TriMesh& m = *pe.entity->mesh;
  const auto& tri = m.triangles[triangle];
  const Vec3 local = bary[0] * m.positions[tri[0]] + bary[1] * m.positions[tri[1]] + bary[2] * m.positions[tri[2]];
  g.position = pe.pose.apply(local);
  Vec3 n;
  if (m.flat_shaded || m.normals.size() != m.positions.size()) {
    n = face_normal(m, triangle);
  } else {
    n = bary[0] * m.normals[tri[0]] + bary[1] * m.normals[tri[1]] + bary[2] * m.normals[tri[2]];
    if (n.squaredNorm() < 1e-24) n = face_normal(m, triangle);
  }
  n = pe.pose.rotate(n).normalized();
  if (n.dot(g.position - eye) > 0.0) n = -n;
  g.normal = n;
  if (m.has_uvs()) g.uv = bary[0] * m.uvs[tri[0]] + bary[1] * m.uvs[tri[1]] + bary[2] * m.uvs[tri[2]];
  g.entity = entity;
  g.triangle = triangle;
  g.bary = bary;
  g.instance = pe.entity->id;
  g.semantic = static_cast<std::uint16_t>(pe.entity->label);
  g.range = (g.position - eye).norm();
  g.depth = static_cast<float>(depth);
}

struct ScreenTriangle {
  Vec2 p[3];
  double inv_z[3];
  Vec3 bary[3];  // barycentrics of each clipped vertex in the source triangle
  Vec3 cam[3];
  int entity, triangle;
  int y0, y1;
};

constexpr double kNearPlane = 1e-4;

}  // namespace

GBuffer rasterize(const PosedScene& scene, const View& view, int threads)
{
  const Intrinsics& in = view.intrinsics;
  if (in.model != ProjectionModel::Pinhole || in.has_distortion()) return raycast_gbuffer(scene, view, threads);
  GBuffer g;
  g.width = in.width;
  g.height = in.height;
  g.samples.assign(static_cast<std::size_t>(in.width) * in.height, GSample{});
  const Vec3 eye = view.world_from_camera.position;
  const Pose cam_from_world = view.world_from_camera.inverse();

  std::vector<ScreenTriangle> screen;
  for (int ei = 0; ei < static_cast<int>(scene.entities.size()); ++ei) {
    const PosedEntity& pe = scene.entities[ei];
    const TriMesh& m = *pe.entity->mesh;
    const Pose cam_from_local = cam_from_world * pe.pose;
    std::vector<Vec3> pc(m.positions.size());
    for (std::size_t i = 0; i < pc.size(); ++i) pc[i] = cam_from_local.apply(m.positions[i]);
    for (int k = 0; k < static_cast<int>(m.triangles.size()); ++k) {
      const auto& tri = m.triangles[k];
      // Clip against the near plane in barycentric space.
      struct V {
        Vec3 cam, bary;
      };
      std::vector<V> poly = {{pc[tri[0]], Vec3(1, 0, 0)}, {pc[tri[1]], Vec3(0, 1, 0)}, {pc[tri[2]], Vec3(0, 0, 1)}};
      if (poly[0].cam.z() < kNearPlane || poly[1].cam.z() < kNearPlane || poly[2].cam.z() < kNearPlane) {
        std::vector<V> out;
        for (std::size_t i = 0; i < poly.size(); ++i) {
          const V& a = poly[i];
          const V& b = poly[(i + 1) % poly.size()];
          const bool ia = a.cam.z() >= kNearPlane, ib = b.cam.z() >= kNearPlane;
          if (ia) out.push_back(a);
          if (ia != ib) {
            const double s = (kNearPlane - a.cam.z()) / (b.cam.z() - a.cam.z());
            out.push_back({a.cam + s * (b.cam - a.cam), a.bary + s * (b.bary - a.bary)});
          }
        }
        poly = std::move(out);
      }
      for (std::size_t j = 1; j + 1 < poly.size(); ++j) {
        ScreenTriangle st;
        const V* vs[3] = {&poly[0], &poly[j], &poly[j + 1]};
        double ymin = kInf, ymax = -kInf;
        for (int v = 0; v < 3; ++v) {
          const Vec3& c = vs[v]->cam;
          st.p[v] = Vec2(in.focal * c.x() / c.z() + in.principal.x(), in.focal * c.y() / c.z() + in.principal.y());
          st.inv_z[v] = 1.0 / c.z();
          st.bary[v] = vs[v]->bary;
          st.cam[v] = c;
          ymin = std::min(ymin, st.p[v].y());
          ymax = std::max(ymax, st.p[v].y());
        }
        if (!(ymax >= 0.0) || !(ymin <= in.height)) continue;
        st.y0 = std::max(0, static_cast<int>(std::floor(ymin - 0.5)));
        st.y1 = std::min(in.height - 1, static_cast<int>(std::ceil(ymax - 0.5)));
        st.entity = ei;
        st.triangle = k;
        screen.push_back(st);
      }
    }
  }

  // Each worker owns whole rows, so the z-buffer needs no synchronization.
  parallel_for(in.height, threads, [&](int y) {
    std::vector<double> zbuf(static_cast<std::size_t>(in.width), kInf);
    const double py = y + 0.5;
    for (const ScreenTriangle& st : screen) {
      if (y < st.y0 || y > st.y1) continue;
      const Vec2 &a = st.p[0], &b = st.p[1], &c = st.p[2];
      const double area = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
      if (area == 0.0 || !std::isfinite(area)) continue;
      const double xmin = std::min({a.x(), b.x(), c.x()}), xmax = std::max({a.x(), b.x(), c.x()});
      const int x0 = std::max(0, static_cast<int>(std::floor(xmin - 0.5)));
      const int x1 = std::min(in.width - 1, static_cast<int>(std::ceil(xmax - 0.5)));
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        const double w0 = ((b.x() - px) * (c.y() - py) - (b.y() - py) * (c.x() - px)) / area;
        const double w1 = ((c.x() - px) * (a.y() - py) - (c.y() - py) * (a.x() - px)) / area;
        const double w2 = 1.0 - w0 - w1;
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        const double iz = w0 * st.inv_z[0] + w1 * st.inv_z[1] + w2 * st.inv_z[2];
        const double z = 1.0 / iz;
        if (!(z < zbuf[x])) continue;
        zbuf[x] = z;
        const double q0 = w0 * st.inv_z[0] * z, q1 = w1 * st.inv_z[1] * z, q2 = w2 * st.inv_z[2] * z;
        const Vec3 bary = q0 * st.bary[0] + q1 * st.bary[1] + q2 * st.bary[2];
        const Vec3 cam = q0 * st.cam[0] + q1 * st.cam[1] + q2 * st.cam[2];
        fill_sample(g.at(x, y), scene, st.entity, st.triangle, bary, eye, cam.z());
      }
    }
  });
  return g;
}

GBuffer raycast_gbuffer(const PosedScene& scene, const View& view, int threads)
{
  const Intrinsics& in = view.intrinsics;
  GBuffer g;
  g.width = in.width;
  g.height = in.height;
  g.samples.assign(static_cast<std::size_t>(in.width) * in.height, GSample{});
  const Vec3 eye = view.world_from_camera.position;
  parallel_for(in.height, threads, [&](int y) {
    for (int x = 0; x < in.width; ++x) {
      const auto d = pixel_direction(in, Vec2(x + 0.5, y + 0.5));
      if (!d) continue;
      const Vec3 dir = view.world_from_camera.rotate(*d);
      const auto hit = scene.bvh.intersect(eye, dir);
      if (!hit) continue;
      const double depth = in.model == ProjectionModel::Pinhole ? hit->t * d->z() : hit->t;
      fill_sample(g.at(x, y), scene, hit->entity, hit->triangle, Vec3(1.0 - hit->u - hit->v, hit->u, hit->v), eye, depth);
    }
  });
  return g;
}

// ---------------------------------------------------------------------------------------------
// Shading

namespace {

// sRGB-ish blackbody color (Helland's fit), decoded to linear and normalized to unit luma.
Vec3 blackbody_fit(double kelvin)
{
  const double t = kelvin / 100.0;
  double r, g, b;
  if (t <= 66.0) {
    r = 255.0;
    g = 99.4708025861 * std::log(t) - 161.1195681661;
  } else {
    r = 329.698727446 * std::pow(t - 60.0, -0.1332047592);
    g = 288.1221695283 * std::pow(t - 60.0, -0.0755148492);
  }
  if (t >= 66.0)
    b = 255.0;
  else if (t <= 19.0)
    b = 0.0;
  else
    b = 138.5177312231 * std::log(t - 10.0) - 305.0447927307;
  Vec3 c(std::clamp(r, 0.0, 255.0), std::clamp(g, 0.0, 255.0), std::clamp(b, 0.0, 255.0));
  c = (c / 255.0).array().pow(2.2).matrix();
  return c / luma(c.x(), c.y(), c.z());
}

struct BlackbodyTable {
  static constexpr int kMin = 1000, kMax = 12000, kStep = 100;
  std::vector<Vec3> rows;
  BlackbodyTable()
  {
    for (int k = kMin; k <= kMax; k += kStep) rows.push_back(blackbody_fit(k));
  }
};

bool same_intrinsics(const Intrinsics& a, const Intrinsics& b)
{
  return a.model == b.model && a.focal == b.focal && a.principal == b.principal && a.width == b.width &&
         a.height == b.height && a.k1 == b.k1 && a.k2 == b.k2;
}

Vec3 material_albedo(const GSample& g, const PosedEntity& pe)
{
  const assets::Material* mat = pe.entity->material.get();
  if (!mat) return Vec3::Constant(0.8);
  if (mat->albedo_texture && pe.entity->mesh->has_uvs()) return assets::sample_texture(*mat->albedo_texture, g.uv);
  return mat->base_color;
}

Vec3 perturbed_normal(const GSample& g, const PosedEntity& pe)
{
  const assets::Material* mat = pe.entity->material.get();
  const TriMesh& m = *pe.entity->mesh;
  if (!mat || !mat->normal_map || !m.has_uvs() || mat->normal_strength == 0.0) return g.normal;
  const auto& tri = m.triangles[g.triangle];
  const Vec3 dp1 = pe.pose.rotate(m.positions[tri[1]] - m.positions[tri[0]]);
  const Vec3 dp2 = pe.pose.rotate(m.positions[tri[2]] - m.positions[tri[0]]);
  const Vec2 duv1 = m.uvs[tri[1]] - m.uvs[tri[0]], duv2 = m.uvs[tri[2]] - m.uvs[tri[0]];
  const double r = duv1.x() * duv2.y() - duv2.x() * duv1.y();
  if (std::abs(r) < 1e-14) return g.normal;
  const Vec3& n = g.normal;
  Vec3 t = (dp1 * duv2.y() - dp2 * duv1.y()) / r;
  t = t - n * n.dot(t);
  if (t.squaredNorm() < 1e-24) return g.normal;
  t.normalize();
  Vec3 b = n.cross(t);
  const Vec3 b_uv = (dp2 * duv1.x() - dp1 * duv2.x()) / r;
  if (b.dot(b_uv) < 0.0) b = -b;
  const Vec3 c = assets::sample_texture(*mat->normal_map, g.uv) * 2.0 - Vec3::Ones();
  const Vec3 p = (mat->normal_strength * (c.x() * t + c.y() * b) + std::max(c.z(), 1e-3) * n);
  return p.normalized();
}

}  // namespace

Vec3 blackbody_rgb(double kelvin)
{
  static const BlackbodyTable table;
  const double k = std::clamp(kelvin, double(BlackbodyTable::kMin), double(BlackbodyTable::kMax));
  const double f = (k - BlackbodyTable::kMin) / BlackbodyTable::kStep;
  const auto i = std::min(static_cast<std::size_t>(f), table.rows.size() - 2);
  const double s = f - static_cast<double>(i);
  return (1.0 - s) * table.rows[i] + s * table.rows[i + 1];
}

std::vector<Light> resolve_lights(const Scene& scene, const PosedScene& posed)
{
  std::vector<Light> lights = scene.lights;
  auto sun_at = [](double elevation_deg, double irradiance, double kelvin) {
    const double e = elevation_deg * kPi / 180.0, a = 135.0 * kPi / 180.0;
    const Vec3 to_sun(std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), std::sin(e));
    return Light::sun(-to_sun, irradiance, kelvin);
  };
  if (lights.empty()) {
    switch (scene.weather.lighting) {
      case Lighting::Midday:
        lights.push_back(sun_at(60.0, 1.0, 5800.0));
        lights.push_back(Light::ambient(Vec3(0.16, 0.18, 0.22)));
        break;
      case Lighting::Sunset:
        lights.push_back(sun_at(10.0, 0.35, 3000.0));
        lights.push_back(Light::ambient(Vec3(0.08, 0.06, 0.06)));
        break;
      case Lighting::Night:
        lights.push_back(Light::ambient(Vec3::Constant(0.02)));
        for (const PosedEntity& pe : posed.entities) {
          if (pe.entity->label != SemanticLabel::StreetLight) continue;
          const Aabb b = mesh_bounds(*pe.entity->mesh);
          const Vec3 top = pe.pose.apply(Vec3(0.5 * (b.min.x() + b.max.x()), 0.5 * (b.min.y() + b.max.y()), b.max.z() + 0.2));
          lights.push_back(Light::point(top, 400.0, blackbody_rgb(2700.0)));
        }
        break;
    }
  }
  if (scene.weather.weather == Weather::Cloudy || scene.weather.weather == Weather::Rain) {
    for (Light& l : lights) {
      if (l.kind == Light::Kind::Sun) l.irradiance *= 0.3;
      if (l.kind == Light::Kind::Ambient) l.radiance *= 2.0;
    }
  }
  return lights;
}

Vec3 sky_color(const WeatherState& w)
{
  Vec3 c;
  switch (w.lighting) {
    case Lighting::Midday: c = Vec3(0.35, 0.55, 0.85); break;
    case Lighting::Sunset: c = Vec3(0.85, 0.45, 0.25); break;
    case Lighting::Night: c = Vec3(0.005, 0.007, 0.02); break;
  }
  if (w.weather == Weather::Cloudy || w.weather == Weather::Rain) c = Vec3::Constant(luma(c.x(), c.y(), c.z()) * 0.9);
  return c;
}

Vec3 fog_color(const WeatherState& w)
{
  switch (w.lighting) {
    case Lighting::Midday: return Vec3(0.7, 0.72, 0.75);
    case Lighting::Sunset: return Vec3(0.6, 0.45, 0.38);
    case Lighting::Night: return Vec3(0.02, 0.02, 0.025);
  }
  return Vec3::Constant(0.7);
}

double fog_factor(double beta, double distance)
{
  if (beta <= 0.0) return 0.0;
  return 1.0 - std::exp(-beta * distance);
}

Vec3 shade_sample(const GSample& g, const PosedScene& scene, const std::vector<Light>& lights, const WeatherState&,
                  const Vec3&)
{
  if (!g.covered()) return Vec3::Zero();
  const PosedEntity& pe = scene.entities[g.entity];
  const Vec3 albedo = material_albedo(g, pe);
  const Vec3 n = perturbed_normal(g, pe);
  const double eps = 1e-4 * std::max(1.0, g.position.cwiseAbs().maxCoeff());
  const Vec3 origin = g.position + eps * g.normal;
  Vec3 radiance = Vec3::Zero();
  for (const Light& l : lights) {
    switch (l.kind) {
      case Light::Kind::Sun: {
        const Vec3 to_light = -l.direction.normalized();
        const double ndl = n.dot(to_light);
        if (ndl <= 0.0 || g.normal.dot(to_light) <= 0.0) break;
        if (scene.bvh.occluded(origin, to_light, kInf)) break;
        radiance += albedo.cwiseProduct(blackbody_rgb(l.color_temperature)) * (l.irradiance * ndl);
        break;
      }
      case Light::Kind::Point: {
        const Vec3 d = l.position - g.position;
        const double dist = d.norm();
        if (dist <= 0.0) break;
        const Vec3 to_light = d / dist;
        const double ndl = n.dot(to_light);
        if (ndl <= 0.0 || g.normal.dot(to_light) <= 0.0) break;
        if (scene.bvh.occluded(origin, to_light, dist - eps)) break;
        radiance += albedo.cwiseProduct(l.color) * (l.power / (4.0 * kPi * dist * dist) * ndl);
        break;
      }
      case Light::Kind::Ambient: radiance += albedo.cwiseProduct(l.radiance); break;
    }
  }
  return radiance;
}

namespace {

Vec3 shade_with_fog(const GSample& g, const PosedScene& scene, const std::vector<Light>& lights, const WeatherState& w,
                    const Vec3& eye)
{
  if (!g.covered()) return w.fog_density > 0.0 ? fog_color(w) : sky_color(w);
  const Vec3 c = shade_sample(g, scene, lights, w, eye);
  const double f = fog_factor(w.fog_density, g.range);
  return f == 0.0 ? c : Vec3(c + f * (fog_color(w) - c));
}

void put(Image& img, int x, int y, const Vec3& c)
{
  for (int k = 0; k < 3; ++k) img.at(x, y, k) = static_cast<float>(c[k]);
}

}  // namespace

void apply_rain(Image& img, double intensity, std::uint64_t seed)
{
  if (intensity <= 0.0 || img.width == 0) return;
  const Vec3 rain(0.75, 0.78, 0.82);
  const double alpha = 0.35 * std::min(intensity, 1.0);
  const auto streaks = static_cast<int>(std::lround(intensity * img.width * img.height / 40.0));
  for (int i = 0; i < streaks; ++i) {
    Rng rng(hash_keys(seed, {static_cast<std::uint64_t>(i)}));
    const double x0 = rng.uniform(0.0, img.width), y0 = rng.uniform(0.0, img.height);
    const int length = 4 + static_cast<int>(rng.below(9));
    for (int s = 0; s < length; ++s) {
      const int x = static_cast<int>(std::floor(x0 + 0.25 * s)), y = static_cast<int>(std::floor(y0 + s));
      if (x < 0 || y < 0 || x >= img.width || y >= img.height) continue;
      for (int k = 0; k < 3; ++k) img.at(x, y, k) = static_cast<float>(img.at(x, y, k) + alpha * (rain[k] - img.at(x, y, k)));
    }
  }
}

Image shade(const GBuffer& g, const PosedScene& scene, const std::vector<Light>& lights, const WeatherState& w,
            const Vec3& eye, std::uint64_t rain_seed)
{
  Image img(g.width, g.height, 3);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) put(img, x, y, shade_with_fog(g.at(x, y), scene, lights, w, eye));
  if (w.weather == Weather::Rain) apply_rain(img, w.rain_intensity, rain_seed);
  return img;
}

Image tone_map(const Image& linear)
{
  Image out = linear;
  for (float& v : out.data) v = static_cast<float>(std::pow(std::clamp(static_cast<double>(v), 0.0, 1.0), 1.0 / 2.2));
  return out;
}

// ---------------------------------------------------------------------------------------------
// Annotation passes

FlowMap compute_flow(const Scene&, const PosedScene& posed, const View& view_t, const View& view_next, double t_next,
                     const GBuffer& g)
{
  FlowMap flow(g.width, g.height, 2, 0.0f);
  const bool camera_static =
      view_t.world_from_camera == view_next.world_from_camera && same_intrinsics(view_t.intrinsics, view_next.intrinsics);
  const bool rotation_static = view_t.world_from_camera.orientation.coeffs() == view_next.world_from_camera.orientation.coeffs() &&
                               same_intrinsics(view_t.intrinsics, view_next.intrinsics);
  std::vector<Pose> next_pose(posed.entities.size());
  std::vector<char> moved(posed.entities.size());
  for (std::size_t i = 0; i < posed.entities.size(); ++i) {
    next_pose[i] = posed.entities[i].entity->track.eval(t_next);
    moved[i] = !(next_pose[i] == posed.entities[i].pose);
  }
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      const GSample& s = g.at(x, y);
      const Vec2 center(x + 0.5, y + 0.5);
      std::optional<Vec2> to;
      if (s.covered()) {
        if (camera_static && !moved[s.entity]) continue;
        const TriMesh& m = *posed.entities[s.entity].entity->mesh;
        const auto& tri = m.triangles[s.triangle];
        const Vec3 local = s.bary[0] * m.positions[tri[0]] + s.bary[1] * m.positions[tri[1]] + s.bary[2] * m.positions[tri[2]];
        const Vec3 world = next_pose[s.entity].apply(local);
        to = project(view_next.intrinsics, view_next.world_from_camera.apply_inverse(world));
      } else {
        if (rotation_static) continue;
        const auto d = pixel_direction(view_t.intrinsics, center);
        if (!d) continue;
        const Vec3 world_dir = view_t.world_from_camera.rotate(*d);
        to = project(view_next.intrinsics, view_next.world_from_camera.orientation.conjugate() * world_dir);
      }
      if (!to) continue;
      flow.at(x, y, 0) = static_cast<float>(to->x() - center.x());
      flow.at(x, y, 1) = static_cast<float>(to->y() - center.y());
    }
  }
  return flow;
}

Image anaglyph(const Image& left, const Image& right)
{
  if (!left.same_shape(right) || left.channels < 3 || right.channels < 3)
    throw Error(ErrorCode::ResolutionMismatch, "anaglyph views must be equally sized color images");
  Image out(left.width, left.height, 3);
  for (int y = 0; y < left.height; ++y)
    for (int x = 0; x < left.width; ++x) {
      const auto l = static_cast<float>(luma(left.at(x, y, 0), left.at(x, y, 1), left.at(x, y, 2)));
      const auto r = static_cast<float>(luma(right.at(x, y, 0), right.at(x, y, 1), right.at(x, y, 2)));
      out.at(x, y, 0) = l;
      out.at(x, y, 1) = r;
      out.at(x, y, 2) = r;
    }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Frames

namespace {

View eye_view(const CameraRig& rig, double t, bool right_eye)
{
  View v = view_at(rig, t);
  if (right_eye) v.world_from_camera = stereo_pair(rig, t).second;
  return v;
}

GBuffer primary_gbuffer(const PosedScene& posed, const View& view, int threads)
{
  return rasterize(posed, view, threads);  // falls back to ray casting for non-pinhole views
}

bool static_over(const Scene& scene, const CameraRig& rig, double t0, double t1)
{
  auto window_free = [&](double a) { return a <= t0 || a > t1; };
  for (const Entity& e : scene.entities) {
    if (!e.track.is_constant()) return false;
    if (!window_free(e.visible_from) || !window_free(e.visible_until)) return false;
  }
  return rig.extrinsics.is_constant() && rig.focal_length.is_constant() && rig.stereo_baseline.is_constant();
}

Image render_rgb_impl(const Scene& scene, const CameraRig& rig, double t, const RenderSettings& settings,
                      std::uint64_t sample_seed, bool right_eye, const PosedScene* posed_t, const GBuffer* gbuffer_t)
{
  const std::uint64_t rain_seed = hash_keys(sample_seed, {0x7261696EULL, right_eye ? 1ULL : 0ULL});
  const View view = eye_view(rig, t, right_eye);
  const double aperture = view.intrinsics.aperture_radius;
  const double shutter = rig.shutter_time;
  const bool blur = shutter > 0.0 && settings.time_samples > 1 && !static_over(scene, rig, t - 0.5 * shutter, t + 0.5 * shutter);
  const bool dof = aperture > 0.0;
  const bool chroma = rig.chromatic_alpha != 0.0;

  if (!blur && !dof && !chroma) {
    if (posed_t && gbuffer_t) {
      const auto lights = resolve_lights(scene, *posed_t);
      return tone_map(shade(*gbuffer_t, *posed_t, lights, scene.weather, view.world_from_camera.position, rain_seed));
    }
    const PosedScene posed = pose_scene(scene, t);
    const GBuffer g = primary_gbuffer(posed, view, settings.threads);
    const auto lights = resolve_lights(scene, posed);
    return tone_map(shade(g, posed, lights, scene.weather, view.world_from_camera.position, rain_seed));
  }

  const int st = blur ? std::max(1, settings.time_samples) : 1;
  const int sl = dof ? std::max(1, settings.lens_samples) : 1;
  const int w = view.intrinsics.width, h = view.intrinsics.height;
  std::vector<double> acc(static_cast<std::size_t>(w) * h * 3, 0.0);
  for (int it = 0; it < st; ++it) {
    double ts = t;
    if (blur) {
      const double jitter = Rng(hash_keys(sample_seed, {0x54494D45ULL, static_cast<std::uint64_t>(it)})).uniform();
      ts = t + shutter * ((it + jitter) / st - 0.5);
    }
    const PosedScene posed = pose_scene(scene, ts);
    const auto lights = resolve_lights(scene, posed);
    const View v = eye_view(rig, ts, right_eye);
    const Intrinsics& in = v.intrinsics;
    parallel_for(h, settings.threads, [&](int y) {
      for (int x = 0; x < w; ++x) {
        const Vec2 center(x + 0.5, y + 0.5);
        const std::uint64_t pixel = static_cast<std::uint64_t>(y) * w + x;
        for (int i = 0; i < sl; ++i) {
          for (int j = 0; j < sl; ++j) {
            Vec2 lens = Vec2::Zero();
            if (dof) {
              Rng rng(hash_keys(sample_seed, {pixel, static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(i * sl + j)}));
              const double a = (i + rng.uniform()) / sl, b = (j + rng.uniform()) / sl;
              lens = concentric_disk(a, b);
            }
            for (int ch = 0; ch < (chroma ? 3 : 1); ++ch) {
              Vec2 pix = center;
              if (chroma) {
                const Vec2 nrm = (center - in.principal) / in.focal;
                pix = in.principal + in.focal * chromatic_offset(in.chromatic_alpha, nrm, static_cast<Channel>(ch));
              }
              Vec3 c;
              if (!pixel_direction(in, pix)) {
                c = scene.weather.fog_density > 0.0 ? fog_color(scene.weather) : sky_color(scene.weather);
              } else {
                const Ray r = thin_lens_ray(in, pix, lens);
                const Vec3 o = v.world_from_camera.apply(r.origin);
                const Vec3 d = v.world_from_camera.rotate(r.direction);
                GSample g;
                if (const auto hit = posed.bvh.intersect(o, d)) {
                  fill_sample(g, posed, hit->entity, hit->triangle, Vec3(1.0 - hit->u - hit->v, hit->u, hit->v), o, hit->t);
                }
                c = shade_with_fog(g, posed, lights, scene.weather, o);
              }
              const std::size_t base = pixel * 3;
              if (chroma)
                acc[base + ch] += c[ch];
              else
                for (int k = 0; k < 3; ++k) acc[base + k] += c[k];
            }
          }
        }
      }
    });
  }
  Image img(w, h, 3);
  const double norm = 1.0 / (static_cast<double>(st) * sl * sl);
  for (std::size_t i = 0; i < acc.size(); ++i) img.data[i] = static_cast<float>(acc[i] * norm);
  if (scene.weather.weather == Weather::Rain) apply_rain(img, scene.weather.rain_intensity, rain_seed);
  return tone_map(img);
}

std::uint64_t camera_key(const CameraRig& rig)
{
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : rig.id) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001B3ULL;
  return h;
}

}  // namespace

Image render_rgb(const Scene& scene, const CameraRig& rig, double t, const RenderSettings& settings,
                 std::uint64_t sample_seed, bool right_eye)
{
  return render_rgb_impl(scene, rig, t, settings, sample_seed, right_eye, nullptr, nullptr);
}

AnnotationFrame render_frame(const Scene& scene, const CameraRig& rig, int frame, const RenderSettings& settings)
{
  const double t = scene.timeline.frame_time(frame);
  const double t_next = scene.timeline.frame_time(frame + 1);
  const View view = view_at(rig, t);
  const PosedScene posed = pose_scene(scene, t);
  const GBuffer g = primary_gbuffer(posed, view, settings.threads);
  const std::uint64_t sample_seed = hash_keys(scene.seed, {camera_key(rig), static_cast<std::uint64_t>(frame)});

  AnnotationFrame out;
  out.rgb = render_rgb_impl(scene, rig, t, settings, sample_seed, false, &posed, &g);
  const int w = g.width, h = g.height;
  out.depth = DepthMap(w, h, 1);
  out.normals = Image(w, h, 3, 0.0f);
  out.instance_seg = InstanceMap(w, h, 1, 0);
  out.semantic_seg = SemanticMapImage(w, h, 1, 0);
  const Quat cam_from_world = view.world_from_camera.orientation.conjugate();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const GSample& s = g.at(x, y);
      out.depth.at(x, y) = s.depth;
      out.instance_seg.at(x, y) = s.instance;
      out.semantic_seg.at(x, y) = s.semantic;
      if (s.covered()) {
        const Vec3 n = cam_from_world * s.normal;
        for (int k = 0; k < 3; ++k) out.normals.at(x, y, k) = static_cast<float>(n[k]);
      }
    }
  out.flow = compute_flow(scene, posed, view, view_at(rig, t_next), t_next, g);
  if (rig.stereo_baseline.eval(t) > 0.0) out.stereo_right_rgb = render_rgb_impl(scene, rig, t, settings, sample_seed, true, nullptr, nullptr);

  FrameMeta& m = out.metadata;
  m.frame_number = frame;
  m.time = t;
  m.camera_id = rig.id;
  m.K = view.intrinsics.K();
  m.distortion = {rig.k1, rig.k2, rig.chromatic_alpha};
  m.world_from_camera = view.world_from_camera.matrix();
  m.projection_model = rig.model;
  m.stereo_baseline = rig.stereo_baseline.eval(t);
  m.lighting = scene.weather.lighting;
  m.weather = scene.weather.weather;
  m.seed = scene.seed;
  return out;
}

}  // namespace worldforge
