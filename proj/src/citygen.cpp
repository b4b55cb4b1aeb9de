#include "worldforge/citygen.hpp"

#include "worldforge/error.hpp"
#include "worldforge/random.hpp"

#include <algorithm>
#include <set>

namespace worldforge::city {

using osm::SemanticClass;

namespace {

bool is_road(SemanticClass c) { return c == SemanticClass::Road || c == SemanticClass::Highway; }
bool is_ribbon(SemanticClass c) { return is_road(c) || c == SemanticClass::PedestrianPath; }

Vec2 left_normal(const Vec2& d) { return Vec2(-d.y(), d.x()); }

double wrap_angle(double a)
{
  a = std::fmod(a, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  if (a >= 2.0 * kPi) a = 0.0;
  return a;
}

Vec2 uv_for(const Vec3& p) { return Vec2(0.1 * p.x(), 0.1 * (p.y() + p.z())); }

struct PolylineCursor {
  const std::vector<Vec2>& pts;
  std::vector<double> cumulative;

  explicit PolylineCursor(const std::vector<Vec2>& p) : pts(p)
  {
    cumulative.push_back(0.0);
    for (std::size_t i = 1; i < pts.size(); ++i) cumulative.push_back(cumulative.back() + (pts[i] - pts[i - 1]).norm());
  }
  double length() const { return cumulative.back(); }

  std::size_t segment_at(double s) const
  {
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
    std::size_t i = it == cumulative.begin() ? 0 : static_cast<std::size_t>(it - cumulative.begin()) - 1;
    return std::min(i, pts.size() - 2);
  }
  Vec2 point(double s) const
  {
    const std::size_t i = segment_at(s);
    const double len = cumulative[i + 1] - cumulative[i];
    const double t = len > 0.0 ? std::clamp((s - cumulative[i]) / len, 0.0, 1.0) : 0.0;
    return pts[i] + t * (pts[i + 1] - pts[i]);
  }
  Vec2 tangent(double s) const
  {
    const std::size_t i = segment_at(s);
    const Vec2 d = pts[i + 1] - pts[i];
    return d.norm() > 0.0 ? Vec2(d.normalized()) : Vec2(1, 0);
  }
  // Arc length of the closest point to q and the distance to it.
  std::pair<double, double> project(const Vec2& q) const
  {
    double best_s = 0.0, best_d = kInf;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const Vec2 ab = pts[i + 1] - pts[i];
      const double len2 = ab.squaredNorm();
      const double t = len2 > 0.0 ? std::clamp((q - pts[i]).dot(ab) / len2, 0.0, 1.0) : 0.0;
      const double d = (pts[i] + t * ab - q).norm();
      if (d < best_d) {
        best_d = d;
        best_s = cumulative[i] + t * std::sqrt(len2);
      }
    }
    return {best_s, best_d};
  }
};

std::uint64_t point_key(const Vec2& p)
{
  const auto qx = static_cast<std::uint64_t>(std::llround(p.x() * 1000.0));
  const auto qy = static_cast<std::uint64_t>(std::llround(p.y() * 1000.0));
  return hash_combine(qx, qy);
}

TriMesh flat_polygon_mesh(const Polygon2& poly, double z)
{
  TriMesh m;
  for (const Vec2& p : poly) {
    m.positions.emplace_back(p.x(), p.y(), z);
    m.uvs.push_back(0.1 * p);
    m.normals.push_back(Vec3::UnitZ());
  }
  for (const auto& t : triangulate(poly))
    m.triangles.push_back({static_cast<std::uint32_t>(t[0]), static_cast<std::uint32_t>(t[1]), static_cast<std::uint32_t>(t[2])});
  m.flat_shaded = true;
  return m;
}

}  // namespace

std::string_view to_string(PropKind kind)
{
  switch (kind) {
    case PropKind::TrafficLight: return "TrafficLight";
    case PropKind::StopSign: return "StopSign";
    case PropKind::Tree: return "Tree";
    case PropKind::Bench: return "Bench";
    case PropKind::StreetLight: return "StreetLight";
    case PropKind::Antenna: return "Antenna";
    case PropKind::Vent: return "Vent";
    case PropKind::Chimney: return "Chimney";
  }
  return "Unknown";
}

SemanticLabel semantic_label(PropKind kind)
{
  switch (kind) {
    case PropKind::TrafficLight: return SemanticLabel::TrafficLight;
    case PropKind::StopSign: return SemanticLabel::StopSign;
    case PropKind::Tree: return SemanticLabel::Tree;
    case PropKind::Bench: return SemanticLabel::Bench;
    case PropKind::StreetLight: return SemanticLabel::StreetLight;
    case PropKind::Antenna: return SemanticLabel::Antenna;
    case PropKind::Vent: return SemanticLabel::Vent;
    case PropKind::Chimney: return SemanticLabel::Chimney;
  }
  return SemanticLabel::Background;
}

SemanticLabel semantic_label(SemanticClass cls)
{
  switch (cls) {
    case SemanticClass::Building: return SemanticLabel::Building;
    case SemanticClass::Road: return SemanticLabel::Road;
    case SemanticClass::Highway: return SemanticLabel::Highway;
    case SemanticClass::PedestrianPath: return SemanticLabel::PedestrianPath;
    case SemanticClass::Railway: return SemanticLabel::Railway;
    case SemanticClass::Water: return SemanticLabel::Water;
    case SemanticClass::Forest: return SemanticLabel::Forest;
    case SemanticClass::Vegetation: return SemanticLabel::Vegetation;
    case SemanticClass::Unknown: return SemanticLabel::Background;
  }
  return SemanticLabel::Background;
}

TriMesh extrude_building(const Polygon2& footprint, double height, RoofType roof, double ridge_height,
                         std::vector<std::string>* warnings)
{
  if (footprint.size() < 3 || std::abs(signed_area(footprint)) < 1e-6)
    throw Error(ErrorCode::DegeneratePolygon, "footprint area below 1e-6 m^2");
  if (!(height > 0.0)) throw Error(ErrorCode::InvalidArgument, "building height must be positive");

  Polygon2 poly = footprint;
  make_ccw(poly);
  const auto n = static_cast<std::uint32_t>(poly.size());

  if (roof == RoofType::Gable) {
    if (!(ridge_height > 0.0)) throw Error(ErrorCode::InvalidArgument, "gable roof requires ridge_height > 0");
    if (n != 4) {
      if (warnings) warnings->push_back("GableUnsupported: " + std::to_string(n) + "-vertex footprint, using flat roof");
      roof = RoofType::Flat;
    }
  }

  TriMesh m;
  for (const Vec2& p : poly) m.positions.emplace_back(p.x(), p.y(), 0.0);
  for (const Vec2& p : poly) m.positions.emplace_back(p.x(), p.y(), height);

  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t j = (i + 1) % n;
    m.triangles.push_back({i, j, n + j});
    m.triangles.push_back({i, n + j, n + i});
  }
  const auto tris = triangulate(poly);
  for (const auto& t : tris)
    m.triangles.push_back({static_cast<std::uint32_t>(t[0]), static_cast<std::uint32_t>(t[2]), static_cast<std::uint32_t>(t[1])});

  if (roof == RoofType::Flat) {
    for (const auto& t : tris)
      m.triangles.push_back({n + static_cast<std::uint32_t>(t[0]), n + static_cast<std::uint32_t>(t[1]), n + static_cast<std::uint32_t>(t[2])});
  } else {
    // Gable ends sit on the shorter pair of opposite edges so the ridge follows the long axis.
    const double pair01 = (poly[1] - poly[0]).norm() + (poly[3] - poly[2]).norm();
    const double pair12 = (poly[2] - poly[1]).norm() + (poly[0] - poly[3]).norm();
    const std::uint32_t s = pair01 <= pair12 ? 0 : 1;
    const std::uint32_t a = n + s, b = n + (s + 1) % 4, c = n + (s + 2) % 4, d = n + (s + 3) % 4;
    const std::uint32_t r0 = static_cast<std::uint32_t>(m.positions.size());
    m.positions.push_back(0.5 * (m.positions[a] + m.positions[b]) + Vec3(0, 0, ridge_height));
    const std::uint32_t r1 = r0 + 1;
    m.positions.push_back(0.5 * (m.positions[c] + m.positions[d]) + Vec3(0, 0, ridge_height));
    m.triangles.push_back({a, b, r0});
    m.triangles.push_back({c, d, r1});
    m.triangles.push_back({b, c, r1});
    m.triangles.push_back({b, r1, r0});
    m.triangles.push_back({d, a, r0});
    m.triangles.push_back({d, r0, r1});
  }
  for (const Vec3& p : m.positions) m.uvs.push_back(uv_for(p));
  compute_vertex_normals(m);
  m.flat_shaded = true;
  return m;
}

RoofType roof_type_for(const osm::Footprint& fp)
{
  return fp.roof_shape == "gable" && fp.polygon.size() == 4 ? RoofType::Gable : RoofType::Flat;
}

double default_ridge_height(const Polygon2& footprint)
{
  double shortest = kInf;
  for (std::size_t i = 0; i < footprint.size(); ++i)
    shortest = std::min(shortest, (footprint[(i + 1) % footprint.size()] - footprint[i]).norm());
  return std::max(0.5, 0.2 * shortest);
}

std::vector<RoadRibbon> build_roads(const osm::SemanticMap& map)
{
  std::vector<RoadRibbon> out;
  for (const osm::WayLine& way : map.ways) {
    if (!is_ribbon(way.cls) || way.polyline.size() < 2) continue;
    const double width = way.width > 0.0 ? way.width : osm::default_way_width(way.cls);
    const double half = 0.5 * width;
    const auto& pts = way.polyline;
    const std::size_t m = pts.size();

    std::vector<Vec2> dirs;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const Vec2 d = pts[i + 1] - pts[i];
      dirs.push_back(d.norm() > 0.0 ? Vec2(d.normalized()) : (dirs.empty() ? Vec2(1, 0) : dirs.back()));
    }

    TriMesh mesh;
    double along = 0.0;
    auto push_pair = [&](const Vec2& p, const Vec2& offset) {
      mesh.positions.emplace_back(p.x() + offset.x(), p.y() + offset.y(), kRoadElevation);
      mesh.positions.emplace_back(p.x() - offset.x(), p.y() - offset.y(), kRoadElevation);
      mesh.uvs.emplace_back(along / width, 0.0);
      mesh.uvs.emplace_back(along / width, 1.0);
      return static_cast<std::uint32_t>(mesh.positions.size() - 2);
    };
    auto connect = [&](std::uint32_t from, std::uint32_t to) {
      mesh.triangles.push_back({from, from + 1, to + 1});
      mesh.triangles.push_back({from, to + 1, to});
    };

    std::uint32_t prev = push_pair(pts[0], left_normal(dirs[0]) * half);
    for (std::size_t i = 1; i < m; ++i) {
      along += (pts[i] - pts[i - 1]).norm();
      if (i + 1 == m) {
        connect(prev, push_pair(pts[i], left_normal(dirs[i - 1]) * half));
        break;
      }
      const Vec2 n0 = left_normal(dirs[i - 1]);
      const Vec2 n1 = left_normal(dirs[i]);
      const Vec2 sum = n0 + n1;
      const double cos_half = sum.norm() > 1e-12 ? Vec2(sum.normalized()).dot(n0) : 0.0;
      if (cos_half > 1.0 / kMiterLimit) {
        const std::uint32_t cur = push_pair(pts[i], sum.normalized() * (half / cos_half));
        connect(prev, cur);
        prev = cur;
      } else {
        // Beyond the miter limit: bevel with a fill quad between the two segment ends.
        const std::uint32_t end = push_pair(pts[i], n0 * half);
        connect(prev, end);
        const std::uint32_t start = push_pair(pts[i], n1 * half);
        connect(end, start);
        prev = start;
      }
    }
    mesh.normals.assign(mesh.positions.size(), Vec3::UnitZ());
    mesh.flat_shaded = true;
    out.push_back(RoadRibbon{std::move(mesh), way.cls, way.way_id});
  }
  return out;
}

std::vector<Vec2> detect_intersections(const osm::SemanticMap& map)
{
  std::vector<const osm::WayLine*> roads;
  for (const osm::WayLine& w : map.ways)
    if (is_road(w.cls)) roads.push_back(&w);

  std::vector<Vec2> candidates;
  std::map<std::int64_t, std::pair<std::set<std::size_t>, Vec2>> shared;
  for (std::size_t wi = 0; wi < roads.size(); ++wi) {
    const auto& w = *roads[wi];
    for (std::size_t k = 0; k < w.node_ids.size() && k < w.polyline.size(); ++k) {
      auto& entry = shared[w.node_ids[k]];
      entry.first.insert(wi);
      entry.second = w.polyline[k];
    }
  }
  for (const auto& [id, entry] : shared)
    if (entry.first.size() >= 2) candidates.push_back(entry.second);

  for (std::size_t a = 0; a < roads.size(); ++a) {
    for (std::size_t b = a + 1; b < roads.size(); ++b) {
      const auto& pa = roads[a]->polyline;
      const auto& pb = roads[b]->polyline;
      for (std::size_t i = 0; i + 1 < pa.size(); ++i)
        for (std::size_t j = 0; j + 1 < pb.size(); ++j)
          if (auto p = segment_intersection(pa[i], pa[i + 1], pb[j], pb[j + 1], 1e-6)) candidates.push_back(*p);
    }
  }

  std::sort(candidates.begin(), candidates.end(),
            [](const Vec2& a, const Vec2& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
  std::vector<std::pair<Vec2, int>> clusters;
  for (const Vec2& p : candidates) {
    bool merged = false;
    for (auto& [sum, count] : clusters) {
      if ((sum / count - p).norm() <= kIntersectionMergeRadius) {
        sum += p;
        ++count;
        merged = true;
        break;
      }
    }
    if (!merged) clusters.emplace_back(p, 1);
  }
  std::vector<Vec2> out;
  for (const auto& [sum, count] : clusters) out.push_back(sum / count);
  return out;
}

std::vector<Placement> scatter_props(const osm::SemanticMap& map, std::span<const Vec2> intersections, std::uint64_t seed)
{
  std::vector<Placement> out;

  for (const Vec2& q : intersections) {
    Rng coin(hash_keys(seed, {1, point_key(q)}));
    const PropKind kind = coin.below(2) == 0 ? PropKind::TrafficLight : PropKind::StopSign;
    for (const osm::WayLine& way : map.ways) {
      if (!is_road(way.cls) || way.polyline.size() < 2) continue;
      const PolylineCursor cursor(way.polyline);
      const auto [s, dist] = cursor.project(q);
      if (dist > 1e-3) continue;
      const double lateral = 0.5 * way.width + kFurnitureLateral;
      for (int dir : {-1, 1}) {
        const double arm = dir < 0 ? s : cursor.length() - s;
        if (arm <= 1e-6) continue;
        const double at = s + dir * std::min(kCornerOffset, arm);
        const Vec2 away = dir * cursor.tangent(std::clamp(at - dir * 1e-9, 0.0, cursor.length()));
        const Vec2 right(away.y(), -away.x());
        const Vec2 pos = cursor.point(at) + lateral * right;
        out.push_back(Placement{kind, Vec3(pos.x(), pos.y(), 0.0), wrap_angle(std::atan2(-away.y(), -away.x()))});
      }
    }
  }

  for (const osm::WayLine& way : map.ways) {
    if (way.cls != SemanticClass::PedestrianPath || way.polyline.size() < 2) continue;
    const PolylineCursor cursor(way.polyline);
    Rng rng(hash_keys(seed, {2, static_cast<std::uint64_t>(way.way_id)}));
    const double lateral = 0.5 * way.width + kFurnitureLateral;
    for (double s = rng.exponential(kFurnitureSpacing); s < cursor.length(); s += rng.exponential(kFurnitureSpacing)) {
      static constexpr PropKind kinds[] = {PropKind::Tree, PropKind::Bench, PropKind::StreetLight};
      const PropKind kind = kinds[rng.below(3)];
      const double side = rng.below(2) == 0 ? 1.0 : -1.0;
      const Vec2 t = cursor.tangent(s);
      const Vec2 pos = cursor.point(s) + side * lateral * left_normal(t);
      // Face the path.
      const Vec2 facing = -side * left_normal(t);
      out.push_back(Placement{kind, Vec3(pos.x(), pos.y(), 0.0), wrap_angle(std::atan2(facing.y(), facing.x()))});
    }
  }

  for (const osm::Footprint& fp : map.footprints) {
    if (fp.cls != SemanticClass::Building || roof_type_for(fp) != RoofType::Flat) continue;
    const double area = signed_area(fp.polygon);
    const int count = static_cast<int>(std::ceil(area / kRoofAreaPerProp - 1e-12));
    Rng rng(hash_keys(seed, {3, static_cast<std::uint64_t>(fp.way_id)}));
    Vec2 lo = fp.polygon[0], hi = fp.polygon[0];
    for (const Vec2& p : fp.polygon) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    int placed = 0;
    for (int attempt = 0; placed < count && attempt < 200 * count; ++attempt) {
      const Vec2 p(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()));
      if (!point_in_polygon(p, fp.polygon) || distance_to_boundary(p, fp.polygon) < kRoofEdgeClearance) continue;
      static constexpr PropKind kinds[] = {PropKind::Antenna, PropKind::Vent, PropKind::Chimney};
      const PropKind kind = kinds[rng.below(3)];
      out.push_back(Placement{kind, Vec3(p.x(), p.y(), fp.height), wrap_angle(rng.uniform(0.0, 2.0 * kPi))});
      ++placed;
    }
  }
  return out;
}

PropLibrary builtin_prop_library()
{
  auto at = [](TriMesh m, const Vec3& offset) { return transformed(m, Pose{offset, Quat::Identity()}); };
  auto combine = [](std::initializer_list<TriMesh> parts) {
    TriMesh out;
    for (const TriMesh& p : parts) append_mesh(out, p);
    out.flat_shaded = true;
    return out;
  };
  PropLibrary lib;
  lib[PropKind::TrafficLight] = combine({at(make_cylinder(0.08, 1.6, 8), Vec3(0, 0, 1.6)), at(make_box(Vec3(0.15, 0.15, 0.45)), Vec3(0, 0, 3.4))});
  lib[PropKind::StopSign] = combine({at(make_cylinder(0.05, 1.1, 8), Vec3(0, 0, 1.1)),
                                     transformed(make_cylinder(0.4, 0.02, 8), Pose{Vec3(0, 0, 2.3), Quat(Eigen::AngleAxisd(kPi / 2, Vec3::UnitY()))})});
  lib[PropKind::Tree] = combine({at(make_cylinder(0.15, 1.0, 8), Vec3(0, 0, 1.0)), at(make_cone(1.4, 3.5, 10), Vec3(0, 0, 1.8))});
  lib[PropKind::Bench] = combine({at(make_box(Vec3(0.8, 0.25, 0.05)), Vec3(0, 0, 0.45)), at(make_box(Vec3(0.8, 0.04, 0.25)), Vec3(0, -0.22, 0.75)),
                                  at(make_box(Vec3(0.05, 0.2, 0.2)), Vec3(-0.7, 0, 0.2)), at(make_box(Vec3(0.05, 0.2, 0.2)), Vec3(0.7, 0, 0.2))});
  lib[PropKind::StreetLight] = combine({at(make_cylinder(0.07, 2.5, 8), Vec3(0, 0, 2.5)), at(make_box(Vec3(0.3, 0.12, 0.08)), Vec3(0.2, 0, 5.0))});
  lib[PropKind::Antenna] = combine({at(make_cylinder(0.03, 1.0, 6), Vec3(0, 0, 1.0)), at(make_box(Vec3(0.4, 0.02, 0.02)), Vec3(0, 0, 1.6))});
  lib[PropKind::Vent] = at(make_box(Vec3(0.5, 0.5, 0.3)), Vec3(0, 0, 0.3));
  lib[PropKind::Chimney] = at(make_box(Vec3(0.3, 0.3, 0.75)), Vec3(0, 0, 0.75));
  return lib;
}

CityScene generate_city(const osm::SemanticMap& map, const PropLibrary& props, std::uint64_t seed)
{
  CityScene scene;

  Aabb content;
  content.extend(Vec3::Zero());
  for (const osm::Footprint& fp : map.footprints)
    for (const Vec2& p : fp.polygon) content.extend(Vec3(p.x(), p.y(), 0.0));
  for (const osm::WayLine& w : map.ways)
    for (const Vec2& p : w.polyline) {
      content.extend(Vec3(p.x() - 0.5 * w.width, p.y() - 0.5 * w.width, 0.0));
      content.extend(Vec3(p.x() + 0.5 * w.width, p.y() + 0.5 * w.width, 0.0));
    }
  if (map.footprints.empty() && map.ways.empty()) content = Aabb{Vec3::Zero(), Vec3::Zero()};

  auto add = [&](TriMesh mesh, SemanticLabel label) {
    const auto id = static_cast<std::uint32_t>(scene.meshes.size() + 1);
    scene.meshes.push_back(CityMesh{std::move(mesh), label, id});
  };

  const Vec3 c = content.center();
  const Vec3 half = 0.5 * content.extent() + Vec3::Constant(kGroundMargin);
  TriMesh ground = transformed(make_quad(half.x(), half.y()), Pose{Vec3(c.x(), c.y(), 0.0), Quat::Identity()});
  for (std::size_t i = 0; i < ground.positions.size(); ++i) ground.uvs[i] = 0.1 * ground.positions[i].head<2>();
  add(std::move(ground), SemanticLabel::Ground);

  for (const osm::Footprint& fp : map.footprints) {
    if (fp.cls == SemanticClass::Building) {
      const RoofType roof = roof_type_for(fp);
      add(extrude_building(fp.polygon, fp.height, roof, default_ridge_height(fp.polygon), &scene.warnings), SemanticLabel::Building);
    } else {
      add(flat_polygon_mesh(fp.polygon, 0.01), semantic_label(fp.cls));
    }
  }
  for (RoadRibbon& r : build_roads(map)) add(std::move(r.mesh), semantic_label(r.cls));

  const std::vector<Vec2> crossings = detect_intersections(map);
  scene.placements = scatter_props(map, crossings, seed);
  for (const Placement& p : scene.placements) {
    auto it = props.find(p.kind);
    if (it == props.end()) throw Error(ErrorCode::MissingProp, std::string(to_string(p.kind)));
    add(transformed(it->second, Pose{p.position, Quat(Eigen::AngleAxisd(p.yaw, Vec3::UnitZ()))}), semantic_label(p.kind));
  }

  for (const CityMesh& m : scene.meshes) scene.bounds.extend(mesh_bounds(m.mesh));
  return scene;
}

}  // namespace worldforge::city
