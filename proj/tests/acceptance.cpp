// Acceptance runner: one PASS/FAIL line per criterion, with the measured error and runtime.
// Usage: acceptance <path-to-worldforge-cli> <fixture-dir>

#include "worldforge/citygen.hpp"
#include "worldforge/dataset_io.hpp"
#include "worldforge/dynamics.hpp"
#include "worldforge/error.hpp"
#include "worldforge/events.hpp"
#include "worldforge/fracture.hpp"
#include "worldforge/png_io.hpp"
#include "worldforge/random.hpp"
#include "worldforge/render.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

using namespace worldforge;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

// Collects failures and the worst observed error of a criterion.
struct Checker {
  bool ok = true;
  double worst = 0.0;
  std::string first_failure;

  void require(bool cond, const std::string& what)
  {
    if (!cond && ok) first_failure = what;
    ok = ok && cond;
  }
  void within(double err, double tol, const std::string& what)
  {
    worst = std::max(worst, err);
    std::ostringstream s;
    s << what << ": error " << err << " > " << tol;
    require(err <= tol, s.str());
  }
  Outcome outcome(const std::string& summary) const
  {
    std::ostringstream s;
    s << summary << "; worst error " << worst;
    return {ok, ok ? s.str() : first_failure};
  }
};

std::string cli_path;
fs::path fixture_dir;

// ---------------------------------------------------------------------------------------------

physics::RigidBody sphere_body(std::uint32_t id, const Vec3& pos, double radius, double density)
{
  physics::RigidBody b;
  b.id = id;
  b.pose.position = pos;
  b.shape = physics::CollisionShape::sphere(radius);
  physics::set_mass_from_density(b, density);
  return b;
}

Outcome free_fall()
{
  physics::World w;
  w.fields.push_back(physics::ForceField::gravity(Vec3(0, 0, -9.81)));
  w.bodies.push_back(sphere_body(1, Vec3(0, 0, 100), 1.0, 1.0));
  const double dt = 1.0 / 240.0;
  for (int i = 0; i < 240; ++i) physics::step(w, dt);
  const double dz = w.bodies[0].pose.position.z() - 100.0;
  // Semi-implicit Euler: sum_{k=1..n} g k dt^2 = g n (n+1) dt^2 / 2.
  const double closed = -9.81 * 240.0 * 241.0 * dt * dt / 2.0;
  Checker c;
  c.within(std::abs(dz - closed), 1e-9, "closed-form sum");
  c.within(std::abs(dz - (-4.92544)), 5e-6, "reference value -4.92544");
  std::ostringstream s;
  s.precision(9);
  s << "dz = " << dz;
  return c.outcome(s.str());
}

Outcome collisions()
{
  Checker c;
  {
    physics::World w;
    auto a = sphere_body(1, Vec3(0, 0, 0), 1.0, 1.0), b = sphere_body(2, Vec3(1.99, 0, 0), 1.0, 1.0);
    a.restitution = b.restitution = 1.0;
    a.linear_velocity = Vec3(3, 0, 0);
    b.linear_velocity = Vec3(-3, 0, 0);
    w.bodies = {a, b};
    auto contacts = physics::detect_contacts(w.bodies);
    physics::resolve_contacts(w, contacts, 1.0 / 240.0);
    c.within((w.bodies[0].linear_velocity - Vec3(-3, 0, 0)).norm(), 1e-9, "elastic swap (a)");
    c.within((w.bodies[1].linear_velocity - Vec3(3, 0, 0)).norm(), 1e-9, "elastic swap (b)");
  }
  {
    physics::World w;
    physics::RigidBody floor;
    floor.id = 1;
    floor.pose.position = Vec3(0, 0, -1);
    floor.shape = physics::CollisionShape::box(Vec3(50, 50, 1));
    auto ball = sphere_body(2, Vec3(0, 0, 0.999), 1.0, 1.0);
    floor.restitution = ball.restitution = 0.5;
    ball.linear_velocity = Vec3(0, 0, -4);
    w.bodies = {floor, ball};
    auto contacts = physics::detect_contacts(w.bodies);
    physics::resolve_contacts(w, contacts, 1.0 / 240.0);
    c.within(std::abs(w.bodies[1].linear_velocity.z() - 2.0), 1e-6, "e=0.5 rebound");
  }
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    physics::World w;
    auto a = sphere_body(1, Vec3::Zero(), rng.uniform(0.3, 1.0), rng.uniform(0.5, 3.0));
    const Vec3 dir = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    const double rb = rng.uniform(0.3, 1.0);
    auto b = sphere_body(2, dir * (a.shape.radius + rb - rng.uniform(0.0, 0.05)), rb, rng.uniform(0.5, 3.0));
    a.friction = b.friction = 0.0;
    a.restitution = rng.uniform();
    b.restitution = rng.uniform();
    a.linear_velocity = Vec3(rng.normal(), rng.normal(), rng.normal()) + 2.0 * dir;
    b.linear_velocity = Vec3(rng.normal(), rng.normal(), rng.normal()) - 2.0 * dir;
    w.bodies = {a, b};
    const Vec3 p0 = a.mass * a.linear_velocity + b.mass * b.linear_velocity;
    const auto contacts = physics::step(w, 1.0 / 240.0);
    c.require(!contacts.empty(), "impact " + std::to_string(trial) + " produced no contact");
    const Vec3 p1 = w.bodies[0].mass * w.bodies[0].linear_velocity + w.bodies[1].mass * w.bodies[1].linear_velocity;
    c.within((p1 - p0).norm() / std::max(1.0, p0.norm()), 1e-6, "momentum in impact " + std::to_string(trial));
  }
  return c.outcome("swap, rebound, 100 impacts");
}

Outcome fracture_conservation()
{
  Checker c;
  Rng rng(99);
  int fragments = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec3> pts;
    const int n = 6 + static_cast<int>(rng.below(20));
    const Vec3 scale(rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0));
    for (int i = 0; i < n; ++i) pts.push_back(Vec3(rng.normal(), rng.normal(), rng.normal()).cwiseProduct(scale));
    const TriMesh parent = convex_hull(pts);
    const double v = mesh_volume(parent);
    for (int count : {2, 8, 32}) {
      fracture::FractureSpec spec;
      spec.fragment_count = count;
      spec.seed = rng.next_u64();
      double total = 0.0;
      for (const TriMesh& m : fracture::fracture_mesh(parent, spec)) {
        total += mesh_volume(m);
        c.require(is_convex(m, 1e-6), "non-convex fragment in mesh " + std::to_string(trial));
        ++fragments;
      }
      c.within(std::abs(total - v) / v, 1e-6, "relative volume, mesh " + std::to_string(trial));
    }
  }
  return c.outcome("50 meshes, " + std::to_string(fragments) + " fragments");
}

// ---------------------------------------------------------------------------------------------

Entity box_entity(std::uint32_t id, const Vec3& half, anim::PoseTrack track)
{
  Entity e;
  e.id = id;
  e.mesh = std::make_shared<TriMesh>(make_box(half));
  e.material = std::make_shared<assets::Material>();
  e.track = std::move(track);
  return e;
}

CameraRig pinhole_rig(int size, double focal)
{
  CameraRig r;
  r.width = r.height = size;
  r.principal_point = Vec2(size / 2.0, size / 2.0);
  r.focal_length = anim::Track<double>(focal);
  return r;
}

Outcome flow_oracle()
{
  Checker c;
  {
    // Fronto-parallel plane at Z = 5, camera translating dx = 0.1 per frame, f = 200.
    Scene s;
    Entity plane;
    plane.id = 1;
    plane.mesh = std::make_shared<TriMesh>(make_quad(100.0, 100.0));
    plane.material = std::make_shared<assets::Material>();
    plane.track.position = anim::Track<Vec3>(Vec3(0, 0, 5));
    s.entities.push_back(plane);
    CameraRig rig = pinhole_rig(256, 200.0);
    rig.extrinsics.position = anim::Track<Vec3>::linear({{0.0, Vec3::Zero()}, {1.0 / 24.0, Vec3(0.1, 0, 0)}});
    const auto frame = render_frame(s, rig, 0);
    const double expect = -200.0 * 0.1 / 5.0;
    for (int y = 0; y < 256; ++y)
      for (int x = 0; x < 256; ++x) {
        c.within(std::abs(frame.flow.at(x, y, 0) - expect), 0.1, "translating-camera flow u");
        c.within(std::abs(frame.flow.at(x, y, 1)), 0.1, "translating-camera flow v");
      }
  }

  // Forward-warp instance consistency on random rigid-motion scenes, with a forward-backward
  // occlusion test at 1 px.
  std::size_t consistent = 0, tested = 0;
  Rng rng(404);
  for (int scene_index = 0; scene_index < 10; ++scene_index) {
    Scene s;
    s.timeline.frame_rate = 24.0;
    s.timeline.frame_count = 2;
    anim::PoseTrack ground;
    ground.position = anim::Track<Vec3>(Vec3(0, 0, -0.05));
    s.entities.push_back(box_entity(1, Vec3(6, 6, 0.05), ground));
    const double dt = 1.0 / 24.0;
    for (std::uint32_t id = 2; id < 8; ++id) {
      const Vec3 p0(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(0.2, 1.0));
      const Vec3 v(rng.normal() * 0.6, rng.normal() * 0.6, rng.normal() * 0.3);
      const Quat q0(Eigen::AngleAxisd(rng.uniform(0, 2 * kPi), Vec3(rng.normal(), rng.normal(), rng.normal()).normalized()));
      const Quat dq(Eigen::AngleAxisd(rng.uniform(-0.15, 0.15), Vec3(rng.normal(), rng.normal(), rng.normal()).normalized()));
      anim::PoseTrack t;
      t.position = anim::Track<Vec3>::linear({{0.0, p0}, {dt, p0 + v * dt}});
      t.rotation = anim::Track<Quat>::linear({{0.0, q0}, {dt, (dq * q0).normalized()}});
      s.entities.push_back(box_entity(id, Vec3(rng.uniform(0.1, 0.4), rng.uniform(0.1, 0.4), rng.uniform(0.1, 0.4)), t));
    }
    CameraRig rig = pinhole_rig(128, 110.0);
    const Vec3 eye(rng.uniform(-0.5, 0.5), -4.5, 2.5);
    const Vec3 eye_next = eye + Vec3(rng.normal() * 0.05, rng.normal() * 0.05, rng.normal() * 0.05);
    auto look = [](const Vec3& from) { return look_rotation(from, Vec3(0, 0, 0.4)); };
    rig.extrinsics.position = anim::Track<Vec3>::linear({{0.0, eye}, {dt, eye_next}});
    rig.extrinsics.rotation = anim::Track<Quat>::linear({{0.0, look(eye)}, {dt, look(eye_next)}});

    const PosedScene p0 = pose_scene(s, 0.0), p1 = pose_scene(s, dt);
    const View v0 = view_at(rig, 0.0), v1 = view_at(rig, dt);
    const GBuffer g0 = rasterize(p0, v0), g1 = rasterize(p1, v1);
    const FlowMap fwd = compute_flow(s, p0, v0, v1, dt, g0);
    const FlowMap bwd = compute_flow(s, p1, v1, v0, 0.0, g1);
    for (int y = 0; y < 128; ++y)
      for (int x = 0; x < 128; ++x) {
        const GSample& a = g0.at(x, y);
        if (!a.covered()) continue;
        const double tx = x + 0.5 + fwd.at(x, y, 0), ty = y + 0.5 + fwd.at(x, y, 1);
        const int qx = static_cast<int>(std::floor(tx)), qy = static_cast<int>(std::floor(ty));
        if (qx < 0 || qy < 0 || qx >= 128 || qy >= 128) continue;
        const GSample& b = g1.at(qx, qy);
        if (!b.covered()) continue;
        const double ex = fwd.at(x, y, 0) + bwd.at(qx, qy, 0), ey = fwd.at(x, y, 1) + bwd.at(qx, qy, 1);
        if (std::hypot(ex, ey) > 1.0) continue;  // occluded or disoccluded
        ++tested;
        consistent += a.instance == b.instance;
      }
  }
  const double rate = tested ? static_cast<double>(consistent) / static_cast<double>(tested) : 0.0;
  c.require(tested > 10000, "too few non-occluded pixels tested");
  c.require(rate >= 0.99, "warp consistency " + std::to_string(rate) + " < 0.99");
  std::ostringstream s;
  s << "256x256 plane; warp consistency " << rate << " over " << tested << " px";
  return c.outcome(s.str());
}

// ---------------------------------------------------------------------------------------------

Image random_gray(int w, int h, Rng& rng)
{
  Image img(w, h, 1);
  for (float& v : img.data) v = static_cast<float>(rng.uniform(0.0, 1.0));
  return img;
}

Outcome event_model()
{
  Checker c;
  Rng rng(7);
  std::size_t mismatches = 0, pixels = 0;
  for (int k = 0; k < 100; ++k) {
    const Image a = random_gray(32, 24, rng), b = random_gray(32, 24, rng);
    const double tau = rng.uniform(0.05, 0.6);
    const auto f = events_from_pair(a, b, tau, 0.0, static_cast<std::uint64_t>(k));
    const auto tighter = events_from_pair(a, b, tau * 1.5, 0.0, static_cast<std::uint64_t>(k));
    Image a2 = a, b2 = b;
    for (float& v : a2.data) v *= 0.5f;
    for (float& v : b2.data) v *= 0.5f;
    const auto scaled = events_from_pair(a2, b2, tau, 0.0, static_cast<std::uint64_t>(k));
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      const double la = std::log(std::max<double>(a.data[i], kEventEpsilon));
      const double lb = std::log(std::max<double>(b.data[i], kEventEpsilon));
      const int want = lb - la >= tau ? 1 : (lb - la <= -tau ? -1 : 0);
      ++pixels;
      mismatches += f.polarity.data[i] != want;
      if (tighter.polarity.data[i] != 0)
        c.require(tighter.polarity.data[i] == f.polarity.data[i], "monotonicity violated in pair " + std::to_string(k));
      const bool clamps = a2.data[i] < kEventEpsilon || b2.data[i] < kEventEpsilon;
      const double d2 = std::log(double(b2.data[i])) - std::log(double(a2.data[i]));
      if (!clamps && std::abs(std::abs(d2) - tau) > 1e-12)
        c.require(scaled.polarity.data[i] == f.polarity.data[i], "ratio invariance violated in pair " + std::to_string(k));
    }
  }
  c.require(mismatches == 0, std::to_string(mismatches) + " oracle mismatches");
  return c.outcome("100 pairs, " + std::to_string(pixels) + " px, 0 mismatches");
}

Outcome camera_suite()
{
  Checker c;
  Intrinsics in;
  in.focal = 80.0;
  in.principal = Vec2(64, 64);
  for (int k : {0, 1}) {
    in.k1 = k ? 0.1 : 0.0;
    for (double u = 0.5; u < 128; u += 3.1)
      for (double v = 0.5; v < 128; v += 3.7) {
        const auto p = unproject(in, Vec2(u, v), 3.7);
        const auto back = p ? project(in, *p) : std::nullopt;
        c.require(back.has_value(), "round trip failed to project");
        if (back) c.within((*back - Vec2(u, v)).norm(), 1e-6, "project/unproject");
      }
  }
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const double r = rng.uniform(0, 1), a = rng.uniform(0, 2 * kPi);
    const Vec2 q(r * std::cos(a), r * std::sin(a));
    c.within((undistort(0.1, 0.0, distort(0.1, 0.0, q)) - q).norm(), 1e-9, "distort/undistort");
  }
  Intrinsics fe;
  fe.model = ProjectionModel::FisheyeEquidistant;
  fe.focal = 100.0;
  fe.principal = Vec2(64, 64);
  for (int i = 0; i < 2000; ++i) {
    const double theta = rng.uniform(0.0, kPi * 0.95), phi = rng.uniform(0, 2 * kPi);
    const Vec3 d(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
    const auto px = project(fe, d);
    c.require(px.has_value(), "fisheye failed to project");
    if (px) c.within(std::abs((*px - fe.principal).norm() - fe.focal * theta), 1e-9, "fisheye r = f theta");
  }
  return c.outcome("pinhole (k1 0 and 0.1), distortion, fisheye");
}

Outcome format_round_trips()
{
  Checker c;
  const fs::path dir = fs::temp_directory_path() / "worldforge_acceptance_formats";
  fs::remove_all(dir);
  fs::create_directories(dir);
  Rng rng(5);
  FlowMap flow(37, 23, 2);
  for (float& v : flow.data) v = static_cast<float>(rng.normal() * 20.0);
  write_flo(dir / "a.flo", flow);
  c.require(read_flo(dir / "a.flo") == flow, ".flo round trip");
  Raster<float> depth(19, 31, 1);
  for (float& v : depth.data) v = static_cast<float>(rng.uniform(0.1, 100.0));
  depth.data[3] = std::numeric_limits<float>::infinity();
  write_pfm(dir / "d.pfm", depth);
  c.require(read_pfm(dir / "d.pfm") == depth, "PFM round trip (1 channel)");
  Raster<float> normals(7, 5, 3);
  for (float& v : normals.data) v = static_cast<float>(rng.normal());
  write_pfm(dir / "n.pfm", normals);
  c.require(read_pfm(dir / "n.pfm") == normals, "PFM round trip (3 channels)");
  Raster<std::uint16_t> seg(33, 17, 1);
  for (auto& v : seg.data) v = static_cast<std::uint16_t>(rng.below(65536));
  write_png_u16(dir / "s.png", seg);
  c.require(read_png_u16(dir / "s.png") == seg, "16-bit PNG round trip");

  FlowMap one(1, 1, 2);
  one.data = {1.5f, -2.0f};
  const std::string bytes = encode_flo(one);
  std::string expect = "PIEH";
  auto put_i32 = [&](std::int32_t v) { expect.append(reinterpret_cast<const char*>(&v), 4); };
  auto put_f32 = [&](float v) { expect.append(reinterpret_cast<const char*>(&v), 4); };
  put_i32(1);
  put_i32(1);
  put_f32(1.5f);
  put_f32(-2.0f);
  c.require(bytes.size() == 20 && bytes == expect, "1x1 .flo layout");
  fs::remove_all(dir);
  return c.outcome(".flo, PFM, 16-bit PNG; 20-byte 1x1 .flo");
}

FlowMap random_flow(int w, int h, Rng& rng)
{
  FlowMap f(w, h, 2);
  for (float& v : f.data) v = static_cast<float>(rng.normal() * 5.0);
  return f;
}

Outcome epe_harness()
{
  Checker c;
  Rng rng(8);
  const FlowMap gt = random_flow(64, 48, rng);
  c.within(epe(gt, gt).mean, 0.0, "gt vs gt");
  FlowMap shifted = gt;
  for (std::size_t i = 0; i < shifted.data.size(); i += 2) shifted.data[i] = gt.data[i] + 1.0f;
  // Offsets of exactly 1 in float are exact only when gt + 1 is representable without rounding.
  FlowMap zero(64, 48, 2, 0.0f), ones(64, 48, 2, 0.0f);
  for (std::size_t i = 0; i < ones.data.size(); i += 2) ones.data[i] = 1.0f;
  c.require(epe(ones, zero).mean == 1.0, "constant (1,0) offset is not exactly 1.0");
  c.within(std::abs(epe(shifted, gt).mean - 1.0), 1e-5, "(1,0) offset on random flow");
  for (int k = 0; k < 1000; ++k) {
    const FlowMap a = random_flow(6, 5, rng), b = random_flow(6, 5, rng), d = random_flow(6, 5, rng);
    const double ab = epe(a, b).mean, ba = epe(b, a).mean, ad = epe(a, d).mean, db = epe(d, b).mean;
    c.require(ab > 0.0 && epe(a, a).mean == 0.0, "identity of indiscernibles");
    c.require(ab == ba, "symmetry");
    c.require(ab <= ad + db + 1e-9, "triangle inequality");
  }
  return c.outcome("gt=0, offset=1.0, axioms on 1000 pairs");
}

Outcome city_fixture()
{
  Checker c;
  const osm::OsmDocument doc = osm::load_osm_file(fixture_dir / "city_fixture.osm");
  const osm::SemanticMap map = osm::build_semantic_map(doc, osm::document_centroid(doc));
  const auto crossings = city::detect_intersections(map);
  c.require(crossings.size() == 1, std::to_string(crossings.size()) + " intersections, expected 1");
  const city::CityScene scene = city::generate_city(map, city::builtin_prop_library(), 1);
  int traffic = 0;
  for (const auto& p : scene.placements) traffic += p.kind == city::PropKind::TrafficLight || p.kind == city::PropKind::StopSign;
  c.require(traffic >= 4, std::to_string(traffic) + " traffic props, expected >= 4");
  int buildings = 0;
  for (const auto& fp : map.footprints) {
    if (fp.cls != osm::SemanticClass::Building) continue;
    ++buildings;
    const TriMesh m = city::extrude_building(fp.polygon, fp.height, city::roof_type_for(fp), city::default_ridge_height(fp.polygon));
    const double want = signed_area(fp.polygon) * fp.height;
    c.within(std::abs(mesh_volume(m) - want) / want, 1e-6, "building volume");
  }
  c.require(buildings == 1, std::to_string(buildings) + " buildings, expected 1");
  return c.outcome("1 intersection, " + std::to_string(traffic) + " traffic props");
}

// ---------------------------------------------------------------------------------------------

std::map<std::string, std::string> tree(const fs::path& root)
{
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = read_file_bytes(e.path());
  return files;
}

int run_cli(const fs::path& config, const std::string& extra)
{
  const std::string cmd = "\"" + cli_path + "\" generate --config \"" + config.string() + "\" " + extra + " > /dev/null";
  return std::system(cmd.c_str());
}

Outcome end_to_end()
{
  Checker c;
  const fs::path dir = fs::temp_directory_path() / "worldforge_acceptance_e2e";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const nlohmann::json config = {{"seed", 42},
                                 {"scene_count", 1},
                                 {"output", "run"},
                                 {"timeline", {{"fps", 24}, {"frames", 24}}},
                                 {"cameras", nlohmann::json::array({{{"resolution", {128, 128}}, {"focal_length", 120}}})},
                                 {"recipe", {{"type", "pile"}, {"pile", {{"body_count", 5}}}}}};
  for (const char* run : {"a", "b", "events"}) {
    fs::create_directories(dir / run);
    write_file_bytes(dir / run / "pile.json", config.dump(2));
  }
  c.require(run_cli(dir / "a" / "pile.json", "") == 0, "first run failed");
  c.require(run_cli(dir / "b" / "pile.json", "") == 0, "second run failed");
  if (!c.ok) return c.outcome("");
  const auto a = tree(dir / "a" / "run"), b = tree(dir / "b" / "run");
  c.require(a.size() == 24 * 7 + 1, std::to_string(a.size()) + " files, expected " + std::to_string(24 * 7 + 1));
  c.require(a == b, "trees differ between identical runs");

  c.require(run_cli(dir / "events" / "pile.json", "--set timeline.event_supersample=10") == 0, "event run failed");
  int events = 0;
  if (fs::exists(dir / "events" / "run" / "scene_0000" / "events"))
    for (const auto& e : fs::directory_iterator(dir / "events" / "run" / "scene_0000" / "events")) events += e.path().extension() == ".png";
  c.require(events == 24, std::to_string(events) + " event frames, expected 24");
  fs::remove_all(dir);
  return c.outcome("2 identical runs of " + std::to_string(a.size()) + " files; " + std::to_string(events) + " event frames");
}

struct Criterion {
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv)
{
  if (argc < 3) {
    std::cerr << "usage: acceptance <worldforge-cli> <fixture-dir>\n";
    return 2;
  }
  cli_path = argv[1];
  fixture_dir = argv[2];

  const std::vector<Criterion> criteria = {
      {"physics free fall", 1.0, free_fall},
      {"collision suite", 10.0, collisions},
      {"fracture conservation", 60.0, fracture_conservation},
      {"flow ground truth", 60.0, flow_oracle},
      {"event model", 10.0, event_model},
      {"camera suite", 5.0, camera_suite},
      {"format round trips", 5.0, format_round_trips},
      {"EPE harness", 10.0, epe_harness},
      {"city fixture", 5.0, city_fixture},
      {"end-to-end determinism", 300.0, end_to_end},
  };

  int failed = 0;
  for (const Criterion& cr : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = cr.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > cr.budget_s) {
      out.ok = false;
      out.detail += "; over time budget";
    }
    failed += !out.ok;
    std::printf("%s  %-24s %8.3f s (budget %g s)  %s\n", out.ok ? "PASS" : "FAIL", cr.name, secs, cr.budget_s, out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
