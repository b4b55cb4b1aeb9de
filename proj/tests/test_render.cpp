#include "doctest.h"

#include "worldforge/error.hpp"
#include "worldforge/random.hpp"
#include "worldforge/render.hpp"

using namespace worldforge;

namespace {

Entity quad_entity(std::uint32_t id, double z, double half = 10.0)
{
  Entity e;
  e.id = id;
  e.mesh = std::make_shared<TriMesh>(make_quad(half, half));
  e.material = std::make_shared<assets::Material>();
  e.track.position = anim::Track<Vec3>(Vec3(0, 0, z));
  return e;
}

CameraRig camera(int size = 64, double focal = 100.0)
{
  CameraRig c;
  c.width = c.height = size;
  c.principal_point = Vec2(size / 2.0, size / 2.0);
  c.focal_length = anim::Track<double>(focal);
  return c;
}

Scene lit_scene()
{
  Scene s;
  s.lights.push_back(Light::sun(Vec3(0.3, 0.2, 1.0), 1.0, 5800.0));
  s.lights.push_back(Light::ambient(Vec3::Constant(0.1)));
  return s;
}

}  // namespace

TEST_SUITE("render")
{
  TEST_CASE("empty scene is all background")
  {
    const Scene s;
    const auto g = rasterize(pose_scene(s, 0.0), view_at(camera(), 0.0));
    for (const auto& px : g.samples) {
      CHECK(px.instance == 0);
      CHECK(std::isinf(px.depth));
    }
  }

  TEST_CASE("fronto-parallel quad has constant depth")
  {
    Scene s;
    s.entities.push_back(quad_entity(1, 2.0));
    const auto g = rasterize(pose_scene(s, 0.0), view_at(camera(), 0.0));
    int covered = 0;
    for (const auto& px : g.samples) {
      REQUIRE(px.instance == 1);
      CHECK(std::abs(px.depth - 2.0) <= 1e-6);
      covered += px.covered();
    }
    CHECK(covered == 64 * 64);
  }

  TEST_CASE("z-buffer keeps the nearest surface")
  {
    Scene s;
    s.entities.push_back(quad_entity(2, 2.0));
    s.entities.push_back(quad_entity(1, 1.0, 0.2));
    const auto g = rasterize(pose_scene(s, 0.0), view_at(camera(), 0.0));
    // The small quad covers |x - 32| < 20 px at z = 1.
    for (int y = 14; y < 50; ++y)
      for (int x = 14; x < 50; ++x) CHECK(g.at(x, y).instance == 1);
    CHECK(g.at(2, 2).instance == 2);
  }

  TEST_CASE("tilted ground plane depth matches the analytic ray-plane distance")
  {
    Scene s;
    Entity ground = quad_entity(1, 0.0, 50.0);
    s.entities.push_back(ground);
    CameraRig c = camera(96, 80.0);
    const Vec3 eye(0.0, -6.0, 3.0);
    c.extrinsics.position = anim::Track<Vec3>(eye);
    c.extrinsics.rotation = anim::Track<Quat>(look_rotation(eye, Vec3(0, 0, 0)));
    const View v = view_at(c, 0.0);
    const auto g = rasterize(pose_scene(s, 0.0), v);
    int covered = 0;
    for (int y = 0; y < 96; ++y)
      for (int x = 0; x < 96; ++x) {
        const auto& px = g.at(x, y);
        const Vec3 d = *pixel_direction(v.intrinsics, Vec2(x + 0.5, y + 0.5));
        const Vec3 dw = v.world_from_camera.rotate(d);
        if (dw.z() >= -1e-9) {
          CHECK_FALSE(px.covered());
          continue;
        }
        const double t = -eye.z() / dw.z();
        const Vec3 hit = eye + t * dw;
        if (std::abs(hit.x()) > 49.0 || std::abs(hit.y()) > 49.0) continue;
        REQUIRE(px.covered());
        ++covered;
        CHECK(std::abs(px.depth - t * d.z()) <= 1e-4);
        // Normals are unit and face the camera.
        CHECK(std::abs(px.normal.norm() - 1.0) <= 1e-9);
        CHECK(px.normal.dot(dw) < 0.0);
      }
    CHECK(covered > 1000);
  }

  TEST_CASE("ray casting agrees with rasterization")
  {
    Scene s;
    Entity box;
    box.id = 5;
    box.mesh = std::make_shared<TriMesh>(make_box(Vec3(0.5, 0.4, 0.3)));
    box.track.rotation = anim::Track<Quat>(Quat(Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized())));
    box.track.position = anim::Track<Vec3>(Vec3(0.1, -0.1, 3.0));
    s.entities.push_back(box);
    s.entities.push_back(quad_entity(6, 5.0));
    const PosedScene ps = pose_scene(s, 0.0);
    const View v = view_at(camera(), 0.0);
    const auto a = rasterize(ps, v);
    const auto b = raycast_gbuffer(ps, v);
    int same = 0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
      if (a.samples[i].instance != b.samples[i].instance) continue;
      ++same;
      if (a.samples[i].covered()) CHECK(std::abs(a.samples[i].depth - b.samples[i].depth) <= 1e-5);
    }
    CHECK(same >= static_cast<int>(0.99 * a.samples.size()));
  }

  TEST_CASE("panoramic models see all around")
  {
    Scene s;
    Entity sphere;
    sphere.id = 3;
    sphere.mesh = std::make_shared<TriMesh>(make_uv_sphere(10.0));
    s.entities.push_back(sphere);
    for (auto model : {ProjectionModel::FisheyeEquidistant, ProjectionModel::Equirectangular}) {
      CameraRig c = camera(48, 48 / kPi);
      c.model = model;
      const auto g = rasterize(pose_scene(s, 0.0), view_at(c, 0.0));
      int covered = 0;
      for (const auto& px : g.samples) {
        if (!px.covered()) continue;
        ++covered;
        // Range to an inscribed-polygon sphere stays within its chord sag.
        CHECK(px.depth <= 10.0 + 1e-9);
        CHECK(px.depth >= 10.0 * std::cos(kPi / 12.0) - 1e-9);
      }
      if (model == ProjectionModel::Equirectangular)
        CHECK(covered == 48 * 48);
      else
        CHECK(covered > 48 * 48 * 3 / 4);
    }
  }

  TEST_CASE("fog blend factor")
  {
    CHECK(fog_factor(0.0, 10.0) == 0.0);
    CHECK(std::abs(fog_factor(0.1, 10.0) - 0.6321205588) <= 1e-6);

    Scene s = lit_scene();
    s.entities.push_back(quad_entity(1, 10.0));
    const CameraRig c = camera(16);
    const PosedScene ps = pose_scene(s, 0.0);
    const auto g = rasterize(ps, view_at(c, 0.0));
    const auto lights = resolve_lights(s, ps);
    const Image clear = shade(g, ps, lights, s.weather, Vec3::Zero(), 1);
    s.weather.fog_density = 0.0;
    s.weather.weather = Weather::Fog;
    CHECK(shade(g, ps, lights, s.weather, Vec3::Zero(), 1) == clear);
    s.weather.fog_density = 0.1;
    const Image foggy = shade(g, ps, lights, s.weather, Vec3::Zero(), 1);
    const auto& px = g.at(8, 8);
    const double f = fog_factor(0.1, px.range);
    for (int k = 0; k < 3; ++k)
      CHECK(foggy.at(8, 8, k) == doctest::Approx(clear.at(8, 8, k) + f * (fog_color(s.weather)[k] - clear.at(8, 8, k))).epsilon(1e-6));
  }

  TEST_CASE("grazing light without ambient is black; Lambert never amplifies")
  {
    Scene s;
    s.entities.push_back(quad_entity(1, 2.0));
    auto white = std::make_shared<assets::Material>();
    white->base_color = Vec3::Ones();
    s.entities[0].material = white;
    s.lights.push_back(Light::sun(Vec3(1, 0, 0), 1.0, 5800.0));  // parallel to the quad
    const PosedScene ps = pose_scene(s, 0.0);
    const auto g = rasterize(ps, view_at(camera(16), 0.0));
    const Image img = shade(g, ps, s.lights, s.weather, Vec3::Zero(), 1);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x)
        for (int k = 0; k < 3; ++k) CHECK(img.at(x, y, k) == 0.0f);

    for (double kelvin : {2000.0, 3000.0, 5800.0, 9000.0}) {
      const double e = 0.7;
      s.lights = {Light::sun(Vec3(0, 0, 1), e, kelvin)};  // head-on
      const Image lit = shade(g, ps, s.lights, s.weather, Vec3::Zero(), 1);
      double max_luma = 0.0;
      for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) max_luma = std::max(max_luma, luma(lit.at(x, y, 0), lit.at(x, y, 1), lit.at(x, y, 2)));
      CHECK(max_luma <= e + 1e-6);
      CHECK(max_luma >= e - 1e-3);
    }
  }

  TEST_CASE("shadows from an occluder")
  {
    Scene s;
    s.entities.push_back(quad_entity(1, 4.0));
    Entity blocker = quad_entity(2, 3.0, 0.5);
    blocker.track.position = anim::Track<Vec3>(Vec3(2.0, 0.0, 3.0));  // out of view, between light and wall
    s.entities.push_back(blocker);
    s.lights = {Light::sun(Vec3(-1, 0, 1), 1.0, 5800.0)};
    const PosedScene ps = pose_scene(s, 0.0);
    const auto g = rasterize(ps, view_at(camera(64, 32.0), 0.0));
    const Image img = shade(g, ps, s.lights, s.weather, Vec3::Zero(), 1);
    // The wall point (1, 0, 4) is hidden from the sun by the blocker at x in [1.5, 2.5].
    const auto shadowed = project(view_at(camera(64, 32.0), 0.0).intrinsics, Vec3(1.0, 0.0, 4.0));
    REQUIRE(shadowed);
    const int sx = static_cast<int>(shadowed->x()), sy = static_cast<int>(shadowed->y());
    CHECK(g.at(sx, sy).instance == 1);
    CHECK(img.at(sx, sy, 1) == 0.0f);
    CHECK(img.at(32, 32, 1) > 0.1f);
  }

  TEST_CASE("blackbody table is luminance-normalized and warm-to-cool")
  {
    for (double k : {1500.0, 3000.0, 5800.0, 6550.0, 10000.0}) {
      const Vec3 c = blackbody_rgb(k);
      CHECK(luma(c.x(), c.y(), c.z()) == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(blackbody_rgb(3000.0).x() > blackbody_rgb(3000.0).z());
    CHECK(blackbody_rgb(10000.0).z() > blackbody_rgb(10000.0).x());
    // Linear interpolation between 100 K entries.
    const Vec3 mid = blackbody_rgb(3050.0);
    CHECK((mid - 0.5 * (blackbody_rgb(3000.0) + blackbody_rgb(3100.0))).norm() <= 1e-12);
  }

  TEST_CASE("flow: static scene is exactly zero")
  {
    Scene s = lit_scene();
    s.entities.push_back(quad_entity(1, 3.0, 1.0));
    const auto f = render_frame(s, camera(32), 0);
    for (float v : f.flow.data) CHECK(v == 0.0f);
  }

  TEST_CASE("flow: translating camera over a fronto-parallel plane")
  {
    Scene s = lit_scene();
    s.entities.push_back(quad_entity(1, 5.0, 100.0));
    CameraRig c = camera(64, 100.0);
    c.extrinsics.position = anim::Track<Vec3>::linear({{0.0, Vec3(0, 0, 0)}, {1.0 / 24.0, Vec3(0.1, 0, 0)}});
    const auto f = render_frame(s, c, 0);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        CHECK(std::abs(f.flow.at(x, y, 0) - (-2.0)) <= 0.1);
        CHECK(std::abs(f.flow.at(x, y, 1)) <= 0.1);
      }
  }

  TEST_CASE("flow: object translating parallel to the image plane")
  {
    Scene s = lit_scene();
    Entity e = quad_entity(1, 2.0, 0.3);
    e.track.position = anim::Track<Vec3>::linear({{0.0, Vec3(0, 0, 2)}, {1.0 / 24.0, Vec3(0.05, 0, 2)}});
    s.entities.push_back(e);
    const auto f = render_frame(s, camera(64, 100.0), 0);
    int on_object = 0;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        if (f.instance_seg.at(x, y) == 0) {
          CHECK(f.flow.at(x, y, 0) == 0.0f);
          continue;
        }
        ++on_object;
        CHECK(std::abs(f.flow.at(x, y, 0) - 2.5) <= 0.1);
      }
    CHECK(on_object > 100);
  }

  TEST_CASE("flow: background moves with camera rotation only")
  {
    Scene s;
    CameraRig c = camera(32, 100.0);
    c.extrinsics.rotation = anim::Track<Quat>::linear(
        {{0.0, Quat::Identity()}, {1.0 / 24.0, Quat(Eigen::AngleAxisd(0.01, Vec3::UnitY()))}});
    const auto f = render_frame(s, c, 0);
    // Yawing right by 0.01 rad moves the center pixel left by about f * 0.01.
    CHECK(f.flow.at(16, 16, 0) == doctest::Approx(-1.0).epsilon(0.01));
    c.extrinsics.rotation = anim::Track<Quat>(Quat::Identity());
    c.extrinsics.position = anim::Track<Vec3>::linear({{0.0, Vec3::Zero()}, {1.0, Vec3(5, 0, 0)}});
    const auto g = render_frame(s, c, 0);
    for (float v : g.flow.data) CHECK(v == 0.0f);
  }

  TEST_CASE("degenerate sampling and determinism")
  {
    Scene s = lit_scene();
    s.entities.push_back(quad_entity(1, 3.0, 1.0));
    Entity box;
    box.id = 2;
    box.mesh = std::make_shared<TriMesh>(make_box(Vec3::Constant(0.3)));
    box.track.position = anim::Track<Vec3>::linear({{0.0, Vec3(-0.5, 0, 2.5)}, {1.0, Vec3(0.5, 0, 2.5)}});
    s.entities.push_back(box);
    CameraRig c = camera(32);

    const auto frame = render_frame(s, c, 3);
    const double t = s.timeline.frame_time(3);
    const PosedScene ps = pose_scene(s, t);
    const auto g = rasterize(ps, view_at(c, t));
    const std::uint64_t seed_unused = 0;
    (void)seed_unused;
    const Image single = tone_map(shade(g, ps, resolve_lights(s, ps), s.weather, Vec3::Zero(), 0));
    CHECK(frame.rgb == single);

    RenderSettings many;
    many.time_samples = 4;
    many.lens_samples = 3;
    CHECK(render_frame(s, c, 3, many).rgb == frame.rgb);  // aperture 0, shutter 0

    // Static scene with a shutter: time samples change nothing.
    Scene still = s;
    still.entities.pop_back();
    CameraRig shutter = c;
    shutter.shutter_time = 1.0 / 48.0;
    CHECK(render_frame(still, shutter, 0, many).rgb == render_frame(still, c, 0).rgb);

    // Motion blur actually blurs, deterministically.
    const auto blurred = render_frame(s, shutter, 3, many);
    CHECK(blurred.rgb != frame.rgb);
    CHECK(blurred.depth == frame.depth);
    const auto again = render_frame(s, shutter, 3, many);
    CHECK(again.rgb == blurred.rgb);
    CHECK(again.flow == blurred.flow);
    CHECK(again.instance_seg == blurred.instance_seg);

    // Thread count does not change the output.
    RenderSettings one = many;
    one.threads = 1;
    CHECK(render_frame(s, shutter, 3, one).rgb == blurred.rgb);
  }

  TEST_CASE("depth of field blurs away from the focus plane")
  {
    Scene s = lit_scene();
    auto checker = std::make_shared<assets::Material>();
    checker->albedo_texture = assets::checker_texture(64, 16, Vec3::Zero(), Vec3::Ones());
    Entity near_wall = quad_entity(1, 2.0, 1.0);
    near_wall.material = checker;
    s.entities.push_back(near_wall);
    CameraRig c = camera(32, 32.0);
    c.focus_distance = anim::Track<double>(2.0);
    const auto sharp = render_frame(s, c, 0);
    c.aperture_radius = anim::Track<double>(0.02);
    RenderSettings rs;
    rs.lens_samples = 3;
    const auto focused = render_frame(s, c, 0, rs);
    double diff_focused = 0.0;
    for (std::size_t i = 0; i < sharp.rgb.data.size(); ++i) diff_focused += std::abs(sharp.rgb.data[i] - focused.rgb.data[i]);
    c.focus_distance = anim::Track<double>(0.5);
    const auto defocused = render_frame(s, c, 0, rs);
    double diff_defocused = 0.0;
    for (std::size_t i = 0; i < sharp.rgb.data.size(); ++i) diff_defocused += std::abs(sharp.rgb.data[i] - defocused.rgb.data[i]);
    CHECK(diff_defocused > 10.0 * (diff_focused + 1e-3));
  }

  TEST_CASE("stereo and anaglyph")
  {
    Image white(4, 3, 3, 1.0f), black(4, 3, 3, 0.0f);
    const Image red = anaglyph(white, black);
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 4; ++x) {
        CHECK(red.at(x, y, 0) == doctest::Approx(1.0));
        CHECK(red.at(x, y, 1) == 0.0f);
        CHECK(red.at(x, y, 2) == 0.0f);
      }
    Image img(4, 3, 3);
    Rng rng(3);
    for (float& v : img.data) v = static_cast<float>(rng.uniform());
    const Image gray = anaglyph(img, img);
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 4; ++x) {
        CHECK(std::abs(gray.at(x, y, 0) - gray.at(x, y, 1)) <= 1e-6);
        CHECK(std::abs(gray.at(x, y, 1) - gray.at(x, y, 2)) <= 1e-6);
      }
    CHECK_THROWS_AS(anaglyph(img, Image(3, 3, 3)), Error);

    Scene s = lit_scene();
    s.entities.push_back(quad_entity(1, 3.0, 0.5));
    CameraRig c = camera(32);
    CHECK_FALSE(render_frame(s, c, 0).stereo_right_rgb);
    c.stereo_baseline = anim::Track<double>(0.2);
    const auto f = render_frame(s, c, 0);
    REQUIRE(f.stereo_right_rgb);
    CHECK(*f.stereo_right_rgb != f.rgb);
    CHECK(f.metadata.stereo_baseline == 0.2);
  }

  TEST_CASE("lighting presets and weather")
  {
    Scene s;
    s.entities.push_back(quad_entity(1, 0.0, 20.0));
    Entity lamp;
    lamp.id = 2;
    lamp.label = SemanticLabel::StreetLight;
    lamp.mesh = std::make_shared<TriMesh>(make_cylinder(0.1, 2.0, 8));
    s.entities.push_back(lamp);
    const PosedScene ps = pose_scene(s, 0.0);
    s.weather.lighting = Lighting::Midday;
    auto lights = resolve_lights(s, ps);
    REQUIRE(lights[0].kind == Light::Kind::Sun);
    CHECK(std::asin(-lights[0].direction.z()) == doctest::Approx(kPi / 3.0));
    CHECK(lights[0].irradiance == 1.0);
    s.weather.weather = Weather::Cloudy;
    CHECK(resolve_lights(s, ps)[0].irradiance == doctest::Approx(0.3));
    s.weather.lighting = Lighting::Sunset;
    s.weather.weather = Weather::Clear;
    lights = resolve_lights(s, ps);
    CHECK(std::asin(-lights[0].direction.z()) == doctest::Approx(10.0 * kPi / 180.0));
    CHECK(lights[0].color_temperature == 3000.0);
    s.weather.lighting = Lighting::Night;
    lights = resolve_lights(s, ps);
    int points = 0;
    for (const auto& l : lights) points += l.kind == Light::Kind::Point;
    CHECK(points == 1);

    // Rain streaks are seeded.
    Image a(32, 32, 3, 0.1f), b = a, c = a;
    apply_rain(a, 0.8, 1);
    apply_rain(b, 0.8, 1);
    apply_rain(c, 0.8, 2);
    CHECK(a == b);
    CHECK(a != c);
  }
}
