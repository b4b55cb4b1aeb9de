#include "doctest.h"

#include "worldforge/assets.hpp"
#include "worldforge/error.hpp"
#include "worldforge/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace worldforge;
using namespace worldforge::assets;
namespace fs = std::filesystem;

namespace {

const fs::path kData = fs::path(WORLDFORGE_TEST_DATA) / "assets";

fs::path scratch_dir(const std::string& name)
{
  fs::path dir = fs::temp_directory_path() / ("worldforge_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ErrorCode code_of(auto&& fn)
{
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("assets")
{
  TEST_CASE("asset list loads the cube fixture with its material")
  {
    const auto list = load_asset_list(kData / "assets.list");
    REQUIRE(list.size() == 2);
    const TriMesh& cube = list[0].mesh;
    CHECK(cube.triangles.size() == 12);
    CHECK(cube.positions.size() == 8);
    CHECK(mesh_volume(cube) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mesh_is_valid(cube));
    CHECK(list[0].material.name == "painted");
    CHECK(list[0].material.base_color.isApprox(Vec3(0.9, 0.2, 0.1)));
    // No mtl on the second record: default material.
    CHECK(list[1].material.name == "default");
  }

  TEST_CASE("quad faces are fan-triangulated and negative indices resolve")
  {
    const TriMesh quad = load_obj(kData / "quad.obj");
    REQUIRE(quad.triangles.size() == 2);
    CHECK(quad.positions.size() == 4);
    CHECK(quad.has_uvs());
    CHECK(surface_area(quad) == doctest::Approx(4.0));
    for (const Vec3& n : quad.normals) CHECK(n.isApprox(Vec3::UnitZ()));
  }

  TEST_CASE("missing OBJ reports the path")
  {
    try {
      load_asset_list(kData / "missing.list");
      FAIL("expected FileNotFound");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::FileNotFound);
      CHECK(std::string(e.what()).find("does_not_exist.obj") != std::string::npos);
    }
  }

  TEST_CASE("malformed OBJ records report the line number")
  {
    try {
      load_obj(kData / "bad.obj");
      FAIL("expected ObjParseError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ObjParseError);
      CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    CHECK(code_of([] { parse_obj("v 0 0 0\nf 1 2 3\n"); }) == ErrorCode::ObjParseError);
    CHECK(code_of([] { parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2\n"); }) == ErrorCode::ObjParseError);
  }

  TEST_CASE("MTL statements outside a material are rejected")
  {
    CHECK(code_of([] { parse_mtl("Kd 1 1 1\n", "."); }) == ErrorCode::MtlParseError);
    CHECK(code_of([] { parse_mtl("newmtl a\nKd 1 oops 1\n", "."); }) == ErrorCode::MtlParseError);
  }

  TEST_CASE("MTL texture maps are loaded relative to the MTL file")
  {
    const fs::path dir = scratch_dir("mtl");
    Image tex(4, 4, 3, 0.25f);
    write_png(dir / "albedo.png", tex);
    write_png(dir / "disp.png", Image(2, 2, 1, 1.0f));
    {
      std::ofstream(dir / "m.mtl") << "newmtl stone\nmap_Kd albedo.png\ndisp -bm 0.2 disp.png\nmap_bump -bm 0.5 albedo.png\n";
    }
    const auto mats = load_mtl(dir / "m.mtl");
    REQUIRE(mats.size() == 1);
    REQUIRE(mats[0].albedo_texture);
    CHECK(mats[0].albedo_texture->width == 4);
    CHECK(mats[0].albedo_texture->at(1, 1, 0) == doctest::Approx(64.0 / 255.0));
    REQUIRE(mats[0].displacement_map);
    CHECK(mats[0].displacement_strength == doctest::Approx(0.2));
    REQUIRE(mats[0].normal_map);
    CHECK(mats[0].normal_strength == doctest::Approx(0.5));
    CHECK(code_of([&] { load_mtl(dir / "absent.mtl"); }) == ErrorCode::FileNotFound);
  }

  TEST_CASE("OBJ round trip preserves positions and triangles")
  {
    for (const TriMesh& src : {load_obj(kData / "cube.obj"), make_uv_sphere(1.0, 12, 6), load_obj(kData / "quad.obj")}) {
      const TriMesh back = parse_obj(write_obj(src));
      CHECK(back.positions == src.positions);
      CHECK(back.triangles == src.triangles);
    }
  }

  TEST_CASE("perturb_map")
  {
    const Image flat(256, 256, 1, 0.5f);
    CHECK(perturb_map(flat, 0.0, 7) == flat);

    const Image noisy = perturb_map(flat, 0.1, 42);
    double sum = 0.0, sq = 0.0;
    for (float v : noisy.data) sum += v;
    const double mean = sum / static_cast<double>(noisy.data.size());
    for (float v : noisy.data) sq += (v - mean) * (v - mean);
    const double stddev = std::sqrt(sq / static_cast<double>(noisy.data.size() - 1));
    CHECK(std::abs(mean - 0.5) <= 0.004);
    CHECK(std::abs(stddev - 0.1) <= 0.01);

    CHECK(perturb_map(flat, 0.1, 42) == noisy);
    CHECK(perturb_map(flat, 0.1, 43) != noisy);
    const Image wild = perturb_map(flat, 5.0, 1);
    CHECK(std::all_of(wild.data.begin(), wild.data.end(), [](float v) { return v >= 0.0f && v <= 1.0f; }));
  }

  TEST_CASE("apply_displacement")
  {
    const TriMesh sphere = make_uv_sphere(1.0, 32, 16);
    Material mid;
    mid.displacement_map = Image(8, 8, 1, 0.5f);
    mid.displacement_strength = 0.1;
    const TriMesh same = apply_displacement(sphere, mid);
    for (std::size_t i = 0; i < sphere.positions.size(); ++i)
      CHECK((same.positions[i] - sphere.positions[i]).norm() <= 1e-7);

    Material up = mid;
    up.displacement_map = Image(8, 8, 1, 1.0f);
    const TriMesh grown = apply_displacement(sphere, up);
    for (const Vec3& p : grown.positions) CHECK(p.norm() == doctest::Approx(1.05).epsilon(1e-6));
    CHECK(mesh_is_valid(grown));

    TriMesh no_uv = sphere;
    no_uv.uvs.clear();
    CHECK(code_of([&] { apply_displacement(no_uv, up); }) == ErrorCode::MissingUVs);
  }

  TEST_CASE("sample_texture")
  {
    Image one(1, 1, 3);
    one.data = {0.2f, 0.4f, 0.6f};
    for (const Vec2 uv : {Vec2(0, 0), Vec2(0.3, 0.9), Vec2(-4.2, 7.7)})
      CHECK(sample_texture(one, uv).isApprox(Vec3(0.2, 0.4, 0.6), 1e-6));

    Image bw(2, 1, 3);
    bw.data = {0, 0, 0, 1, 1, 1};
    const Vec3 mid = sample_texture(bw, Vec2(0.5, 0.5));
    for (int c = 0; c < 3; ++c) CHECK(mid[c] == doctest::Approx(0.5).epsilon(1e-6));

    Image grad(16, 16, 3);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x)
        for (int c = 0; c < 3; ++c) grad.at(x, y, c) = static_cast<float>((x + 2 * y + c) / 64.0);
    CHECK(sample_texture(grad, Vec2(1.25, 0.0)).isApprox(sample_texture(grad, Vec2(0.25, 0.0))));
    // Row 0 is the top of the image, i.e. v near 1.
    CHECK(sample_texture(grad, Vec2(1.0 / 32.0, 1.0 - 1.0 / 32.0))[0] == doctest::Approx(grad.at(0, 0, 0)));

    // Continuity over a sweep of the interior.
    for (double u = 0.05; u < 0.95; u += 0.01) {
      const Vec2 a(u, 0.4), b(u + 1e-6, 0.4 + 1e-6);
      CHECK((sample_texture(grad, a) - sample_texture(grad, b)).cwiseAbs().sum() < 3 * 1e-4);
    }
  }
}
