#pragma once

#include "worldforge/image.hpp"
#include "worldforge/mesh.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace worldforge::assets {

struct Material {
  std::string name = "default";
  Vec3 base_color = Vec3::Constant(0.8);
  std::optional<Image> albedo_texture;
  std::optional<Image> displacement_map;  // scalar, zero level at 0.5
  std::optional<Image> normal_map;        // tangent-space RGB
  double displacement_strength = 0.0;     // metres per unit of (D - 0.5)
  double normal_strength = 1.0;
};

struct Asset {
  TriMesh mesh;
  Material material;
  std::filesystem::path source;
};

inline constexpr double kDefaultDisplacementStrength = 0.05;

// One "<obj-path> [<mtl-path>]" record per line, '#' comments; paths relative to the list file.
std::vector<Asset> load_asset_list(const std::filesystem::path& list_path);

// Parses v/vt/vn/f records, fan-triangulating polygons and accepting negative indices.
// `source` names the input in ObjParseError messages.
TriMesh parse_obj(std::string_view text, std::string_view source = "<obj>", std::string* first_usemtl = nullptr);
TriMesh load_obj(const std::filesystem::path& path, std::string* first_usemtl = nullptr);
std::string write_obj(const TriMesh& mesh);

// Textures referenced by the MTL are resolved relative to its directory and loaded eagerly.
std::vector<Material> parse_mtl(std::string_view text, const std::filesystem::path& base_dir, std::string_view source = "<mtl>");
std::vector<Material> load_mtl(const std::filesystem::path& path);

// Per-pixel additive Gaussian noise, clamped to [0, 1]; sigma == 0 returns the input unchanged.
Image perturb_map(const Image& map, double sigma, std::uint64_t seed);

// Moves each vertex along its normal by strength * (D(uv) - 0.5), then recomputes normals.
TriMesh apply_displacement(const TriMesh& mesh, const Material& material);

// Bilinear lookup with repeat wrapping; v points up, so row 0 is sampled near v = 1.
Vec3 sample_texture(const Image& image, const Vec2& uv);
// First channel only.
double sample_scalar(const Image& image, const Vec2& uv);

// Procedural textures used by the built-in assets.
Image checker_texture(int size, int cells, const Vec3& a, const Vec3& b);
Image constant_image(int width, int height, int channels, float value);

}  // namespace worldforge::assets
