#include "worldforge/pipeline.hpp"

#include "worldforge/assets.hpp"
#include "worldforge/citygen.hpp"
#include "worldforge/dataset_io.hpp"
#include "worldforge/dynamics.hpp"
#include "worldforge/error.hpp"
#include "worldforge/events.hpp"
#include "worldforge/fracture.hpp"
#include "worldforge/osm.hpp"
#include "worldforge/parallel.hpp"
#include "worldforge/random.hpp"
#include "worldforge/render.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <regex>
#include <set>
#include <thread>

namespace worldforge::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::Validation, what); }

const json& at(const json& j, const std::string& key, const std::string& where)
{
  if (!j.is_object() || !j.contains(key)) invalid(where + "." + key + " is required");
  return j.at(key);
}

double number(const json& j, const std::string& key, const std::string& where)
{
  const json& v = at(j, key, where);
  if (!v.is_number()) invalid(where + "." + key + " must be a number");
  return v.get<double>();
}

long long integer(const json& j, const std::string& key, const std::string& where)
{
  const json& v = at(j, key, where);
  if (!v.is_number_integer()) invalid(where + "." + key + " must be an integer");
  return v.get<long long>();
}

std::string text(const json& j, const std::string& key, const std::string& where)
{
  const json& v = at(j, key, where);
  if (!v.is_string()) invalid(where + "." + key + " must be a string");
  return v.get<std::string>();
}

Vec3 vec3(const json& j, const std::string& key, const std::string& where)
{
  const json& v = at(j, key, where);
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number())
    invalid(where + "." + key + " must be an array of 3 numbers");
  return Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
}

void merge_defaults(json& target, const json& defaults)
{
  for (auto it = defaults.begin(); it != defaults.end(); ++it) {
    if (!target.contains(it.key()))
      target[it.key()] = it.value();
    else if (target[it.key()].is_object() && it.value().is_object())
      merge_defaults(target[it.key()], it.value());
  }
}

const json& recipe_defaults(Recipe r)
{
  static const json pile = {
      {"assets", "builtin"},   {"body_count", 5},         {"spawn_min", {-0.5, -0.5, 0.3}}, {"spawn_max", {0.5, 0.5, 0.5}},
      {"substeps", 10},        {"restitution", 0.2},      {"friction", 0.5},                {"density", 500.0},
      {"gravity", {0, 0, -9.81}}, {"wind", {0, 0, 0}},    {"wind_coefficient", 0.0},        {"drag", 0.0},
      {"ground_half_extent", 5.0}};
  static const json fracture = {{"target", "builtin:box"},
                                {"fragments", 8},
                                {"threshold", 1.0},
                                {"density", 500.0},
                                {"substeps", 20},
                                {"friction", 0.5},
                                {"projectile", {{"radius", 0.12}, {"speed", 12.0}, {"density", 2000.0}, {"distance", 3.0}}}};
  static const json city = {{"prop_density", 1.0}, {"flythrough", 5.0}};
  switch (r) {
    case Recipe::City: return city;
    case Recipe::Pile: return pile;
    case Recipe::Fracture: return fracture;
  }
  return pile;
}

const char* recipe_key(Recipe r)
{
  switch (r) {
    case Recipe::City: return "city";
    case Recipe::Pile: return "pile";
    case Recipe::Fracture: return "fracture";
  }
  return "pile";
}

fs::path resolve(const JobConfig& c, const std::string& p)
{
  const fs::path path(p);
  return path.is_absolute() ? path : c.base_dir / path;
}

}  // namespace

std::string to_string(Recipe r) { return recipe_key(r); }

Recipe recipe_from_string(const std::string& s)
{
  if (s == "city") return Recipe::City;
  if (s == "pile") return Recipe::Pile;
  if (s == "fracture") return Recipe::Fracture;
  invalid("unknown recipe '" + s + "'");
}

Recipe JobConfig::recipe() const { return recipe_from_string(raw.at("recipe").at("type").get<std::string>()); }
std::uint64_t JobConfig::seed() const { return raw.at("seed").get<std::uint64_t>(); }
int JobConfig::scene_count() const { return raw.at("scene_count").get<int>(); }
fs::path JobConfig::output_root() const { return resolve(*this, raw.at("output").get<std::string>()); }

JobConfig JobConfig::for_scene(int index) const
{
  JobConfig c = *this;
  const std::string key = std::to_string(index);
  if (raw.contains("scenes") && raw["scenes"].contains(key)) {
    json patched = raw;
    patched.erase("scenes");
    patched.merge_patch(raw["scenes"][key]);
    c.raw = with_defaults(patched);
  }
  return c;
}

void apply_set(json& config, const std::string& assignment)
{
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) invalid("--set expects key=value, got '" + assignment + "'");
  const std::string path = assignment.substr(0, eq), value = assignment.substr(eq + 1);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;
  }
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) invalid("--set path '" + path + "' has an empty component");
    if (node->is_array()) {
      std::size_t idx;
      try {
        idx = std::stoul(part);
      } catch (const std::exception&) {
        invalid("--set path '" + path + "': '" + part + "' is not an array index");
      }
      if (idx >= node->size()) invalid("--set path '" + path + "': index " + part + " out of range");
      node = &(*node)[idx];
    } else {
      if (!node->is_object()) *node = json::object();
      node = &(*node)[part];
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = parsed;
}

json with_defaults(const json& input)
{
  if (!input.is_object()) invalid("config must be a JSON object");
  json c = input;
  if (c.contains("camera") && !c.contains("cameras")) {
    c["cameras"] = json::array({c["camera"]});
    c.erase("camera");
  }
  static const json base = {
      {"schema", kConfigSchema},
      {"seed", 0},
      {"scene_count", 1},
      {"output", "output"},
      {"texture_sigma", 0.05},
      {"timeline", {{"fps", 24.0}, {"frames", 24}, {"event_supersample", 0}, {"event_threshold", 0.2}, {"event_noise", 0.0}}},
      {"render", {{"lens_samples", 1}, {"time_samples", 1}}},
      {"weather", {{"lighting", "midday"}, {"weather", "clear"}}},
      {"cameras", json::array({json::object()})},
      {"recipe", {{"type", "pile"}}}};
  merge_defaults(c, base);
  if (c["weather"].is_object()) {
    json& w = c["weather"];
    const std::string kind = w.value("weather", std::string("clear"));
    if (!w.contains("fog_density")) w["fog_density"] = kind == "fog" ? 0.01 : 0.0;
    if (!w.contains("rain_intensity")) w["rain_intensity"] = kind == "rain" ? 0.6 : 0.0;
  }
  if (c["recipe"].is_object() && c["recipe"].contains("type") && c["recipe"]["type"].is_string()) {
    const std::string type = c["recipe"]["type"];
    if (type == "city" || type == "pile" || type == "fracture") {
      const Recipe r = recipe_from_string(type);
      json& block = c["recipe"][recipe_key(r)];
      if (block.is_null()) block = json::object();
      if (block.is_object()) merge_defaults(block, recipe_defaults(r));
    }
  }
  return c;
}

JobConfig make_config(const json& config, const fs::path& base_dir)
{
  JobConfig c;
  c.raw = with_defaults(config);
  c.base_dir = base_dir;
  return c;
}

JobConfig load_config(const fs::path& path, const std::vector<std::string>& sets)
{
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "config not found: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    invalid(path.string() + ": " + e.what());
  }
  for (const std::string& s : sets) apply_set(j, s);
  return make_config(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

namespace {

CameraRig camera_for(const json& block, const json& default_position, const json& default_target)
{
  json cam = block;
  if (!cam.contains("position")) {
    cam["position"] = default_position;
    if (!cam.contains("rotation") && !cam.contains("look_at")) cam["look_at"] = default_target;
  }
  return camera_from_json(cam);
}

void validate_scene_block(const JobConfig& c, bool check_paths)
{
  const json& j = c.raw;
  if (text(j, "schema", "config") != kConfigSchema) invalid("config.schema must be \"" + std::string(kConfigSchema) + "\"");
  if (!at(j, "seed", "config").is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
    invalid("config.seed must be a non-negative integer");
  if (integer(j, "scene_count", "config") < 1) invalid("config.scene_count must be at least 1");
  text(j, "output", "config");
  if (number(j, "texture_sigma", "config") < 0.0) invalid("config.texture_sigma must be non-negative");

  const json& t = at(j, "timeline", "config");
  if (!(number(t, "fps", "timeline") >= 1.0)) invalid("timeline.fps must be at least 1");
  if (integer(t, "frames", "timeline") < 1) invalid("timeline.frames must be at least 1");
  if (integer(t, "event_supersample", "timeline") < 0) invalid("timeline.event_supersample must be non-negative");
  if (!(number(t, "event_threshold", "timeline") > 0.0)) invalid("timeline.event_threshold must be positive");
  if (number(t, "event_noise", "timeline") < 0.0) invalid("timeline.event_noise must be non-negative");

  const json& r = at(j, "render", "config");
  if (integer(r, "lens_samples", "render") < 1 || integer(r, "time_samples", "render") < 1)
    invalid("render sample counts must be at least 1");

  const json& w = at(j, "weather", "config");
  lighting_from_string(text(w, "lighting", "weather"));
  weather_from_string(text(w, "weather", "weather"));
  if (number(w, "fog_density", "weather") < 0.0) invalid("weather.fog_density must be non-negative");
  const double rain = number(w, "rain_intensity", "weather");
  if (rain < 0.0 || rain > 1.0) invalid("weather.rain_intensity must be in [0, 1]");

  const json& cams = at(j, "cameras", "config");
  if (!cams.is_array() || cams.empty()) invalid("config.cameras must be a non-empty array");
  std::set<std::string> ids;
  for (const json& cam : cams) {
    if (!cam.is_object()) invalid("each camera must be an object");
    const CameraRig rig = camera_for(cam, json::array({0, -3, 1}), json::array({0, 0, 0}));
    if (!ids.insert(rig.id).second) invalid("duplicate camera id '" + rig.id + "'");
  }

  const json& rec = at(j, "recipe", "config");
  const Recipe recipe = recipe_from_string(text(rec, "type", "recipe"));
  const std::string where = std::string("recipe.") + recipe_key(recipe);
  const json& b = at(rec, recipe_key(recipe), "recipe");
  auto require_file = [&](const std::string& key) {
    const fs::path p = resolve(c, text(b, key, where));
    if (check_paths && !fs::exists(p)) invalid(where + "." + key + ": file not found: " + p.string());
  };
  switch (recipe) {
    case Recipe::City: {
      require_file("osm");
      const double d = number(b, "prop_density", where);
      if (d < 0.0 || d > 1.0) invalid(where + ".prop_density must be in [0, 1]");
      number(b, "flythrough", where);
      break;
    }
    case Recipe::Pile: {
      if (text(b, "assets", where) != "builtin") require_file("assets");
      const auto n = integer(b, "body_count", where);
      if (n < 1 || n > 60000) invalid(where + ".body_count must be in [1, 60000]");
      if (integer(b, "substeps", where) < 1) invalid(where + ".substeps must be at least 1");
      const Vec3 lo = vec3(b, "spawn_min", where), hi = vec3(b, "spawn_max", where);
      if ((lo.array() > hi.array()).any()) invalid(where + ".spawn_min must not exceed spawn_max");
      for (const char* k : {"restitution", "friction", "wind_coefficient", "drag"})
        if (number(b, k, where) < 0.0) invalid(where + "." + k + " must be non-negative");
      if (!(number(b, "density", where) > 0.0) || !(number(b, "ground_half_extent", where) > 0.0))
        invalid(where + ": density and ground_half_extent must be positive");
      vec3(b, "gravity", where);
      vec3(b, "wind", where);
      break;
    }
    case Recipe::Fracture: {
      const std::string target = text(b, "target", where);
      if (target.rfind("builtin:", 0) == 0) {
        if (target != "builtin:box" && target != "builtin:prism") invalid(where + ".target: unknown builtin '" + target + "'");
      } else {
        require_file("target");
      }
      if (integer(b, "fragments", where) < 1) invalid(where + ".fragments must be at least 1");
      if (number(b, "threshold", where) < 0.0) invalid(where + ".threshold must be non-negative");
      if (integer(b, "substeps", where) < 1) invalid(where + ".substeps must be at least 1");
      if (!(number(b, "density", where) > 0.0)) invalid(where + ".density must be positive");
      const json& p = at(b, "projectile", where);
      for (const char* k : {"radius", "speed", "density", "distance"})
        if (!(number(p, k, where + ".projectile") > 0.0)) invalid(where + ".projectile." + k + " must be positive");
      break;
    }
  }
}

}  // namespace

void validate_config(const JobConfig& c)
{
  validate_scene_block(c, true);
  if (c.raw.contains("scenes")) {
    const json& s = c.raw["scenes"];
    if (!s.is_object()) invalid("config.scenes must map scene indices to override objects");
    for (auto it = s.begin(); it != s.end(); ++it) {
      int idx = -1;
      try {
        std::size_t used = 0;
        idx = std::stoi(it.key(), &used);
        if (used != it.key().size()) idx = -1;
      } catch (const std::exception&) {
      }
      if (idx < 0 || idx >= c.scene_count()) invalid("config.scenes: '" + it.key() + "' is not a scene index");
      if (!it.value().is_object()) invalid("config.scenes." + it.key() + " must be an object");
      // Per-scene overrides are checked structurally here; their paths are checked when the scene runs.
      validate_scene_block(c.for_scene(idx), false);
    }
  }
}

std::string config_hash(const json& config)
{
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : config.dump()) h = (h ^ ch) * 0x100000001B3ULL;
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t scene_seed(std::uint64_t seed, int index) { return hash_keys(seed, {static_cast<std::uint64_t>(index)}); }

std::string scene_id(int index)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%04d", index);
  return buf;
}

// ---------------------------------------------------------------------------------------------
// Recipes

namespace {

std::shared_ptr<assets::Material> flat_material(const Vec3& color)
{
  auto m = std::make_shared<assets::Material>();
  m->base_color = color;
  return m;
}

Vec3 label_color(SemanticLabel l)
{
  switch (l) {
    case SemanticLabel::Ground: return Vec3(0.35, 0.42, 0.30);
    case SemanticLabel::Building: return Vec3(0.72, 0.66, 0.58);
    case SemanticLabel::Road:
    case SemanticLabel::Highway: return Vec3(0.22, 0.22, 0.23);
    case SemanticLabel::PedestrianPath: return Vec3(0.55, 0.52, 0.48);
    case SemanticLabel::Railway: return Vec3(0.35, 0.30, 0.28);
    case SemanticLabel::Water: return Vec3(0.15, 0.30, 0.50);
    case SemanticLabel::Forest:
    case SemanticLabel::Vegetation:
    case SemanticLabel::Tree: return Vec3(0.20, 0.45, 0.18);
    case SemanticLabel::StopSign: return Vec3(0.80, 0.10, 0.10);
    case SemanticLabel::Bench: return Vec3(0.50, 0.35, 0.20);
    case SemanticLabel::TrafficLight:
    case SemanticLabel::StreetLight: return Vec3(0.25, 0.25, 0.27);
    default: return Vec3(0.5, 0.5, 0.5);
  }
}

Scene base_scene(const JobConfig& c, std::uint64_t seed)
{
  Scene s;
  const json& t = c.raw["timeline"];
  s.timeline.frame_rate = t["fps"].get<double>();
  s.timeline.frame_count = t["frames"].get<int>();
  const json& w = c.raw["weather"];
  s.weather.lighting = lighting_from_string(w["lighting"]);
  s.weather.weather = weather_from_string(w["weather"]);
  s.weather.fog_density = w["fog_density"].get<double>();
  s.weather.rain_intensity = w["rain_intensity"].get<double>();
  s.seed = seed;
  return s;
}

void add_cameras(Scene& s, const JobConfig& c, const Vec3& eye, const Vec3& target)
{
  for (const json& cam : c.raw["cameras"])
    s.cameras.push_back(camera_for(cam, json::array({eye.x(), eye.y(), eye.z()}), json::array({target.x(), target.y(), target.z()})));
}

// Simulated span: one frame past the timeline so the last frame has forward motion.
double sim_duration(const Scene& s) { return (s.timeline.frame_count + 1) / s.timeline.frame_rate; }

struct PileAsset {
  TriMesh mesh;
  assets::Material material;
};

std::vector<PileAsset> pile_assets(const JobConfig& c, const json& b)
{
  std::vector<PileAsset> out;
  const std::string src = b["assets"];
  if (src == "builtin") {
    const std::vector<std::pair<TriMesh, Vec3>> shapes = {
        {make_box(Vec3(0.25, 0.2, 0.15)), Vec3(0.85, 0.35, 0.2)},
        {make_uv_sphere(0.2, 16, 8), Vec3(0.2, 0.5, 0.85)},
        {make_cylinder(0.15, 0.2, 16), Vec3(0.3, 0.75, 0.3)},
        {make_cone(0.2, 0.4, 16), Vec3(0.9, 0.8, 0.25)},
    };
    for (const auto& [mesh, color] : shapes) {
      PileAsset a;
      a.mesh = mesh;
      a.material.name = "builtin";
      a.material.base_color = Vec3::Ones();
      a.material.albedo_texture = assets::checker_texture(64, 8, color, 0.6 * color);
      a.material.displacement_map = assets::constant_image(32, 32, 1, 0.5f);
      a.material.displacement_strength = 0.5;
      out.push_back(std::move(a));
    }
    return out;
  }
  for (assets::Asset& a : assets::load_asset_list(resolve(c, src))) out.push_back({std::move(a.mesh), std::move(a.material)});
  if (out.empty()) throw Error(ErrorCode::EmptyInput, "asset list " + src + " is empty");
  return out;
}

// Per-scene texture variant: perturbed albedo/displacement maps, displacement applied to the mesh.
PileAsset texture_variant(const PileAsset& a, double sigma, std::uint64_t seed)
{
  PileAsset v = a;
  if (sigma <= 0.0) return v;
  if (v.material.albedo_texture) v.material.albedo_texture = assets::perturb_map(*v.material.albedo_texture, sigma, hash_keys(seed, {1}));
  if (v.material.displacement_map) {
    v.material.displacement_map = assets::perturb_map(*v.material.displacement_map, sigma, hash_keys(seed, {2}));
    if (v.mesh.has_uvs()) v.mesh = assets::apply_displacement(v.mesh, v.material);
  }
  if (v.material.normal_map) v.material.normal_map = assets::perturb_map(*v.material.normal_map, sigma, hash_keys(seed, {3}));
  return v;
}

Quat random_rotation(Rng& rng)
{
  Quat q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  return q.norm() < 1e-12 ? Quat::Identity() : q.normalized();
}

void add_ground(Scene& s, physics::World& w, double half, double friction, double restitution)
{
  physics::RigidBody ground;
  ground.id = 1;
  ground.shape = physics::CollisionShape::box(Vec3(half, half, 0.5));
  ground.pose.position = Vec3(0, 0, -0.5);
  ground.friction = friction;
  ground.restitution = restitution;
  w.bodies.push_back(ground);
  Entity e;
  e.id = 1;
  e.label = SemanticLabel::Ground;
  e.mesh = std::make_shared<TriMesh>(ground.shape.mesh());
  auto mat = std::make_shared<assets::Material>();
  mat->base_color = Vec3::Ones();
  mat->albedo_texture = assets::checker_texture(64, 16, Vec3(0.45, 0.45, 0.42), Vec3(0.3, 0.3, 0.29));
  e.material = mat;
  e.track.position = anim::Track<Vec3>(ground.pose.position);
  s.entities.push_back(e);
}

// Flat assets (quads, decals) get a thin slab so they still have a collision volume.
constexpr double kFlatThickness = 0.01;

Vec3 plane_normal(const std::vector<Vec3>& pts)
{
  Vec3 best = Vec3::Zero();
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const Vec3 n = (pts[i] - pts[0]).cross(pts[i + 1] - pts[0]);
    if (n.squaredNorm() > best.squaredNorm()) best = n;
  }
  return best.normalized();
}

bool is_flat(const std::vector<Vec3>& pts)
{
  if (pts.size() < 4) return true;
  const Vec3 n = plane_normal(pts);
  if (!n.allFinite()) return true;
  double lo = kInf, hi = -kInf;
  for (const Vec3& p : pts) {
    lo = std::min(lo, n.dot(p));
    hi = std::max(hi, n.dot(p));
  }
  return hi - lo < 1e-6;
}

void thicken(std::vector<Vec3>& pts)
{
  const Vec3 n = plane_normal(pts);
  const std::size_t count = pts.size();
  for (std::size_t i = 0; i < count; ++i) {
    pts.push_back(pts[i] - 0.5 * kFlatThickness * n);
    pts[i] += 0.5 * kFlatThickness * n;
  }
}

Scene build_pile(const JobConfig& c, std::uint64_t seed)
{
  const json& b = c.raw["recipe"]["pile"];
  Scene s = base_scene(c, seed);
  const auto library = pile_assets(c, b);
  physics::World world;
  world.fields.push_back(physics::ForceField::gravity(vec3(b, "gravity", "pile")));
  if (b["wind_coefficient"].get<double>() > 0.0)
    world.fields.push_back(physics::ForceField::wind(vec3(b, "wind", "pile"), b["wind_coefficient"].get<double>()));
  if (b["drag"].get<double>() > 0.0) world.fields.push_back(physics::ForceField::drag(b["drag"].get<double>()));
  const double friction = b["friction"], restitution = b["restitution"], density = b["density"];
  add_ground(s, world, b["ground_half_extent"], friction, restitution);

  double radius = 0.0;
  for (const PileAsset& a : library)
    for (const Vec3& p : a.mesh.positions) radius = std::max(radius, p.norm());
  radius *= 1.05;
  const Vec3 lo = vec3(b, "spawn_min", "pile"), hi = vec3(b, "spawn_max", "pile");
  const int count = b["body_count"];
  const double sigma = c.raw["texture_sigma"];
  for (int i = 0; i < count; ++i) {
    const auto id = static_cast<std::uint32_t>(i + 2);
    Rng rng(hash_keys(seed, {0x50494C45ULL, static_cast<std::uint64_t>(i)}));
    const PileAsset& proto = library[rng.below(library.size())];
    const PileAsset variant = texture_variant(proto, sigma, hash_keys(seed, {0x54455854ULL, static_cast<std::uint64_t>(i)}));
    Pose spawn;
    spawn.orientation = random_rotation(rng);
    spawn.position = Vec3(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()),
                          lo.z() + radius + i * (2.0 * radius + 0.05) + rng.uniform(0.0, hi.z() - lo.z()));
    std::vector<Vec3> pts;
    pts.reserve(variant.mesh.positions.size());
    for (const Vec3& p : variant.mesh.positions) pts.push_back(spawn.apply(p));
    if (is_flat(pts)) thicken(pts);
    physics::RigidBody body = physics::body_from_world_hull(id, pts, density);
    body.friction = friction;
    body.restitution = restitution;
    world.bodies.push_back(body);

    Entity e;
    e.id = id;
    e.label = SemanticLabel::Object;
    e.mesh = std::make_shared<TriMesh>(transformed(variant.mesh, body.pose.inverse() * spawn));
    e.material = std::make_shared<assets::Material>(variant.material);
    e.track.position = anim::Track<Vec3>(body.pose.position);
    e.track.rotation = anim::Track<Quat>(body.pose.orientation);
    s.entities.push_back(std::move(e));
  }
  const auto traj = physics::simulate(world, sim_duration(s), s.timeline.frame_rate, b["substeps"]);
  s = bake_trajectory(s, traj);
  add_cameras(s, c, Vec3(0.0, -3.2, 1.6), Vec3(0.0, 0.0, 0.3));
  return s;
}

Scene build_fracture(const JobConfig& c, std::uint64_t seed)
{
  const json& b = c.raw["recipe"]["fracture"];
  Scene s = base_scene(c, seed);
  physics::World world;
  world.fields.push_back(physics::ForceField::gravity(Vec3(0, 0, -9.81)));
  const double friction = b["friction"];
  add_ground(s, world, 5.0, friction, 0.1);

  const std::string target = b["target"];
  TriMesh mesh;
  if (target == "builtin:box")
    mesh = make_box(Vec3::Constant(0.35));
  else if (target == "builtin:prism")
    mesh = make_cylinder(0.35, 0.35, 6);
  else
    mesh = assets::load_obj(resolve(c, target));
  if (!is_convex(mesh)) throw Error(ErrorCode::NonConvexInput, "fracture target " + target + " is not convex");

  // Only the normal map varies per scene: displacing the target would break its convexity.
  auto material = std::make_shared<assets::Material>();
  material->base_color = Vec3::Ones();
  material->albedo_texture = assets::checker_texture(64, 4, Vec3(0.75, 0.55, 0.40), Vec3(0.55, 0.38, 0.28));
  Image flat(32, 32, 3);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      flat.at(x, y, 0) = 0.5f;
      flat.at(x, y, 1) = 0.5f;
      flat.at(x, y, 2) = 1.0f;
    }
  const double sigma = c.raw["texture_sigma"];
  material->normal_map = sigma > 0.0 ? assets::perturb_map(flat, sigma, hash_keys(seed, {3})) : flat;
  material->normal_strength = 1.0;

  const Aabb bounds = mesh_bounds(mesh);
  const Pose place{Vec3(0, 0, -bounds.min.z() + 1e-3), Quat::Identity()};
  std::vector<Vec3> pts;
  for (const Vec3& p : mesh.positions) pts.push_back(place.apply(p));
  physics::RigidBody parent = physics::body_from_world_hull(2, pts, b["density"].get<double>());
  parent.friction = friction;
  parent.restitution = 0.1;
  world.bodies.push_back(parent);
  Entity pe;
  pe.id = 2;
  pe.mesh = std::make_shared<TriMesh>(transformed(mesh, parent.pose.inverse() * place));
  pe.material = material;
  pe.track.position = anim::Track<Vec3>(parent.pose.position);
  s.entities.push_back(pe);

  const json& pj = b["projectile"];
  const double radius = pj["radius"], speed = pj["speed"], distance = pj["distance"];
  physics::RigidBody proj;
  proj.id = 3;
  proj.shape = physics::CollisionShape::sphere(radius);
  physics::set_mass_from_density(proj, pj["density"].get<double>());
  const Vec3 aim = parent.pose.position;
  Rng rng(hash_keys(seed, {0x50524F4AULL}));
  const double heading = rng.uniform(-0.5, 0.5);
  proj.pose.position = aim + distance * Vec3(std::sin(heading), -std::cos(heading), 0.0);
  const double flight = distance / speed;
  proj.linear_velocity = (aim - proj.pose.position).normalized() * speed + Vec3(0, 0, 0.5 * 9.81 * flight);
  proj.restitution = 0.1;
  proj.friction = friction;
  world.bodies.push_back(proj);
  Entity pr;
  pr.id = 3;
  pr.label = SemanticLabel::Projectile;
  pr.mesh = std::make_shared<TriMesh>(make_uv_sphere(radius, 16, 8));
  pr.material = flat_material(Vec3(0.8, 0.1, 0.1));
  pr.track.position = anim::Track<Vec3>(proj.pose.position);
  s.entities.push_back(pr);

  std::map<std::uint32_t, fracture::FractureSpec> specs;
  fracture::FractureSpec spec;
  spec.fragment_count = b["fragments"];
  spec.seed = hash_keys(seed, {0x46524143ULL});
  spec.impulse_threshold = b["threshold"];
  spec.density = b["density"];
  specs[2] = spec;
  std::uint32_t next_id = 4;
  std::vector<fracture::FractureEvent> events;
  const auto hook = [&](physics::World& w, const std::vector<physics::Contact>& contacts, double time) {
    for (auto& ev : fracture::apply_fracture_trigger(w, contacts, specs, next_id, time)) events.push_back(std::move(ev));
  };
  const auto traj = physics::simulate(world, sim_duration(s), s.timeline.frame_rate, b["substeps"], hook);
  for (const auto& ev : events) {
    if (Entity* parent_entity = s.find(ev.parent)) parent_entity->visible_until = ev.time;
    for (const auto& f : ev.fragments) {
      Entity e;
      e.id = f.id;
      e.label = SemanticLabel::Fragment;
      e.mesh = std::make_shared<TriMesh>(f.local_mesh);
      e.material = flat_material(Vec3(0.70, 0.50, 0.36));
      e.visible_from = ev.time;
      s.entities.push_back(std::move(e));
    }
  }
  s = bake_trajectory(s, traj);
  add_cameras(s, c, Vec3(2.2, -2.8, 1.5), Vec3(0.0, 0.0, 0.35));
  return s;
}

Scene build_city(const JobConfig& c, std::uint64_t seed)
{
  const json& b = c.raw["recipe"]["city"];
  Scene s = base_scene(c, seed);
  const osm::OsmDocument doc = osm::load_osm_file(resolve(c, b["osm"]));
  const osm::SemanticMap map = osm::build_semantic_map(doc, osm::document_centroid(doc));
  city::CityScene cs = city::generate_city(map, city::builtin_prop_library(), seed);
  const double density = b["prop_density"];
  const std::size_t first_prop = cs.meshes.size() - cs.placements.size();
  for (std::size_t k = 0; k < cs.meshes.size(); ++k) {
    if (k >= first_prop && density < 1.0 && !(Rng(hash_keys(seed, {0xC17ULL, k})).uniform() < density)) continue;
    city::CityMesh& m = cs.meshes[k];
    Entity e;
    e.id = m.instance_id;
    e.label = m.label;
    e.mesh = std::make_shared<TriMesh>(std::move(m.mesh));
    e.material = flat_material(label_color(m.label));
    s.entities.push_back(std::move(e));
  }
  // Elevated oblique view of the buildings and props, drifting along +x for a fly-through.
  Aabb content;
  for (const Entity& e : s.entities)
    if (e.label == SemanticLabel::Building || static_cast<int>(e.label) >= static_cast<int>(SemanticLabel::TrafficLight))
      content.extend(mesh_bounds(*e.mesh));
  if (content.empty()) content = cs.bounds;
  const Vec3 center = content.center();
  const Vec3 ext = content.extent();
  const double span = std::max({ext.x(), ext.y(), 10.0});
  const Vec3 eye = Vec3(center.x(), center.y(), 0.0) + Vec3(-0.25 * span, -0.7 * span, 0.5 * span + 3.0);
  const Vec3 target(center.x(), center.y(), 0.0);
  add_cameras(s, c, eye, target);
  const double drift = b["flythrough"];
  const json& cams = c.raw["cameras"];
  for (std::size_t i = 0; i < s.cameras.size(); ++i) {
    if (cams[i].contains("position") || drift == 0.0) continue;
    s.cameras[i].extrinsics.position =
        anim::Track<Vec3>::linear({{0.0, eye}, {s.timeline.duration(), eye + Vec3(drift, 0.0, 0.0)}});
  }
  return s;
}

}  // namespace

Scene build_scene(const JobConfig& config, int index)
{
  const std::uint64_t seed = scene_seed(config.seed(), index);
  Scene s;
  switch (config.recipe()) {
    case Recipe::City: s = build_city(config, seed); break;
    case Recipe::Pile: s = build_pile(config, seed); break;
    case Recipe::Fracture: s = build_fracture(config, seed); break;
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------------------------
// Generation

int write_scene(const Scene& scene, const JobConfig& config, const fs::path& root, const std::string& scene_dir,
                std::uint64_t seed, int render_threads)
{
  const json& t = config.raw["timeline"];
  const json& r = config.raw["render"];
  RenderSettings settings;
  settings.lens_samples = r["lens_samples"];
  settings.time_samples = r["time_samples"];
  settings.threads = render_threads;
  const int n = t["event_supersample"];
  const double tau = t["event_threshold"], noise = t["event_noise"];
  int files = 0;
  for (std::size_t ci = 0; ci < scene.cameras.size(); ++ci) {
    const CameraRig& rig = scene.cameras[ci];
    const std::string dir = ci == 0 ? scene_dir : scene_dir + "_" + rig.id;
    std::vector<EventFrame> events;
    if (n > 0) {
      const Scene fine = supersample_timeline(scene, n);
      const CameraRig& fine_rig = fine.cameras[ci];
      const auto intensity = [&](int j) {
        const auto key = hash_keys(seed, {0xE7E7ULL, ci, static_cast<std::uint64_t>(j)});
        return linear_intensity(render_rgb(fine, fine_rig, fine.timeline.frame_time(j), settings, key));
      };
      Image prev = intensity(0);
      for (int k = 0; k < scene.timeline.frame_count; ++k) {
        std::vector<EventFrame> sub;
        for (int i = 0; i < n; ++i) {
          const int j = k * n + i;
          Image next = intensity(j + 1);
          EventFrame e = events_from_pair(prev, next, tau, noise, hash_keys(seed, {0xEEULL, ci, static_cast<std::uint64_t>(j)}));
          e.t_start = fine.timeline.frame_time(j);
          e.t_end = fine.timeline.frame_time(j + 1);
          sub.push_back(std::move(e));
          prev = std::move(next);
        }
        events.push_back(accumulate_events(sub));
      }
    }
    for (int f = 0; f < scene.timeline.frame_count; ++f) {
      AnnotationFrame frame = render_frame(scene, rig, f, settings);
      if (n > 0) {
        frame.event_frame = events[f].polarity;
        frame.metadata.events = events[f];
        frame.metadata.events->polarity = {};
      }
      files += static_cast<int>(write_frame_bundle(frame, root, dir).size());
    }
  }
  return files;
}

int GenerateReport::succeeded() const
{
  return static_cast<int>(std::count_if(scenes.begin(), scenes.end(), [](const SceneResult& r) { return r.ok; }));
}

int GenerateReport::failed() const { return static_cast<int>(scenes.size()) - succeeded(); }

namespace {

json result_json(const SceneResult& r)
{
  json j = {{"index", r.index}, {"id", r.id}, {"seed", r.seed}, {"status", r.ok ? "ok" : "failed"}, {"frames", r.frames}, {"files", r.files}};
  if (!r.ok) j["error"] = r.error;
  return j;
}

void write_manifest(const fs::path& root, const JobConfig& c, const std::string& hash, std::vector<SceneResult> results)
{
  std::sort(results.begin(), results.end(), [](const SceneResult& a, const SceneResult& b) { return a.index < b.index; });
  json m;
  m["schema"] = kManifestSchema;
  m["config_hash"] = hash;
  m["config"] = c.raw;
  m["scenes"] = json::array();
  int ok = 0;
  for (const SceneResult& r : results) {
    m["scenes"].push_back(result_json(r));
    ok += r.ok;
  }
  m["succeeded"] = ok;
  m["failed"] = static_cast<int>(results.size()) - ok;
  const fs::path tmp = root / "manifest.json.tmp";
  write_file_bytes(tmp, m.dump(2) + "\n");
  std::error_code ec;
  fs::rename(tmp, root / "manifest.json", ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot write " + (root / "manifest.json").string() + ": " + ec.message());
}

int worker_count(int requested, int scenes)
{
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("WORLDFORGE_THREADS")) n = std::atoi(env);
  }
  n = resolve_threads(n);
  return std::max(1, std::min(n, scenes));
}

}  // namespace

GenerateReport run_generate(const JobConfig& config, const GenerateOptions& options)
{
  validate_config(config);
  const fs::path root = config.output_root();
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec || !fs::is_directory(root)) throw Error(ErrorCode::IoError, "cannot create output directory " + root.string());
  const std::string hash = config_hash(config.raw);
  const int count = config.scene_count();

  std::map<int, SceneResult> done;
  if (options.resume && fs::exists(root / "manifest.json")) {
    try {
      const json old = json::parse(read_file_bytes(root / "manifest.json"));
      if (old.value("config_hash", std::string()) == hash)
        for (const json& e : old.at("scenes"))
          if (e.at("status") == "ok") {
            SceneResult r;
            r.index = e.at("index");
            r.id = e.at("id");
            r.seed = e.at("seed");
            r.ok = true;
            r.skipped = true;
            r.frames = e.at("frames");
            r.files = e.at("files");
            if (fs::is_directory(root / r.id)) done[r.index] = r;
          }
    } catch (const std::exception&) {
      done.clear();  // unreadable manifest: regenerate everything
    }
  }

  std::vector<int> todo;
  for (int i = 0; i < count; ++i)
    if (!done.count(i)) todo.push_back(i);
  const int workers = worker_count(options.workers, std::max<int>(1, static_cast<int>(todo.size())));
  const int render_threads = std::max(1, resolve_threads(0) / workers);

  std::mutex mu;
  std::vector<SceneResult> results;
  for (const auto& [i, r] : done) results.push_back(r);
  std::atomic<std::size_t> next{0};
  std::exception_ptr io_failure;
  auto work = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= todo.size()) return;
      SceneResult r;
      r.index = todo[k];
      r.id = scene_id(r.index);
      r.seed = scene_seed(config.seed(), r.index);
      try {
        const JobConfig sc = config.for_scene(r.index);
        validate_scene_block(sc, true);
        const Scene scene = build_scene(sc, r.index);
        r.frames = scene.timeline.frame_count;
        r.files = write_scene(scene, sc, root, r.id, r.seed, render_threads);
        r.ok = true;
      } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
        std::error_code rm;
        fs::remove_all(root / r.id, rm);
        for (const auto& entry : fs::directory_iterator(root, rm))
          if (entry.path().filename().string().rfind(r.id + "_", 0) == 0) fs::remove_all(entry.path(), rm);
      }
      std::lock_guard<std::mutex> lock(mu);
      results.push_back(r);
      try {
        write_manifest(root, config, hash, results);
      } catch (...) {
        if (!io_failure) io_failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  write_manifest(root, config, hash, results);
  if (io_failure) std::rethrow_exception(io_failure);
  std::sort(results.begin(), results.end(), [](const SceneResult& a, const SceneResult& b) { return a.index < b.index; });
  return GenerateReport{results};
}

// ---------------------------------------------------------------------------------------------
// Evaluation

json EvalReport::to_json() const
{
  json j;
  j["frames"] = json::array();
  for (const FrameEpe& f : frames) j["frames"].push_back({{"index", f.index}, {"epe", f.epe}});
  j["mean_epe"] = mean;
  return j;
}

EvalReport run_eval(const fs::path& pred_dir, const fs::path& gt_dir)
{
  auto flow_dir = [](const fs::path& d) {
    if (!fs::is_directory(d)) throw Error(ErrorCode::FileNotFound, "directory not found: " + d.string());
    return fs::is_directory(d / "flow") ? d / "flow" : d;
  };
  const fs::path gt = flow_dir(gt_dir), pred = flow_dir(pred_dir);
  static const std::regex name(R"((\d{6})\.flo)");
  std::vector<std::pair<int, fs::path>> items;
  for (const auto& e : fs::directory_iterator(gt)) {
    std::smatch m;
    const std::string f = e.path().filename().string();
    if (std::regex_match(f, m, name)) items.emplace_back(std::stoi(m[1]), e.path());
  }
  if (items.empty()) throw Error(ErrorCode::EmptyInput, "no .flo files under " + gt.string());
  std::sort(items.begin(), items.end());
  EvalReport report;
  double sum = 0.0;
  std::size_t pixels = 0;
  for (const auto& [index, path] : items) {
    const fs::path p = pred / path.filename();
    if (!fs::exists(p)) throw Error(ErrorCode::MissingPair, "missing prediction for frame " + path.stem().string());
    const EpeResult r = epe(read_flo(p), read_flo(path));
    report.frames.push_back({index, r.mean});
    sum += r.mean * static_cast<double>(r.counted);
    pixels += r.counted;
  }
  report.mean = pixels ? sum / static_cast<double>(pixels) : 0.0;
  return report;
}

}  // namespace worldforge::pipeline
