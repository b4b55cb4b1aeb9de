#include "worldforge/scene.hpp"

#include "worldforge/error.hpp"

#include <fstream>
#include <set>

namespace worldforge {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(Lighting l)
{
  switch (l) {
    case Lighting::Midday: return "midday";
    case Lighting::Sunset: return "sunset";
    case Lighting::Night: return "night";
  }
  return "midday";
}

std::string to_string(Weather w)
{
  switch (w) {
    case Weather::Clear: return "clear";
    case Weather::Cloudy: return "cloudy";
    case Weather::Rain: return "rain";
    case Weather::Fog: return "fog";
  }
  return "clear";
}

Lighting lighting_from_string(const std::string& s)
{
  if (s == "midday") return Lighting::Midday;
  if (s == "sunset") return Lighting::Sunset;
  if (s == "night") return Lighting::Night;
  throw Error(ErrorCode::Validation, "unknown lighting preset '" + s + "'");
}

Weather weather_from_string(const std::string& s)
{
  if (s == "clear") return Weather::Clear;
  if (s == "cloudy") return Weather::Cloudy;
  if (s == "rain") return Weather::Rain;
  if (s == "fog") return Weather::Fog;
  throw Error(ErrorCode::Validation, "unknown weather '" + s + "'");
}

Light Light::sun(const Vec3& direction, double irradiance, double kelvin)
{
  Light l;
  l.kind = Kind::Sun;
  l.direction = direction.normalized();
  l.irradiance = irradiance;
  l.color_temperature = kelvin;
  return l;
}

Light Light::point(const Vec3& position, double power, const Vec3& color)
{
  Light l;
  l.kind = Kind::Point;
  l.position = position;
  l.power = power;
  l.color = color;
  return l;
}

Light Light::ambient(const Vec3& radiance)
{
  Light l;
  l.kind = Kind::Ambient;
  l.radiance = radiance;
  return l;
}

Entity* Scene::find(std::uint32_t id)
{
  for (auto& e : entities)
    if (e.id == id) return &e;
  return nullptr;
}

const Entity* Scene::find(std::uint32_t id) const
{
  for (const auto& e : entities)
    if (e.id == id) return &e;
  return nullptr;
}

void Scene::validate() const
{
  std::set<std::uint32_t> ids;
  for (const Entity& e : entities) {
    if (e.id == 0 || e.id > 65535)
      throw Error(ErrorCode::Validation, "instance id " + std::to_string(e.id) + " outside [1, 65535]");
    if (!ids.insert(e.id).second) throw Error(ErrorCode::Validation, "duplicate instance id " + std::to_string(e.id));
    if (!e.mesh) throw Error(ErrorCode::Validation, "entity " + std::to_string(e.id) + " has no mesh");
  }
  if (!(timeline.frame_rate > 0.0)) throw Error(ErrorCode::Validation, "frame rate must be positive");
  if (timeline.frame_count < 1) throw Error(ErrorCode::Validation, "frame count must be at least 1");
  if (timeline.supersample < 1) throw Error(ErrorCode::Validation, "supersample must be at least 1");
  if (!(weather.fog_density >= 0.0)) throw Error(ErrorCode::Validation, "fog density must be non-negative");
  if (!(weather.rain_intensity >= 0.0 && weather.rain_intensity <= 1.0))
    throw Error(ErrorCode::Validation, "rain intensity must be in [0, 1]");
  for (const CameraRig& c : cameras) c.validate();
}

Scene bake_trajectory(const Scene& scene, const physics::Trajectory& trajectory)
{
  Scene out = scene;
  std::map<std::uint32_t, std::vector<anim::Key<Vec3>>> pos;
  std::map<std::uint32_t, std::vector<anim::Key<Quat>>> rot;
  for (const auto& frame : trajectory.frames) {
    for (const auto& b : frame.bodies) {
      if (!out.find(b.id)) throw Error(ErrorCode::UnknownEntity, "trajectory body " + std::to_string(b.id) + " has no scene entity");
      pos[b.id].push_back(anim::Key<Vec3>{frame.time, b.position});
      rot[b.id].push_back(anim::Key<Quat>{frame.time, b.orientation});
    }
  }
  for (auto& [id, keys] : pos) {
    Entity* e = out.find(id);
    e->track.position = anim::Track<Vec3>(std::move(keys));
    e->track.rotation = anim::Track<Quat>(std::move(rot[id]));
    e->physics_driven = true;
  }
  return out;
}

namespace {

template <typename T>
anim::Track<T> rekey(const anim::Track<T>& track, double rate)
{
  if (track.keys().size() < 2) return track;
  const double t0 = track.keys().front().time, t1 = track.keys().back().time;
  std::vector<double> times;
  for (const auto& k : track.keys()) times.push_back(k.time);
  const auto j0 = static_cast<long>(std::ceil(t0 * rate)), j1 = static_cast<long>(std::floor(t1 * rate));
  for (long j = j0; j <= j1; ++j) {
    const double t = static_cast<double>(j) / rate;
    bool near_key = false;
    for (const auto& k : track.keys()) near_key = near_key || std::abs(k.time - t) <= 1e-12 * std::max(1.0, std::abs(t));
    if (!near_key && t > t0 && t < t1) times.push_back(t);
  }
  std::sort(times.begin(), times.end());
  std::vector<anim::Key<T>> keys;
  keys.reserve(times.size());
  for (double t : times) keys.push_back(anim::Key<T>{t, track.eval(t)});
  return anim::Track<T>(std::move(keys));
}

anim::PoseTrack rekey(const anim::PoseTrack& p, double rate)
{
  anim::PoseTrack out;
  out.position = rekey(p.position, rate);
  out.rotation = rekey(p.rotation, rate);
  return out;
}

}  // namespace

Scene supersample_timeline(const Scene& scene, int n)
{
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "supersample factor must be at least 1");
  if (n == 1) return scene;
  Scene out = scene;
  out.timeline.frame_count *= n;
  out.timeline.frame_rate *= n;
  out.timeline.supersample *= n;
  const double rate = out.timeline.frame_rate;
  for (Entity& e : out.entities) e.track = rekey(e.track, rate);
  for (CameraRig& c : out.cameras) {
    c.focal_length = rekey(c.focal_length, rate);
    c.aperture_radius = rekey(c.aperture_radius, rate);
    c.focus_distance = rekey(c.focus_distance, rate);
    c.stereo_baseline = rekey(c.stereo_baseline, rate);
    c.extrinsics = rekey(c.extrinsics, rate);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// JSON

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::Validation, what); }

double number(const json& j, const std::string& what)
{
  if (!j.is_number()) invalid(what + " must be a number");
  return j.get<double>();
}

Vec3 vec3(const json& j, const std::string& what)
{
  if (!j.is_array() || j.size() != 3) invalid(what + " must be an array of 3 numbers");
  return Vec3(number(j[0], what), number(j[1], what), number(j[2], what));
}

Quat quat(const json& j, const std::string& what)
{
  if (j.is_object() && j.contains("axis")) {
    return Quat(Eigen::AngleAxisd(number(j.at("angle"), what + ".angle"), vec3(j.at("axis"), what + ".axis").normalized()));
  }
  if (!j.is_array() || j.size() != 4) invalid(what + " must be [w, x, y, z] or {axis, angle}");
  Quat q(number(j[0], what), number(j[1], what), number(j[2], what), number(j[3], what));
  if (q.norm() == 0.0) invalid(what + " must be non-zero");
  return q.normalized();
}

template <typename T, typename Parse>
anim::Track<T> track_from_json(const json& j, Parse parse, bool scalar_like, const std::string& what)
{
  const bool is_key_list = j.is_array() && !j.empty() && j[0].is_object() && j[0].contains("t");
  if (!is_key_list) return anim::Track<T>(parse(j));
  std::vector<anim::Key<T>> keys;
  for (const json& k : j) {
    anim::Key<T> key;
    key.time = number(k.at("t"), what + ".t");
    key.value = parse(k.at("value"));
    const std::string interp = k.value("interp", "linear");
    if (interp == "bezier")
      key.interp = anim::Interp::Bezier;
    else if (interp != "linear")
      invalid(what + ": unknown interpolation '" + interp + "'");
    key.out_dt = k.value("out_dt", 0.0);
    key.in_dt = k.value("in_dt", 0.0);
    if constexpr (!std::is_same_v<T, Quat>) {
      if (k.contains("out_dv")) key.out_dv = parse(k["out_dv"]);
      if (k.contains("in_dv")) key.in_dv = parse(k["in_dv"]);
    }
    (void)scalar_like;
    keys.push_back(key);
  }
  try {
    return anim::Track<T>(std::move(keys));
  } catch (const Error& e) {
    invalid(what + ": " + e.what());
  }
}

}  // namespace

anim::Track<double> scalar_track_from_json(const json& j)
{
  return track_from_json<double>(j, [](const json& v) { return number(v, "track value"); }, true, "scalar track");
}

anim::Track<Vec3> vec3_track_from_json(const json& j)
{
  return track_from_json<Vec3>(j, [](const json& v) { return vec3(v, "track value"); }, false, "vector track");
}

anim::Track<Quat> quat_track_from_json(const json& j)
{
  return track_from_json<Quat>(j, [](const json& v) { return quat(v, "rotation"); }, false, "rotation track");
}

CameraRig camera_from_json(const json& j)
{
  CameraRig c;
  try {
    c.id = j.value("id", std::string("cam0"));
    c.model = projection_model_from_string(j.value("model", std::string("pinhole")));
    if (j.contains("resolution")) {
      c.width = j.at("resolution").at(0).get<int>();
      c.height = j.at("resolution").at(1).get<int>();
    }
    c.principal_point = Vec2(0.5 * c.width, 0.5 * c.height);
    if (j.contains("principal_point")) c.principal_point = Vec2(j["principal_point"].at(0).get<double>(), j["principal_point"].at(1).get<double>());
    if (j.contains("focal_length")) c.focal_length = scalar_track_from_json(j["focal_length"]);
    if (j.contains("distortion")) {
      c.k1 = j["distortion"].at(0).get<double>();
      c.k2 = j["distortion"].at(1).get<double>();
    }
    c.chromatic_alpha = j.value("chromatic_alpha", 0.0);
    if (j.contains("aperture_radius")) c.aperture_radius = scalar_track_from_json(j["aperture_radius"]);
    if (j.contains("focus_distance")) c.focus_distance = scalar_track_from_json(j["focus_distance"]);
    if (j.contains("stereo_baseline")) c.stereo_baseline = scalar_track_from_json(j["stereo_baseline"]);
    c.shutter_time = j.value("shutter_time", 0.0);
    if (j.contains("position")) c.extrinsics.position = vec3_track_from_json(j["position"]);
    if (j.contains("look_at")) {
      if (!c.extrinsics.position.is_constant()) invalid("camera look_at needs a constant position");
      const Vec3 eye = c.extrinsics.position.eval(0.0);
      c.extrinsics.rotation = anim::Track<Quat>(look_rotation(eye, vec3(j["look_at"], "look_at")));
    } else if (j.contains("rotation")) {
      c.extrinsics.rotation = quat_track_from_json(j["rotation"]);
    }
  } catch (const json::exception& e) {
    invalid(std::string("camera: ") + e.what());
  }
  c.validate();
  return c;
}

TriMesh generate_mesh(const json& spec)
{
  const std::string gen = spec.value("generator", std::string());
  if (gen == "box") return make_box(vec3(spec.value("half_extents", json::array({0.5, 0.5, 0.5})), "half_extents"));
  if (gen == "sphere") return make_uv_sphere(spec.value("radius", 0.5), spec.value("segments", 24), spec.value("rings", 12));
  if (gen == "cylinder") return make_cylinder(spec.value("radius", 0.5), spec.value("half_height", 0.5), spec.value("segments", 24));
  if (gen == "cone") return make_cone(spec.value("radius", 0.5), spec.value("height", 1.0), spec.value("segments", 16));
  if (gen == "torus") return make_torus(spec.value("major_radius", 1.0), spec.value("minor_radius", 0.25));
  if (gen == "quad") return make_quad(spec.value("half_x", 0.5), spec.value("half_y", 0.5));
  invalid("unknown mesh generator '" + gen + "'");
}

Scene scene_from_json(const json& j, const fs::path& base_dir)
{
  Scene s;
  try {
    if (j.contains("timeline")) {
      const json& t = j["timeline"];
      s.timeline.frame_rate = t.value("frame_rate", 24.0);
      s.timeline.frame_count = t.value("frame_count", 24);
      s.timeline.supersample = t.value("supersample", 1);
    }
    s.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("weather")) {
      const json& w = j["weather"];
      s.weather.lighting = lighting_from_string(w.value("lighting", std::string("midday")));
      s.weather.weather = weather_from_string(w.value("weather", std::string("clear")));
      s.weather.fog_density = w.value("fog_density", 0.0);
      s.weather.rain_intensity = w.value("rain_intensity", 0.0);
    }
    for (const json& e : j.value("entities", json::array())) {
      Entity ent;
      ent.id = e.at("id").get<std::uint32_t>();
      ent.label = semantic_label_from_string(e.value("label", std::string("object")));
      const json& m = e.at("mesh");
      auto material = std::make_shared<assets::Material>();
      if (m.contains("obj")) {
        std::string usemtl;
        ent.mesh = std::make_shared<TriMesh>(assets::load_obj(base_dir / m["obj"].get<std::string>(), &usemtl));
      } else {
        ent.mesh = std::make_shared<TriMesh>(generate_mesh(m));
      }
      if (e.contains("material")) {
        const json& mj = e["material"];
        if (mj.contains("mtl")) {
          const auto mats = assets::load_mtl(base_dir / mj["mtl"].get<std::string>());
          if (!mats.empty()) *material = mats.front();
          const std::string name = mj.value("name", std::string());
          for (const auto& mm : mats)
            if (mm.name == name) *material = mm;
        }
        if (mj.contains("base_color")) material->base_color = vec3(mj["base_color"], "base_color");
      }
      ent.material = material;
      if (e.contains("position")) ent.track.position = vec3_track_from_json(e["position"]);
      if (e.contains("rotation")) ent.track.rotation = quat_track_from_json(e["rotation"]);
      ent.visible_from = e.value("visible_from", -kInf);
      ent.visible_until = e.value("visible_until", kInf);
      s.entities.push_back(std::move(ent));
    }
    for (const json& l : j.value("lights", json::array())) {
      const std::string kind = l.at("kind").get<std::string>();
      if (kind == "sun")
        s.lights.push_back(Light::sun(vec3(l.at("direction"), "direction"), l.value("irradiance", 1.0), l.value("color_temperature", 5800.0)));
      else if (kind == "point")
        s.lights.push_back(Light::point(vec3(l.at("position"), "position"), l.at("power").get<double>(),
                                        vec3(l.value("color", json::array({1, 1, 1})), "color")));
      else if (kind == "ambient")
        s.lights.push_back(Light::ambient(vec3(l.at("radiance"), "radiance")));
      else
        invalid("unknown light kind '" + kind + "'");
    }
    for (const json& c : j.value("cameras", json::array())) s.cameras.push_back(camera_from_json(c));
  } catch (const json::exception& e) {
    invalid(std::string("scene: ") + e.what());
  }
  s.validate();
  return s;
}

Scene load_scene(const fs::path& path)
{
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    invalid(path.string() + ": " + e.what());
  }
  return scene_from_json(j, path.parent_path());
}

}  // namespace worldforge
