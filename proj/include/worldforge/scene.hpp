#pragma once

#include "worldforge/assets.hpp"
#include "worldforge/camera.hpp"
#include "worldforge/dynamics.hpp"
#include "worldforge/semantics.hpp"
#include "worldforge/track.hpp"

#include "json.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace worldforge {

enum class Lighting { Midday, Sunset, Night };
enum class Weather { Clear, Cloudy, Rain, Fog };

std::string to_string(Lighting l);
std::string to_string(Weather w);
Lighting lighting_from_string(const std::string& s);
Weather weather_from_string(const std::string& s);

struct WeatherState {
  Lighting lighting = Lighting::Midday;
  Weather weather = Weather::Clear;
  double fog_density = 0.0;     // 1/m
  double rain_intensity = 0.0;  // [0, 1]
};

struct Light {
  enum class Kind { Sun, Point, Ambient } kind = Kind::Sun;
  Vec3 direction = Vec3(0, 0, -1);  // Sun: unit direction the light travels
  double irradiance = 1.0;          // Sun
  double color_temperature = 5800.0;
  Vec3 position = Vec3::Zero();  // Point
  double power = 0.0;            // Point
  Vec3 color = Vec3::Ones();     // Point
  Vec3 radiance = Vec3::Zero();  // Ambient

  static Light sun(const Vec3& direction, double irradiance, double kelvin);
  static Light point(const Vec3& position, double power, const Vec3& color);
  static Light ambient(const Vec3& radiance);
};

struct Entity {
  std::uint32_t id = 0;
  std::shared_ptr<const TriMesh> mesh;  // body frame
  std::shared_ptr<const assets::Material> material;
  SemanticLabel label = SemanticLabel::Object;
  anim::PoseTrack track;
  bool physics_driven = false;
  // The entity exists for visible_from <= t < visible_until.
  double visible_from = -kInf;
  double visible_until = kInf;

  bool visible_at(double t) const { return t >= visible_from && t < visible_until; }
};

struct Timeline {
  double frame_rate = 24.0;
  int frame_count = 24;
  int supersample = 1;

  double frame_time(int frame) const { return static_cast<double>(frame) / frame_rate; }
  double duration() const { return static_cast<double>(frame_count) / frame_rate; }
};

struct Scene {
  std::vector<Entity> entities;
  std::vector<Light> lights;
  std::vector<CameraRig> cameras;
  Timeline timeline;
  WeatherState weather;
  std::uint64_t seed = 0;

  Entity* find(std::uint32_t id);
  const Entity* find(std::uint32_t id) const;
  // Unique ids in [1, 65535], positive frame rate, supersample >= 1, valid cameras.
  void validate() const;
};

// Physics poses become Linear tracks keyed at the trajectory frame times.
// Throws UnknownEntity for a body id without a scene entity.
Scene bake_trajectory(const Scene& scene, const physics::Trajectory& trajectory);

// Multiplies frame count and rate by n and re-keys animated tracks on the finer grid (keeping the
// original keys). n == 1 returns the scene unchanged.
Scene supersample_timeline(const Scene& scene, int n);

// JSON loaders; relative mesh/material paths resolve against base_dir.
anim::Track<double> scalar_track_from_json(const nlohmann::json& j);
anim::Track<Vec3> vec3_track_from_json(const nlohmann::json& j);
anim::Track<Quat> quat_track_from_json(const nlohmann::json& j);
CameraRig camera_from_json(const nlohmann::json& j);
Scene scene_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
Scene load_scene(const std::filesystem::path& path);

// Mesh generators usable from scene files: box, sphere, cylinder, cone, torus, quad.
TriMesh generate_mesh(const nlohmann::json& spec);

}  // namespace worldforge
