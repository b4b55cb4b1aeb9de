#pragma once

#include "worldforge/camera.hpp"
#include "worldforge/events.hpp"
#include "worldforge/image.hpp"
#include "worldforge/scene.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace worldforge {

// ---------------------------------------------------------------------------------------------
// Scene geometry frozen at one instant

struct WorldTriangle {
  Vec3 a, b, c;
  int entity = -1;  // index into PosedScene::entities
  int triangle = -1;
};

struct RayHit {
  double t = kInf;
  int entity = -1;
  int triangle = -1;
  double u = 0.0, v = 0.0;  // barycentrics of b and c
};

class Bvh {
 public:
  Bvh() = default;
  explicit Bvh(std::vector<WorldTriangle> triangles);

  std::optional<RayHit> intersect(const Vec3& origin, const Vec3& direction, double t_max = kInf) const;
  bool occluded(const Vec3& origin, const Vec3& direction, double t_max) const;
  const std::vector<WorldTriangle>& triangles() const { return tris_; }

 private:
  struct Node {
    Aabb box;
    int left = -1, right = -1;  // children; -1 for leaves
    int first = 0, count = 0;
  };
  int build(int first, int count, int depth);
  std::vector<WorldTriangle> tris_;
  std::vector<Node> nodes_;
};

struct PosedEntity {
  const Entity* entity = nullptr;
  Pose pose;
};

struct PosedScene {
  double time = 0.0;
  std::vector<PosedEntity> entities;  // visible entities only
  Bvh bvh;
};

PosedScene pose_scene(const Scene& scene, double t);

// A camera frozen at one instant.
struct View {
  Pose world_from_camera;
  Intrinsics intrinsics;
};

View view_at(const CameraRig& rig, double t);

// ---------------------------------------------------------------------------------------------
// G-buffer

struct GSample {
  float depth = std::numeric_limits<float>::infinity();  // camera z (pinhole) or range (others)
  double range = kInf;                                    // distance from the eye along the ray
  Vec3 position = Vec3::Zero();                           // world
  Vec3 normal = Vec3::Zero();                             // world, facing the camera
  Vec2 uv = Vec2::Zero();
  std::uint32_t instance = 0;
  std::uint16_t semantic = 0;
  int entity = -1;  // index into PosedScene::entities
  int triangle = -1;
  Vec3 bary = Vec3::Zero();

  bool covered() const { return entity >= 0; }
};

struct GBuffer {
  int width = 0;
  int height = 0;
  std::vector<GSample> samples;

  GSample& at(int x, int y) { return samples[static_cast<std::size_t>(y) * width + x]; }
  const GSample& at(int x, int y) const { return samples[static_cast<std::size_t>(y) * width + x]; }
};

// Undistorted pinhole views are rasterized (perspective-correct barycentrics, z-buffer); all other
// views cast one ray per pixel center against the BVH.
GBuffer rasterize(const PosedScene& scene, const View& view, int threads = 0);
GBuffer raycast_gbuffer(const PosedScene& scene, const View& view, int threads = 0);

// ---------------------------------------------------------------------------------------------
// Shading

// Luminance-normalized linear RGB of a blackbody, tabulated at 100 K steps over [1000, 12000] K.
Vec3 blackbody_rgb(double kelvin);

// Lights implied by the lighting preset (used when a scene lists none), with the overcast scaling
// for Cloudy and Rain applied. Night adds a point light above every street light.
std::vector<Light> resolve_lights(const Scene& scene, const PosedScene& posed);

Vec3 sky_color(const WeatherState& weather);
Vec3 fog_color(const WeatherState& weather);
// 1 - exp(-beta * distance)
double fog_factor(double beta, double distance);

// Linear radiance of one surface sample (no fog).
Vec3 shade_sample(const GSample& g, const PosedScene& scene, const std::vector<Light>& lights,
                  const WeatherState& weather, const Vec3& eye);

// Linear radiance per pixel including fog and rain streaks.
Image shade(const GBuffer& g, const PosedScene& scene, const std::vector<Light>& lights, const WeatherState& weather,
            const Vec3& eye, std::uint64_t rain_seed);

void apply_rain(Image& linear, double intensity, std::uint64_t seed);

// Clamp to [0, 1] then gamma 1/2.2.
Image tone_map(const Image& linear);

// ---------------------------------------------------------------------------------------------
// Annotation passes

// Forward flow in pixels from the G-buffer rasterized at t to the configuration at t_next.
FlowMap compute_flow(const Scene& scene, const PosedScene& posed_t, const View& view_t, const View& view_next,
                     double t_next, const GBuffer& gbuffer_t);

// Stereo anaglyph: R = luma(left), G = B = luma(right).
Image anaglyph(const Image& left, const Image& right);

inline double luma(double r, double g, double b) { return 0.2126 * r + 0.7152 * g + 0.0722 * b; }

struct FrameMeta {
  int frame_number = 0;
  double time = 0.0;
  std::string camera_id;
  Mat3 K = Mat3::Identity();
  std::array<double, 3> distortion{0.0, 0.0, 0.0};  // k1, k2, chromatic alpha
  Mat4 world_from_camera = Mat4::Identity();
  ProjectionModel projection_model = ProjectionModel::Pinhole;
  double stereo_baseline = 0.0;
  Lighting lighting = Lighting::Midday;
  Weather weather = Weather::Clear;
  std::uint64_t seed = 0;
  // Event sidecar, present when the frame carries events.
  std::optional<EventFrame> events;
};

struct AnnotationFrame {
  Image rgb;
  DepthMap depth;
  FlowMap flow;
  Image normals;  // camera frame
  InstanceMap instance_seg;
  SemanticMapImage semantic_seg;
  std::optional<PolarityMap> event_frame;
  std::optional<Image> stereo_right_rgb;
  FrameMeta metadata;
};

struct RenderSettings {
  int lens_samples = 1;  // per axis of the stratified lens grid
  int time_samples = 1;
  int threads = 0;  // 0: hardware concurrency
};

// RGB only: S_lens^2 x S_time stratified samples over the lens and the shutter window centered on t.
// Without aperture, motion or chromatic aberration this is tone_map(shade(G-buffer)) exactly.
Image render_rgb(const Scene& scene, const CameraRig& rig, double t, const RenderSettings& settings,
                 std::uint64_t sample_seed, bool right_eye = false);

AnnotationFrame render_frame(const Scene& scene, const CameraRig& rig, int frame, const RenderSettings& settings = {});

}  // namespace worldforge
