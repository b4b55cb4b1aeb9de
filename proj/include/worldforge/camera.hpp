#pragma once

#include "worldforge/math.hpp"
#include "worldforge/track.hpp"

#include <optional>
#include <string>
#include <utility>

namespace worldforge {

// Camera frame: +z forward, +x right, +y down. Pixel (0, 0) is the top-left corner of the image;
// pixel centers sit at half-integers.
enum class ProjectionModel { Pinhole, FisheyeEquidistant, Equirectangular };

std::string to_string(ProjectionModel m);
ProjectionModel projection_model_from_string(const std::string& s);

enum class Channel { R = 0, G = 1, B = 2 };

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();  // unit
};

// Lens parameters frozen at one instant.
struct Intrinsics {
  ProjectionModel model = ProjectionModel::Pinhole;
  double focal = 100.0;  // px
  Vec2 principal = Vec2(64, 64);
  int width = 128;
  int height = 128;
  double k1 = 0.0;
  double k2 = 0.0;
  double chromatic_alpha = 0.0;
  double aperture_radius = 0.0;  // m
  double focus_distance = 1.0;   // m

  bool has_distortion() const { return k1 != 0.0 || k2 != 0.0; }
  Mat3 K() const;
};

struct CameraRig {
  std::string id = "cam0";
  ProjectionModel model = ProjectionModel::Pinhole;
  anim::Track<double> focal_length{100.0};
  Vec2 principal_point = Vec2(64, 64);
  int width = 128;
  int height = 128;
  double k1 = 0.0;
  double k2 = 0.0;
  double chromatic_alpha = 0.0;
  anim::Track<double> aperture_radius{0.0};
  anim::Track<double> focus_distance{1.0};
  anim::PoseTrack extrinsics;  // world_from_camera
  anim::Track<double> stereo_baseline{0.0};
  double shutter_time = 0.0;  // s

  Intrinsics intrinsics_at(double t) const;
  Pose pose_at(double t) const { return extrinsics.eval(t); }
  // Throws Validation for non-positive sizes, focal lengths, or negative apertures at any key.
  void validate() const;
};

// Ideal projection followed by radial distortion (pinhole). None behind a pinhole camera or at the
// camera center.
std::optional<Vec2> project(const Intrinsics& intr, const Vec3& p_cam);
// Unit camera-frame direction of the primary ray through a pixel position (undistorted). None for
// fisheye pixels beyond a full hemisphere-and-back (theta > pi).
std::optional<Vec3> pixel_direction(const Intrinsics& intr, const Vec2& pixel);
// Camera-frame point at z-depth (pinhole) or range (other models) along the pixel's ray.
std::optional<Vec3> unproject(const Intrinsics& intr, const Vec2& pixel, double depth);

// Radial polynomial in normalized coordinates (relative to the principal point, focal units).
Vec2 distort(double k1, double k2, const Vec2& p);
// Damped Newton inverse of distort; NewtonDiverged outside |k1| <= 0.5, |k2| <= 0.2 or on failure.
Vec2 undistort(double k1, double k2, const Vec2& p);

// Transverse chromatic aberration: R scales by 1 + alpha, B by 1 - alpha.
Vec2 chromatic_offset(double alpha, const Vec2& p, Channel channel);

// Thin-lens camera-frame ray: the pinhole ray is intersected with the focus plane z = focus and
// the origin moved to lens_sample * aperture on the lens plane.
Ray thin_lens_ray(const Intrinsics& intr, const Vec2& pixel, const Vec2& lens_sample);

// Left and right world_from_camera poses; right = left shifted by +baseline along camera +x.
std::pair<Pose, Pose> stereo_pair(const CameraRig& rig, double t);

// Uniform point on the unit disk from two [0,1) numbers (concentric mapping).
Vec2 concentric_disk(double a, double b);

}  // namespace worldforge
