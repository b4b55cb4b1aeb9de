#include "worldforge/camera.hpp"

#include "worldforge/error.hpp"

namespace worldforge {

std::string to_string(ProjectionModel m)
{
  switch (m) {
    case ProjectionModel::Pinhole: return "pinhole";
    case ProjectionModel::FisheyeEquidistant: return "fisheye_equidistant";
    case ProjectionModel::Equirectangular: return "equirectangular";
  }
  return "pinhole";
}

ProjectionModel projection_model_from_string(const std::string& s)
{
  if (s == "pinhole") return ProjectionModel::Pinhole;
  if (s == "fisheye" || s == "fisheye_equidistant") return ProjectionModel::FisheyeEquidistant;
  if (s == "equirectangular") return ProjectionModel::Equirectangular;
  throw Error(ErrorCode::Validation, "unknown projection model '" + s + "'");
}

Mat3 Intrinsics::K() const
{
  Mat3 k = Mat3::Identity();
  k(0, 0) = focal;
  k(1, 1) = focal;
  k(0, 2) = principal.x();
  k(1, 2) = principal.y();
  return k;
}

Intrinsics CameraRig::intrinsics_at(double t) const
{
  Intrinsics in;
  in.model = model;
  in.focal = focal_length.eval(t);
  in.principal = principal_point;
  in.width = width;
  in.height = height;
  in.k1 = k1;
  in.k2 = k2;
  in.chromatic_alpha = chromatic_alpha;
  in.aperture_radius = aperture_radius.eval(t);
  in.focus_distance = focus_distance.eval(t);
  return in;
}

void CameraRig::validate() const
{
  auto fail = [this](const std::string& what) { throw Error(ErrorCode::Validation, "camera '" + id + "': " + what); };
  if (width < 1 || height < 1) fail("resolution must be at least 1x1");
  for (const auto& k : focal_length.keys())
    if (!(k.value > 0.0)) fail("focal length must be positive");
  for (const auto& k : aperture_radius.keys())
    if (!(k.value >= 0.0)) fail("aperture radius must be non-negative");
  for (const auto& k : focus_distance.keys())
    if (!(k.value > 0.0)) fail("focus distance must be positive");
  for (const auto& k : stereo_baseline.keys())
    if (!(k.value >= 0.0)) fail("stereo baseline must be non-negative");
  if (!(shutter_time >= 0.0)) fail("shutter time must be non-negative");
  if (std::abs(k1) > 0.5 || std::abs(k2) > 0.2) fail("distortion outside |k1| <= 0.5, |k2| <= 0.2");
}

std::optional<Vec2> project(const Intrinsics& intr, const Vec3& p)
{
  const double f = intr.focal;
  const Vec2& c = intr.principal;
  switch (intr.model) {
    case ProjectionModel::Pinhole: {
      if (!(p.z() > 0.0)) return std::nullopt;
      Vec2 n(p.x() / p.z(), p.y() / p.z());
      if (intr.has_distortion()) n = distort(intr.k1, intr.k2, n);
      return Vec2(f * n.x() + c.x(), f * n.y() + c.y());
    }
    case ProjectionModel::FisheyeEquidistant: {
      const double rho = std::hypot(p.x(), p.y());
      if (rho == 0.0 && p.z() <= 0.0) return std::nullopt;
      if (rho == 0.0) return c;
      const double theta = std::atan2(rho, p.z());
      const double r = f * theta;
      return Vec2(c.x() + r * p.x() / rho, c.y() + r * p.y() / rho);
    }
    case ProjectionModel::Equirectangular: {
      const double len = p.norm();
      if (len == 0.0) return std::nullopt;
      const double u = intr.width * (std::atan2(p.x(), p.z()) + kPi) / (2.0 * kPi);
      // Measured from camera "up" (-y) so the panorama is upright.
      const double v = intr.height * std::acos(std::clamp(-p.y() / len, -1.0, 1.0)) / kPi;
      return Vec2(u, v);
    }
  }
  return std::nullopt;
}

std::optional<Vec3> pixel_direction(const Intrinsics& intr, const Vec2& pixel)
{
  const double f = intr.focal;
  const Vec2& c = intr.principal;
  switch (intr.model) {
    case ProjectionModel::Pinhole: {
      Vec2 n((pixel.x() - c.x()) / f, (pixel.y() - c.y()) / f);
      if (intr.has_distortion()) n = undistort(intr.k1, intr.k2, n);
      return Vec3(n.x(), n.y(), 1.0).normalized();
    }
    case ProjectionModel::FisheyeEquidistant: {
      const Vec2 d = pixel - c;
      const double r = d.norm();
      const double theta = r / f;
      if (theta > kPi) return std::nullopt;
      if (r == 0.0) return Vec3::UnitZ();
      const double s = std::sin(theta);
      return Vec3(s * d.x() / r, s * d.y() / r, std::cos(theta));
    }
    case ProjectionModel::Equirectangular: {
      const double lon = pixel.x() / intr.width * 2.0 * kPi - kPi;
      const double polar = pixel.y() / intr.height * kPi;
      const double s = std::sin(polar);
      return Vec3(s * std::sin(lon), -std::cos(polar), s * std::cos(lon));
    }
  }
  return std::nullopt;
}

std::optional<Vec3> unproject(const Intrinsics& intr, const Vec2& pixel, double depth)
{
  const auto d = pixel_direction(intr, pixel);
  if (!d) return std::nullopt;
  if (intr.model == ProjectionModel::Pinhole) return *d * (depth / d->z());
  return *d * depth;
}

Vec2 distort(double k1, double k2, const Vec2& p)
{
  const double r2 = p.squaredNorm();
  return (1.0 + k1 * r2 + k2 * r2 * r2) * p;
}

Vec2 undistort(double k1, double k2, const Vec2& p)
{
  if (std::abs(k1) > 0.5 || std::abs(k2) > 0.2)
    throw Error(ErrorCode::NewtonDiverged, "distortion coefficients outside the invertible range");
  const double target = p.norm();
  if (target == 0.0 || (k1 == 0.0 && k2 == 0.0)) return p;
  // Radial problem: find r with r (1 + k1 r^2 + k2 r^4) = target.
  double r = target;
  for (int it = 0; it < 20; ++it) {
    const double r2 = r * r;
    const double g = r * (1.0 + k1 * r2 + k2 * r2 * r2) - target;
    if (std::abs(g) <= 1e-10 * std::max(1.0, target)) {
      // One extra step polishes the root well below the stopping tolerance.
      const double dg = 1.0 + 3.0 * k1 * r2 + 5.0 * k2 * r2 * r2;
      if (dg > 0.0) r -= g / dg;
      return p * (r / target);
    }
    const double dg = 1.0 + 3.0 * k1 * r2 + 5.0 * k2 * r2 * r2;
    if (!(dg > 1e-12)) break;
    double step = g / dg;
    // Damping: never move more than half the current radius in one step.
    const double limit = 0.5 * std::max(r, target);
    step = std::clamp(step, -limit, limit);
    r -= step;
    if (!(r > 0.0) || !std::isfinite(r)) break;
  }
  throw Error(ErrorCode::NewtonDiverged, "undistort did not converge for radius " + std::to_string(target));
}

Vec2 chromatic_offset(double alpha, const Vec2& p, Channel channel)
{
  switch (channel) {
    case Channel::R: return (1.0 + alpha) * p;
    case Channel::G: return p;
    case Channel::B: return (1.0 - alpha) * p;
  }
  return p;
}

Ray thin_lens_ray(const Intrinsics& intr, const Vec2& pixel, const Vec2& lens_sample)
{
  Ray ray;
  const auto dir = pixel_direction(intr, pixel);
  ray.direction = dir.value_or(Vec3::UnitZ());
  if (intr.aperture_radius <= 0.0 || !dir) return ray;
  // Distance along the ray to the focus plane; models that look sideways/backwards focus at range.
  const double travel = dir->z() > 1e-9 ? intr.focus_distance / dir->z() : intr.focus_distance;
  const Vec3 focus_point = travel * *dir;
  ray.origin = Vec3(lens_sample.x() * intr.aperture_radius, lens_sample.y() * intr.aperture_radius, 0.0);
  ray.direction = (focus_point - ray.origin).normalized();
  return ray;
}

std::pair<Pose, Pose> stereo_pair(const CameraRig& rig, double t)
{
  const Pose left = rig.pose_at(t);
  Pose right = left;
  const double b = rig.stereo_baseline.eval(t);
  if (b != 0.0) right.position = left.position + left.rotate(Vec3(b, 0.0, 0.0));
  return {left, right};
}

Vec2 concentric_disk(double a, double b)
{
  const double x = 2.0 * a - 1.0, y = 2.0 * b - 1.0;
  if (x == 0.0 && y == 0.0) return Vec2::Zero();
  double r, phi;
  if (std::abs(x) > std::abs(y)) {
    r = x;
    phi = (kPi / 4.0) * (y / x);
  } else {
    r = y;
    phi = kPi / 2.0 - (kPi / 4.0) * (x / y);
  }
  return Vec2(r * std::cos(phi), r * std::sin(phi));
}

}  // namespace worldforge
