#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace worldforge {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Aabb {
  Vec3 min = Vec3::Constant(kInf);
  Vec3 max = Vec3::Constant(-kInf);

  bool empty() const { return (min.array() > max.array()).any(); }
  void extend(const Vec3& p)
  {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void extend(const Aabb& b)
  {
    if (b.empty()) return;
    extend(b.min);
    extend(b.max);
  }
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  bool contains(const Vec3& p, double tol = 0.0) const
  {
    return (p.array() >= min.array() - tol).all() && (p.array() <= max.array() + tol).all();
  }
  bool overlaps(const Aabb& o) const
  {
    return (min.array() <= o.max.array()).all() && (o.min.array() <= max.array()).all();
  }
};

// Rigid transform, world_from_local.
struct Pose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  Vec3 apply(const Vec3& p) const { return orientation * p + position; }
  Vec3 rotate(const Vec3& v) const { return orientation * v; }
  Vec3 apply_inverse(const Vec3& p) const { return orientation.conjugate() * (p - position); }
  Pose inverse() const
  {
    Pose out;
    out.orientation = orientation.conjugate();
    out.position = -(out.orientation * position);
    return out;
  }
  Pose operator*(const Pose& rhs) const
  {
    Pose out;
    out.orientation = orientation * rhs.orientation;
    out.position = apply(rhs.position);
    return out;
  }
  Mat4 matrix() const
  {
    Mat4 m = Mat4::Identity();
    m.block<3, 3>(0, 0) = orientation.toRotationMatrix();
    m.block<3, 1>(0, 3) = position;
    return m;
  }
  bool operator==(const Pose& o) const
  {
    return position == o.position && orientation.coeffs() == o.orientation.coeffs();
  }
};

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

// Orientation whose +z axis looks from `eye` toward `target` with +y pointing "down" relative to `up`.
Quat look_rotation(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());

// Orthonormal basis (t1, t2) perpendicular to unit n.
void orthonormal_basis(const Vec3& n, Vec3& t1, Vec3& t2);

// Quaternion exponential integration of angular velocity over dt.
Quat integrate_rotation(const Quat& q, const Vec3& omega, double dt);

}  // namespace worldforge
