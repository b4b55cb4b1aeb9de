#include "worldforge/math.hpp"

namespace worldforge {

Quat look_rotation(const Vec3& eye, const Vec3& target, const Vec3& up)
{
  Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.squaredNorm() < 1e-18) right = forward.cross(Vec3::UnitY());
  right.normalize();
  const Vec3 down = forward.cross(right);
  Mat3 r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = forward;
  return Quat(r).normalized();
}

void orthonormal_basis(const Vec3& n, Vec3& t1, Vec3& t2)
{
  if (std::abs(n.x()) > 0.57735)
    t1 = Vec3(n.y(), -n.x(), 0.0).normalized();
  else
    t1 = Vec3(0.0, n.z(), -n.y()).normalized();
  t2 = n.cross(t1);
}

Quat integrate_rotation(const Quat& q, const Vec3& omega, double dt)
{
  const double angle = omega.norm() * dt;
  if (angle == 0.0) return q;
  const Vec3 axis = omega.normalized();
  Quat dq(Eigen::AngleAxisd(angle, axis));
  return (dq * q).normalized();
}

}  // namespace worldforge
