#pragma once

#include "worldforge/error.hpp"
#include "worldforge/math.hpp"

#include <algorithm>
#include <initializer_list>
#include <type_traits>
#include <vector>

namespace worldforge::anim {

enum class Interp { Linear, Bezier };

// Values that tracks can carry: double, Vec3, Quat.
template <typename T>
struct TrackTraits;

template <>
struct TrackTraits<double> {
  static double zero() { return 0.0; }
  static constexpr int dims = 1;
  static double& comp(double& v, int) { return v; }
  static double comp(const double& v, int) { return v; }
};

template <>
struct TrackTraits<Vec3> {
  static Vec3 zero() { return Vec3::Zero(); }
  static constexpr int dims = 3;
  static double& comp(Vec3& v, int i) { return v[i]; }
  static double comp(const Vec3& v, int i) { return v[i]; }
};

template <>
struct TrackTraits<Quat> {
  static Quat zero() { return Quat::Identity(); }
};

// Bezier handles are offsets from their own key in (time, value) space: the segment from key a to
// key b uses a's outgoing handle and b's incoming handle. Quaternion keys ignore value handles and
// interpolate rotations; their Bezier segments still ease in time.
template <typename T>
struct Key {
  double time = 0.0;
  T value = TrackTraits<T>::zero();
  Interp interp = Interp::Linear;  // applies to the segment leaving this key
  double out_dt = 0.0;
  T out_dv = TrackTraits<T>::zero();
  double in_dt = 0.0;
  T in_dv = TrackTraits<T>::zero();
};

namespace detail {

inline double cubic(double p0, double p1, double p2, double p3, double s)
{
  // de Casteljau
  const double a = p0 + (p1 - p0) * s, b = p1 + (p2 - p1) * s, c = p2 + (p3 - p2) * s;
  const double d = a + (b - a) * s, e = b + (c - b) * s;
  return d + (e - d) * s;
}

// Curve parameter whose time coordinate equals t; handle times are clamped into the segment so the
// time curve is monotone.
inline double solve_bezier_time(double t0, double t1, double h0, double h1, double t)
{
  const double p1 = std::clamp(t0 + h0, t0, t1);
  const double p2 = std::clamp(t1 + h1, t0, t1);
  // Bisect to machine precision; the 1e-9 time tolerance is met long before the loop ends.
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 64 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double x = cubic(t0, p1, p2, t1, mid);
    if (x == t) return mid;
    (x < t ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline Quat interpolate_rotation(const Quat& a, const Quat& b, double s)
{
  Quat bb = b;
  if (a.dot(bb) < 0.0) bb.coeffs() = -bb.coeffs();
  // Angle between keys <= 90 degrees <=> cos(half angle) >= cos(45 degrees).
  if (a.dot(bb) >= std::cos(kPi / 4.0)) {
    Quat q;
    q.coeffs() = (1.0 - s) * a.coeffs() + s * bb.coeffs();
    return q.normalized();
  }
  return a.slerp(s, bb).normalized();
}

}  // namespace detail

template <typename T>
class Track {
 public:
  Track() = default;
  explicit Track(T constant) { keys_.push_back(Key<T>{0.0, constant}); }
  explicit Track(std::vector<Key<T>> keys) : keys_(std::move(keys)) { validate(); }

  static Track linear(std::initializer_list<std::pair<double, T>> points)
  {
    std::vector<Key<T>> keys;
    for (const auto& [t, v] : points) keys.push_back(Key<T>{t, v});
    return Track(std::move(keys));
  }

  void add_key(const Key<T>& key)
  {
    keys_.push_back(key);
    validate();
  }

  const std::vector<Key<T>>& keys() const { return keys_; }
  bool empty() const { return keys_.empty(); }
  bool is_constant() const { return keys_.size() <= 1; }

  T eval(double t) const
  {
    if (keys_.empty()) return TrackTraits<T>::zero();
    if (t <= keys_.front().time) return keys_.front().value;
    if (t >= keys_.back().time) return keys_.back().value;
    // First key with time > t.
    const auto it = std::upper_bound(keys_.begin(), keys_.end(), t, [](double x, const Key<T>& k) { return x < k.time; });
    const Key<T>& b = *it;
    const Key<T>& a = *(it - 1);
    if (t == a.time) return a.value;
    const double span = b.time - a.time;
    if (a.interp == Interp::Linear) return blend(a.value, b.value, (t - a.time) / span);
    const double s = detail::solve_bezier_time(a.time, b.time, a.out_dt, b.in_dt, t);
    if constexpr (std::is_same_v<T, Quat>) {
      // The curve parameter doubles as the rotation fraction, so time handles ease the motion.
      return detail::interpolate_rotation(a.value, b.value, s);
    } else {
      T out = a.value;
      for (int c = 0; c < TrackTraits<T>::dims; ++c) {
        const double v0 = TrackTraits<T>::comp(a.value, c), v3 = TrackTraits<T>::comp(b.value, c);
        const double v1 = v0 + TrackTraits<T>::comp(a.out_dv, c);
        const double v2 = v3 + TrackTraits<T>::comp(b.in_dv, c);
        TrackTraits<T>::comp(out, c) = detail::cubic(v0, v1, v2, v3, s);
      }
      return out;
    }
  }

 private:
  static T blend(const T& a, const T& b, double s)
  {
    if constexpr (std::is_same_v<T, Quat>)
      return detail::interpolate_rotation(a, b, s);
    else
      return a + (b - a) * s;
  }

  void validate() const
  {
    for (std::size_t i = 1; i < keys_.size(); ++i)
      if (!(keys_[i].time > keys_[i - 1].time))
        throw Error(ErrorCode::InvalidArgument, "track key times must be strictly increasing");
  }

  std::vector<Key<T>> keys_;
};

struct PoseTrack {
  Track<Vec3> position{Vec3::Zero()};
  Track<Quat> rotation{Quat::Identity()};

  PoseTrack() = default;
  explicit PoseTrack(const Pose& constant) : position(constant.position), rotation(constant.orientation) {}

  Pose eval(double t) const { return Pose{position.eval(t), rotation.eval(t)}; }
  bool is_constant() const { return position.is_constant() && rotation.is_constant(); }
};

}  // namespace worldforge::anim
