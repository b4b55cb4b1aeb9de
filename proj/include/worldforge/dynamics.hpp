#pragma once

#include "worldforge/math.hpp"
#include "worldforge/mesh.hpp"
#include "worldforge/polytope.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace worldforge::physics {

enum class ShapeKind { Sphere, Box, ConvexHull };

// Geometry in the body frame (origin at the center of mass).
struct CollisionShape {
  ShapeKind kind = ShapeKind::Sphere;
  double radius = 0.0;
  Vec3 half_extents = Vec3::Zero();
  std::shared_ptr<const ConvexPolytope> polytope;  // Box and ConvexHull

  static CollisionShape sphere(double radius);
  static CollisionShape box(const Vec3& half_extents);
  // Needs at least 4 non-coplanar points.
  static CollisionShape hull(const std::vector<Vec3>& points);

  Aabb local_bounds() const;
  TriMesh mesh() const;
};

struct RigidBody {
  std::uint32_t id = 0;
  Pose pose;
  Vec3 linear_velocity = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();  // world frame
  double mass = 0.0;                      // 0 => static
  Mat3 inertia = Mat3::Identity();        // body frame, about the center of mass
  CollisionShape shape;
  double restitution = 0.0;
  double friction = 0.5;
  double margin = 0.0;

  bool is_static() const { return mass <= 0.0; }
  double inverse_mass() const { return is_static() ? 0.0 : 1.0 / mass; }
  Mat3 inverse_inertia_world() const;
};

// Mass and inertia from the shape at uniform density.
void set_mass_from_density(RigidBody& body, double density);
// Body whose hull is given in world coordinates: pose is placed at the hull's center of mass.
RigidBody body_from_world_hull(std::uint32_t id, const std::vector<Vec3>& world_points, double density);

struct ForceField {
  enum class Kind { Gravity, Wind, Drag } kind = Kind::Gravity;
  Vec3 vector = Vec3(0, 0, -9.81);  // g for Gravity, air velocity for Wind
  double coefficient = 0.0;         // kg/m for Wind, kg/s for Drag

  static ForceField gravity(const Vec3& g) { return {Kind::Gravity, g, 0.0}; }
  static ForceField wind(const Vec3& velocity, double c) { return {Kind::Wind, velocity, c}; }
  static ForceField drag(double c) { return {Kind::Drag, Vec3::Zero(), c}; }
};

struct Contact {
  std::uint32_t body_a = 0;
  std::uint32_t body_b = 0;
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // from a toward b
  double penetration = 0.0;
  double impulse = 0.0;  // normal impulse magnitude applied during resolution
};

struct SolverSettings {
  int iterations = 10;
  double baumgarte = 0.2;
  double slop = 0.005;
  // Approach speeds below this bounce inelastically, which keeps resting contact quiet.
  double restitution_threshold = 0.2;
};

struct World {
  std::vector<RigidBody> bodies;
  std::vector<ForceField> fields;
  SolverSettings settings;

  RigidBody* find(std::uint32_t id);
  const RigidBody* find(std::uint32_t id) const;
};

Vec3 accumulate_forces(const RigidBody& body, const std::vector<ForceField>& fields);

// Sweep-and-prune broad phase then exact narrow phase; sorted by (body_a, body_b), body_a < body_b.
std::vector<Contact> detect_contacts(const std::vector<RigidBody>& bodies);

// Sequential impulses; fills Contact::impulse.
void resolve_contacts(World& world, std::vector<Contact>& contacts, double dt);

// One semi-implicit Euler step followed by collision handling. Returns the resolved contacts.
// Throws NonFiniteState if any state becomes NaN/Inf.
std::vector<Contact> step(World& world, double dt);

double kinetic_energy(const World& world);
// Potential energy under the world's gravity fields.
double potential_energy(const World& world);

struct BodyState {
  std::uint32_t id = 0;
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
};

// Total normal impulse exchanged by one body pair within a frame.
struct PairImpulse {
  std::uint32_t body_a = 0;
  std::uint32_t body_b = 0;
  double impulse = 0.0;
};

struct FrameRecord {
  int frame = 0;
  double time = 0.0;
  std::vector<BodyState> bodies;
  std::vector<PairImpulse> contacts;
};

struct Trajectory {
  double frame_rate = 24.0;
  std::vector<FrameRecord> frames;
};

// Called after every substep with that step's contacts; may replace bodies between steps.
using StepHook = std::function<void(World&, const std::vector<Contact>&, double time)>;

// Frame k records the state at t = k / frame_rate, k in [0, round(duration * frame_rate)); frame 0
// is the initial state. Each frame interval is integrated in `substeps` equal steps. Pair impulses
// above `report_threshold` accumulated over the interval leading into a frame are recorded on it.
Trajectory simulate(World& world, double duration, double frame_rate, int substeps, const StepHook& hook = {},
                    double report_threshold = 0.0);

// One JSON object per line: {frame, time, bodies:[{id, position, quaternion}], contacts:[{a, b, impulse}]}.
std::string trajectory_to_jsonl(const Trajectory& trajectory);

}  // namespace worldforge::physics
