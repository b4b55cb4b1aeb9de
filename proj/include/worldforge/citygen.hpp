#pragma once

#include "worldforge/mesh.hpp"
#include "worldforge/osm.hpp"
#include "worldforge/semantics.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace worldforge::city {

enum class RoofType { Flat, Gable };
enum class PropKind { TrafficLight, StopSign, Tree, Bench, StreetLight, Antenna, Vent, Chimney };

std::string_view to_string(PropKind kind);
SemanticLabel semantic_label(PropKind kind);
SemanticLabel semantic_label(osm::SemanticClass cls);

struct Placement {
  PropKind kind = PropKind::Tree;
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;  // [0, 2*pi)
  bool operator==(const Placement&) const = default;
};

struct CityMesh {
  TriMesh mesh;
  SemanticLabel label = SemanticLabel::Background;
  std::uint32_t instance_id = 0;
  bool operator==(const CityMesh&) const = default;
};

struct CityScene {
  std::vector<CityMesh> meshes;
  std::vector<Placement> placements;
  Aabb bounds;
  std::vector<std::string> warnings;
};

struct RoadRibbon {
  TriMesh mesh;
  osm::SemanticClass cls = osm::SemanticClass::Road;
  std::int64_t way_id = 0;
};

using PropLibrary = std::map<PropKind, TriMesh>;

inline constexpr double kRoadElevation = 0.02;
inline constexpr double kMiterLimit = 4.0;
inline constexpr double kIntersectionMergeRadius = 0.5;
inline constexpr double kCornerOffset = 4.0;
inline constexpr double kFurnitureSpacing = 15.0;
inline constexpr double kFurnitureLateral = 1.0;
inline constexpr double kRoofAreaPerProp = 60.0;
inline constexpr double kRoofEdgeClearance = 1.0;
inline constexpr double kGroundMargin = 20.0;

// Closed building mesh. A Gable request on a non-quadrilateral footprint falls back to Flat
// and appends a message to `warnings` when provided.
TriMesh extrude_building(const Polygon2& footprint, double height, RoofType roof, double ridge_height,
                         std::vector<std::string>* warnings = nullptr);

RoofType roof_type_for(const osm::Footprint& fp);
double default_ridge_height(const Polygon2& footprint);

std::vector<RoadRibbon> build_roads(const osm::SemanticMap& map);
std::vector<Vec2> detect_intersections(const osm::SemanticMap& map);
std::vector<Placement> scatter_props(const osm::SemanticMap& map, std::span<const Vec2> intersections, std::uint64_t seed);

PropLibrary builtin_prop_library();
CityScene generate_city(const osm::SemanticMap& map, const PropLibrary& props, std::uint64_t seed);

}  // namespace worldforge::city
