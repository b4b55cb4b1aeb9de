#pragma once

#include "worldforge/math.hpp"
#include "worldforge/polygon.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace worldforge::osm {

using TagMap = std::map<std::string, std::string>;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
  bool operator==(const LatLon&) const = default;
};

struct OsmWay {
  std::int64_t id = 0;
  std::vector<std::int64_t> node_ids;
  TagMap tags;
  bool closed() const { return node_ids.size() >= 4 && node_ids.front() == node_ids.back(); }
};

struct OsmDocument {
  std::map<std::int64_t, LatLon> nodes;
  std::vector<OsmWay> ways;
};

enum class SemanticClass { Building, Road, Highway, PedestrianPath, Railway, Water, Forest, Vegetation, Unknown };

std::string_view to_string(SemanticClass c);
SemanticClass semantic_class_from_string(std::string_view s);

struct Footprint {
  SemanticClass cls = SemanticClass::Unknown;
  std::int64_t way_id = 0;
  Polygon2 polygon;  // CCW, open (first vertex not repeated)
  double height = 0.0;
  std::optional<int> levels;
  std::string roof_shape;
  std::optional<double> width;
  bool operator==(const Footprint&) const = default;
};

struct WayLine {
  SemanticClass cls = SemanticClass::Unknown;
  std::int64_t way_id = 0;
  std::vector<Vec2> polyline;
  std::vector<std::int64_t> node_ids;
  double width = 0.0;
  bool operator==(const WayLine&) const = default;
};

struct SemanticMap {
  LatLon origin;
  std::vector<Footprint> footprints;
  std::vector<WayLine> ways;
  bool operator==(const SemanticMap&) const = default;
};

inline constexpr double kEarthRadius = 6371000.0;
inline constexpr double kStoryHeight = 3.0;
inline constexpr double kDefaultBuildingHeight = 9.0;

OsmDocument parse_osm(std::string_view xml_text);
OsmDocument load_osm_file(const std::filesystem::path& path);

SemanticClass classify_way(const TagMap& tags);
bool is_area_class(SemanticClass c);
// Default ribbon width for linear classes; 0 for area classes.
double default_way_width(SemanticClass c);

// Local equirectangular projection about origin; returns metres (east, north).
Vec2 project_latlon(double lat, double lon, const LatLon& origin);
LatLon unproject_xy(const Vec2& xy, const LatLon& origin);

SemanticMap build_semantic_map(const OsmDocument& doc, const LatLon& origin);
// Mean of all node coordinates; used when no explicit origin is configured.
LatLon document_centroid(const OsmDocument& doc);

nlohmann::json to_json(const SemanticMap& map);
SemanticMap semantic_map_from_json(const nlohmann::json& j);

}  // namespace worldforge::osm
