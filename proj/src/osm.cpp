#include "worldforge/osm.hpp"

#include "worldforge/error.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace worldforge::osm {

namespace pt = boost::property_tree;

namespace {

template <typename T>
T parse_number(const std::string& text, const char* what)
{
  T value{};
  if constexpr (std::is_integral_v<T>) {
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) throw Error(ErrorCode::MalformedXml, std::string("bad ") + what + " '" + text + "'");
  } else {
    char* end = nullptr;
    value = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size())
      throw Error(ErrorCode::MalformedXml, std::string("bad ") + what + " '" + text + "'");
  }
  return value;
}

// Leading decimal of a tag value such as "12", "12.5 m" or "12m".
std::optional<double> leading_number(const std::string& text)
{
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || !std::isfinite(v)) return std::nullopt;
  return v;
}

const std::string* find_tag(const TagMap& tags, const char* key)
{
  auto it = tags.find(key);
  return it == tags.end() ? nullptr : &it->second;
}

}  // namespace

std::string_view to_string(SemanticClass c)
{
  switch (c) {
    case SemanticClass::Building: return "Building";
    case SemanticClass::Road: return "Road";
    case SemanticClass::Highway: return "Highway";
    case SemanticClass::PedestrianPath: return "PedestrianPath";
    case SemanticClass::Railway: return "Railway";
    case SemanticClass::Water: return "Water";
    case SemanticClass::Forest: return "Forest";
    case SemanticClass::Vegetation: return "Vegetation";
    case SemanticClass::Unknown: return "Unknown";
  }
  return "Unknown";
}

SemanticClass semantic_class_from_string(std::string_view s)
{
  for (auto c : {SemanticClass::Building, SemanticClass::Road, SemanticClass::Highway, SemanticClass::PedestrianPath,
                 SemanticClass::Railway, SemanticClass::Water, SemanticClass::Forest, SemanticClass::Vegetation}) {
    if (to_string(c) == s) return c;
  }
  return SemanticClass::Unknown;
}

OsmDocument parse_osm(std::string_view xml_text)
{
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml_text)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::MalformedXml, e.message() + " at line " + std::to_string(e.line()));
  }
  auto root = tree.get_child_optional("osm");
  if (!root) throw Error(ErrorCode::MalformedXml, "missing <osm> root element");

  OsmDocument doc;
  for (const auto& [name, child] : *root) {
    if (name == "node") {
      const auto id = parse_number<std::int64_t>(child.get<std::string>("<xmlattr>.id", ""), "node id");
      LatLon ll;
      ll.lat = parse_number<double>(child.get<std::string>("<xmlattr>.lat", ""), "lat");
      ll.lon = parse_number<double>(child.get<std::string>("<xmlattr>.lon", ""), "lon");
      doc.nodes[id] = ll;
    } else if (name == "way") {
      OsmWay way;
      way.id = parse_number<std::int64_t>(child.get<std::string>("<xmlattr>.id", ""), "way id");
      for (const auto& [sub_name, sub] : child) {
        if (sub_name == "nd") {
          way.node_ids.push_back(parse_number<std::int64_t>(sub.get<std::string>("<xmlattr>.ref", ""), "nd ref"));
        } else if (sub_name == "tag") {
          way.tags[sub.get<std::string>("<xmlattr>.k", "")] = sub.get<std::string>("<xmlattr>.v", "");
        }
      }
      if (way.node_ids.size() >= 2) doc.ways.push_back(std::move(way));
    }
  }
  for (const OsmWay& way : doc.ways) {
    for (std::int64_t ref : way.node_ids) {
      if (!doc.nodes.count(ref))
        throw Error(ErrorCode::DanglingNodeRef, "way " + std::to_string(way.id) + " references missing node " + std::to_string(ref));
    }
  }
  return doc;
}

OsmDocument load_osm_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_osm(ss.str());
}

SemanticClass classify_way(const TagMap& tags)
{
  if (find_tag(tags, "building")) return SemanticClass::Building;
  if (const auto* hw = find_tag(tags, "highway")) {
    if (*hw == "motorway" || *hw == "trunk" || *hw == "motorway_link" || *hw == "trunk_link") return SemanticClass::Highway;
    if (*hw == "footway" || *hw == "path") return SemanticClass::PedestrianPath;
    return SemanticClass::Road;
  }
  if (find_tag(tags, "railway")) return SemanticClass::Railway;
  const auto* natural = find_tag(tags, "natural");
  const auto* landuse = find_tag(tags, "landuse");
  if ((natural && *natural == "water") || find_tag(tags, "waterway")) return SemanticClass::Water;
  if ((landuse && *landuse == "forest") || (natural && *natural == "wood")) return SemanticClass::Forest;
  if (landuse && (*landuse == "grass" || *landuse == "meadow")) return SemanticClass::Vegetation;
  return SemanticClass::Unknown;
}

bool is_area_class(SemanticClass c)
{
  return c == SemanticClass::Building || c == SemanticClass::Water || c == SemanticClass::Forest ||
         c == SemanticClass::Vegetation;
}

double default_way_width(SemanticClass c)
{
  switch (c) {
    case SemanticClass::Highway: return 12.0;
    case SemanticClass::Road: return 7.0;
    case SemanticClass::PedestrianPath: return 2.0;
    case SemanticClass::Railway: return 3.0;
    case SemanticClass::Water: return 5.0;
    default: return 0.0;
  }
}

Vec2 project_latlon(double lat, double lon, const LatLon& origin)
{
  if (!(std::abs(lat) <= 90.0) || !(std::abs(lon) <= 180.0) || !(std::abs(origin.lat) <= 90.0) ||
      !(std::abs(origin.lon) <= 180.0))
    throw Error(ErrorCode::OutOfRange, "lat/lon outside geodetic range");
  constexpr double deg = kPi / 180.0;
  const double x = kEarthRadius * (lon - origin.lon) * deg * std::cos(origin.lat * deg);
  const double y = kEarthRadius * (lat - origin.lat) * deg;
  return {x, y};
}

LatLon unproject_xy(const Vec2& xy, const LatLon& origin)
{
  constexpr double deg = kPi / 180.0;
  LatLon out;
  out.lat = origin.lat + xy.y() / (kEarthRadius * deg);
  out.lon = origin.lon + xy.x() / (kEarthRadius * deg * std::cos(origin.lat * deg));
  return out;
}

LatLon document_centroid(const OsmDocument& doc)
{
  LatLon c;
  if (doc.nodes.empty()) return c;
  for (const auto& [id, ll] : doc.nodes) {
    c.lat += ll.lat;
    c.lon += ll.lon;
  }
  c.lat /= static_cast<double>(doc.nodes.size());
  c.lon /= static_cast<double>(doc.nodes.size());
  return c;
}

SemanticMap build_semantic_map(const OsmDocument& doc, const LatLon& origin)
{
  SemanticMap map;
  map.origin = origin;
  for (const OsmWay& way : doc.ways) {
    const SemanticClass cls = classify_way(way.tags);
    if (cls == SemanticClass::Unknown) continue;

    std::vector<Vec2> pts;
    std::vector<std::int64_t> ids;
    for (std::int64_t ref : way.node_ids) {
      auto it = doc.nodes.find(ref);
      if (it == doc.nodes.end())
        throw Error(ErrorCode::DanglingNodeRef, "way " + std::to_string(way.id) + " references missing node " + std::to_string(ref));
      const Vec2 p = project_latlon(it->second.lat, it->second.lon, origin);
      if (!pts.empty() && pts.back() == p) continue;
      pts.push_back(p);
      ids.push_back(ref);
    }

    std::optional<double> width;
    if (const auto* w = find_tag(way.tags, "width")) width = leading_number(*w);

    if (way.closed() && is_area_class(cls)) {
      if (pts.size() > 1 && pts.front() == pts.back()) pts.pop_back();
      if (pts.size() < 3 || std::abs(signed_area(pts)) < 1e-6 || !is_simple(pts)) continue;
      Footprint fp;
      fp.cls = cls;
      fp.way_id = way.id;
      fp.polygon = std::move(pts);
      make_ccw(fp.polygon);
      fp.width = width;
      const std::string* levels = find_tag(way.tags, "building:levels");
      if (!levels) levels = find_tag(way.tags, "levels");
      if (levels) {
        if (auto v = leading_number(*levels)) fp.levels = static_cast<int>(*v);
      }
      if (const auto* roof = find_tag(way.tags, "roof:shape")) fp.roof_shape = *roof;
      if (cls == SemanticClass::Building) {
        std::optional<double> height;
        if (const auto* h = find_tag(way.tags, "height")) height = leading_number(*h);
        if (height && *height > 0.0)
          fp.height = *height;
        else if (fp.levels && *fp.levels > 0)
          fp.height = *fp.levels * kStoryHeight;
        else
          fp.height = kDefaultBuildingHeight;
      }
      map.footprints.push_back(std::move(fp));
    } else {
      if (pts.size() < 2) continue;
      WayLine line;
      line.cls = cls;
      line.way_id = way.id;
      line.polyline = std::move(pts);
      line.node_ids = std::move(ids);
      line.width = width.value_or(default_way_width(cls));
      map.ways.push_back(std::move(line));
    }
  }
  return map;
}

nlohmann::json to_json(const SemanticMap& map)
{
  using nlohmann::json;
  json j;
  j["origin"] = {map.origin.lat, map.origin.lon};
  j["footprints"] = json::array();
  for (const Footprint& fp : map.footprints) {
    json f;
    f["class"] = to_string(fp.cls);
    f["way_id"] = fp.way_id;
    f["height"] = fp.height;
    f["levels"] = fp.levels ? json(*fp.levels) : json(nullptr);
    f["roof_shape"] = fp.roof_shape;
    f["width"] = fp.width ? json(*fp.width) : json(nullptr);
    json poly = json::array();
    for (const Vec2& p : fp.polygon) poly.push_back({p.x(), p.y()});
    f["polygon"] = std::move(poly);
    j["footprints"].push_back(std::move(f));
  }
  j["ways"] = json::array();
  for (const WayLine& w : map.ways) {
    json o;
    o["class"] = to_string(w.cls);
    o["way_id"] = w.way_id;
    o["width"] = w.width;
    o["node_ids"] = w.node_ids;
    json line = json::array();
    for (const Vec2& p : w.polyline) line.push_back({p.x(), p.y()});
    o["polyline"] = std::move(line);
    j["ways"].push_back(std::move(o));
  }
  return j;
}

SemanticMap semantic_map_from_json(const nlohmann::json& j)
{
  SemanticMap map;
  map.origin = {j.at("origin").at(0).get<double>(), j.at("origin").at(1).get<double>()};
  for (const auto& f : j.at("footprints")) {
    Footprint fp;
    fp.cls = semantic_class_from_string(f.at("class").get<std::string>());
    fp.way_id = f.at("way_id").get<std::int64_t>();
    fp.height = f.at("height").get<double>();
    if (!f.at("levels").is_null()) fp.levels = f.at("levels").get<int>();
    fp.roof_shape = f.at("roof_shape").get<std::string>();
    if (!f.at("width").is_null()) fp.width = f.at("width").get<double>();
    for (const auto& p : f.at("polygon")) fp.polygon.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    map.footprints.push_back(std::move(fp));
  }
  for (const auto& o : j.at("ways")) {
    WayLine w;
    w.cls = semantic_class_from_string(o.at("class").get<std::string>());
    w.way_id = o.at("way_id").get<std::int64_t>();
    w.width = o.at("width").get<double>();
    w.node_ids = o.at("node_ids").get<std::vector<std::int64_t>>();
    for (const auto& p : o.at("polyline")) w.polyline.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    map.ways.push_back(std::move(w));
  }
  return map;
}

}  // namespace worldforge::osm
