#include "doctest.h"

#include "worldforge/error.hpp"
#include "worldforge/osm.hpp"
#include "worldforge/random.hpp"

using namespace worldforge;
using namespace worldforge::osm;

namespace {

const char* kSquareBuilding = R"(<?xml version="1.0"?>
<osm version="0.6">
  <node id="1" lat="0.0" lon="0.0"/>
  <node id="2" lat="0.0" lon="0.0001"/>
  <node id="3" lat="0.0001" lon="0.0001"/>
  <node id="4" lat="0.0001" lon="0.0"/>
  <way id="10">
    <nd ref="1"/><nd ref="2"/><nd ref="3"/><nd ref="4"/><nd ref="1"/>
    <tag k="building" v="yes"/>
    <tag k="height" v="10"/>
  </way>
  <something_else foo="bar"/>
</osm>)";

}  // namespace

TEST_SUITE("osm") {

TEST_CASE("parse square building fixture")
{
  const OsmDocument doc = parse_osm(kSquareBuilding);
  CHECK(doc.nodes.size() == 4);
  REQUIRE(doc.ways.size() == 1);
  CHECK(doc.ways[0].tags.at("height") == "10");
  CHECK(doc.ways[0].tags.at("building") == "yes");
  CHECK(doc.ways[0].closed());
}

TEST_CASE("empty document and error paths")
{
  const OsmDocument empty = parse_osm("<osm></osm>");
  CHECK(empty.nodes.empty());
  CHECK(empty.ways.empty());

  try {
    parse_osm(R"(<osm><node id="1" lat="0" lon="0"/><way id="2"><nd ref="1"/><nd ref="99"/></way></osm>)");
    FAIL("expected DanglingNodeRef");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DanglingNodeRef);
  }
  try {
    parse_osm("<osm><node id=\"1\" lat=\"0\" lon=\"0\"></osm>");
    FAIL("expected MalformedXml");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedXml);
  }
}

TEST_CASE("classify_way priority table")
{
  CHECK(classify_way({{"building", "yes"}}) == SemanticClass::Building);
  CHECK(classify_way({{"highway", "footway"}}) == SemanticClass::PedestrianPath);
  CHECK(classify_way({{"highway", "path"}}) == SemanticClass::PedestrianPath);
  CHECK(classify_way({{"highway", "motorway"}}) == SemanticClass::Highway);
  CHECK(classify_way({{"highway", "trunk"}}) == SemanticClass::Highway);
  CHECK(classify_way({{"highway", "residential"}}) == SemanticClass::Road);
  CHECK(classify_way({{"railway", "rail"}}) == SemanticClass::Railway);
  CHECK(classify_way({{"natural", "water"}}) == SemanticClass::Water);
  CHECK(classify_way({{"waterway", "river"}}) == SemanticClass::Water);
  CHECK(classify_way({{"landuse", "forest"}}) == SemanticClass::Forest);
  CHECK(classify_way({{"natural", "wood"}}) == SemanticClass::Forest);
  CHECK(classify_way({{"landuse", "grass"}}) == SemanticClass::Vegetation);
  CHECK(classify_way({{"landuse", "meadow"}}) == SemanticClass::Vegetation);
  CHECK(classify_way({}) == SemanticClass::Unknown);
  // Building outranks everything else.
  CHECK(classify_way({{"building", "yes"}, {"highway", "footway"}, {"natural", "water"}}) == SemanticClass::Building);
  CHECK(classify_way({{"highway", "service"}, {"railway", "tram"}}) == SemanticClass::Road);
  CHECK(classify_way({{"railway", "rail"}, {"natural", "water"}}) == SemanticClass::Railway);
  CHECK(classify_way({{"natural", "water"}, {"landuse", "forest"}}) == SemanticClass::Water);
}

TEST_CASE("classify_way is total and deterministic over random tag maps")
{
  const std::vector<std::string> keys = {"building", "highway", "railway", "natural", "landuse", "waterway", "name", "amenity"};
  const std::vector<std::string> values = {"yes", "footway", "path", "motorway", "trunk", "water", "wood", "forest", "grass", "meadow", "x"};
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    TagMap tags;
    const auto n = rng.below(4);
    for (std::uint64_t k = 0; k < n; ++k) tags[keys[rng.below(keys.size())]] = values[rng.below(values.size())];
    const SemanticClass a = classify_way(tags);
    CHECK(a == classify_way(tags));
  }
}

TEST_CASE("project_latlon closed-form values")
{
  const LatLon origin{0.0, 0.0};
  CHECK(project_latlon(0.0, 0.0, origin) == Vec2(0, 0));
  CHECK(project_latlon(12.5, -3.0, LatLon{12.5, -3.0}) == Vec2(0, 0));
  CHECK(project_latlon(0.001, 0.0, origin).y() == doctest::Approx(111.19).epsilon(0.01 / 111.19));
  const Vec2 x60 = project_latlon(60.0, 10.001, LatLon{60.0, 10.0});
  CHECK(x60.x() == doctest::Approx(55.60).epsilon(0.01 / 55.60));
  CHECK_THROWS_AS(project_latlon(91.0, 0.0, origin), Error);
  CHECK_THROWS_AS(project_latlon(0.0, 181.0, origin), Error);
}

TEST_CASE("project_latlon is linear in small offsets")
{
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const LatLon o{rng.uniform(-60, 60), rng.uniform(-170, 170)};
    const double dla = rng.uniform(-0.05, 0.05), dlo = rng.uniform(-0.05, 0.05);
    const double dlb = rng.uniform(-0.05, 0.05), dlob = rng.uniform(-0.05, 0.05);
    const Vec2 a = project_latlon(o.lat + dla, o.lon + dlo, o);
    const Vec2 b = project_latlon(o.lat + dlb, o.lon + dlob, o);
    const Vec2 sum = project_latlon(o.lat + dla + dlb, o.lon + dlo + dlob, o);
    const Vec2 lhs = a + b - project_latlon(o.lat, o.lon, o);
    CHECK((lhs - sum).norm() <= 1e-9 * std::max(1.0, sum.norm()));
    const LatLon back = unproject_xy(a, o);
    CHECK(back.lat == doctest::Approx(o.lat + dla).epsilon(1e-12));
  }
}

TEST_CASE("build_semantic_map: heights, winding and classes")
{
  const OsmDocument doc = parse_osm(kSquareBuilding);
  const SemanticMap map = build_semantic_map(doc, LatLon{0, 0});
  REQUIRE(map.footprints.size() == 1);
  CHECK(map.footprints[0].cls == SemanticClass::Building);
  CHECK(map.footprints[0].height == 10.0);
  CHECK(signed_area(map.footprints[0].polygon) > 0.0);

  OsmDocument levels = doc;
  levels.ways[0].tags.erase("height");
  levels.ways[0].tags["building:levels"] = "4";
  CHECK(build_semantic_map(levels, LatLon{0, 0}).footprints[0].height == 12.0);

  OsmDocument untagged = doc;
  untagged.ways[0].tags.erase("height");
  CHECK(build_semantic_map(untagged, LatLon{0, 0}).footprints[0].height == kDefaultBuildingHeight);

  OsmDocument clockwise = doc;
  std::reverse(clockwise.ways[0].node_ids.begin(), clockwise.ways[0].node_ids.end());
  const SemanticMap cw = build_semantic_map(clockwise, LatLon{0, 0});
  REQUIRE(cw.footprints.size() == 1);
  CHECK(signed_area(cw.footprints[0].polygon) > 0.0);
  auto sorted = [](Polygon2 p) {
    std::sort(p.begin(), p.end(), [](const Vec2& a, const Vec2& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
    return p;
  };
  CHECK(sorted(cw.footprints[0].polygon) == sorted(map.footprints[0].polygon));
}

TEST_CASE("city fixture file")
{
  const OsmDocument doc = load_osm_file(WORLDFORGE_TEST_DATA "/city_fixture.osm");
  const SemanticMap map = build_semantic_map(doc, LatLon{48.0, 11.0});
  CHECK(map.footprints.size() == 1);
  CHECK(map.ways.size() == 3);
  int roads = 0, paths = 0;
  for (const WayLine& w : map.ways) {
    roads += w.cls == SemanticClass::Road;
    paths += w.cls == SemanticClass::PedestrianPath;
    for (const Vec2& p : w.polyline) CHECK(p.allFinite());
  }
  CHECK(roads == 2);
  CHECK(paths == 1);
  CHECK(map.footprints[0].polygon[0].x() == doctest::Approx(20.0).epsilon(1e-5));
  CHECK_THROWS_AS(load_osm_file("/nonexistent/file.osm"), Error);
}

TEST_CASE("semantic map JSON round trip is bit-exact")
{
  const SemanticMap map = build_semantic_map(load_osm_file(WORLDFORGE_TEST_DATA "/city_fixture.osm"), LatLon{48.0, 11.0});
  const std::string text = to_json(map).dump();
  const SemanticMap back = semantic_map_from_json(nlohmann::json::parse(text));
  CHECK(back == map);
}

}
