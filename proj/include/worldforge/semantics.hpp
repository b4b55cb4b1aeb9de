#pragma once

#include <cstdint>
#include <string_view>

namespace worldforge {

// Semantic ids written into segmentation maps. 0 is background.
enum class SemanticLabel : std::uint16_t {
  Background = 0,
  Ground = 1,
  Building = 2,
  Road = 3,
  Highway = 4,
  PedestrianPath = 5,
  Railway = 6,
  Water = 7,
  Forest = 8,
  Vegetation = 9,
  TrafficLight = 10,
  StopSign = 11,
  Tree = 12,
  Bench = 13,
  StreetLight = 14,
  Antenna = 15,
  Vent = 16,
  Chimney = 17,
  Object = 18,
  Fragment = 19,
  Projectile = 20,
};

std::string_view to_string(SemanticLabel label);
// Throws Validation for unknown names.
SemanticLabel semantic_label_from_string(std::string_view name);

}  // namespace worldforge
