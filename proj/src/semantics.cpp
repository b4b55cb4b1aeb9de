#include "worldforge/semantics.hpp"

#include "worldforge/error.hpp"

#include <string>

namespace worldforge {

std::string_view to_string(SemanticLabel label)
{
  switch (label) {
    case SemanticLabel::Background: return "background";
    case SemanticLabel::Ground: return "ground";
    case SemanticLabel::Building: return "building";
    case SemanticLabel::Road: return "road";
    case SemanticLabel::Highway: return "highway";
    case SemanticLabel::PedestrianPath: return "pedestrian_path";
    case SemanticLabel::Railway: return "railway";
    case SemanticLabel::Water: return "water";
    case SemanticLabel::Forest: return "forest";
    case SemanticLabel::Vegetation: return "vegetation";
    case SemanticLabel::TrafficLight: return "traffic_light";
    case SemanticLabel::StopSign: return "stop_sign";
    case SemanticLabel::Tree: return "tree";
    case SemanticLabel::Bench: return "bench";
    case SemanticLabel::StreetLight: return "street_light";
    case SemanticLabel::Antenna: return "antenna";
    case SemanticLabel::Vent: return "vent";
    case SemanticLabel::Chimney: return "chimney";
    case SemanticLabel::Object: return "object";
    case SemanticLabel::Fragment: return "fragment";
    case SemanticLabel::Projectile: return "projectile";
  }
  return "unknown";
}

SemanticLabel semantic_label_from_string(std::string_view name)
{
  for (std::uint16_t v = 0; v <= static_cast<std::uint16_t>(SemanticLabel::Projectile); ++v) {
    const auto label = static_cast<SemanticLabel>(v);
    if (to_string(label) == name) return label;
  }
  throw Error(ErrorCode::Validation, "unknown semantic label '" + std::string(name) + "'");
}

}  // namespace worldforge
