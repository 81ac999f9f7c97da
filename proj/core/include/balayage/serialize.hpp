#pragma once

#include "balayage/geometry.hpp"

#include <string>

namespace balayage {

constexpr int kSpaceFormatVersion = 1;

/// {"version":1,"dim":n,"points":[[...],...],"cell_weights":[...]}
std::string space_to_json(const DiscreteSpace& space);
DiscreteSpace space_from_json(const std::string& text);

/// {"space":"<id>","weights":[...]}
std::string measure_to_json(const DiscreteMeasure& measure);
/// The document's space id must match `space`.
DiscreteMeasure measure_from_json(const std::string& text, const DiscreteSpace& space);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

}  // namespace balayage
