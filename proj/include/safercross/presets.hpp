#pragma once

// Built-in scenario generators for the experimental layouts: a road crossing
// with an acceleration zone, a duty-cycling loop walk, a straight-plus-corner
// map-matching walk, and a two-pedestrian overhearing setup.

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace safercross::engine {

std::vector<std::string> preset_kinds();

// Returns a full scenario document. Unknown kinds or parameters throw
// Error(ParseError).
nlohmann::json make_preset(std::string_view kind, const nlohmann::json& params);

}  // namespace safercross::engine
