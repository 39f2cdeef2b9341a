#pragma once

#include <vector>

#include "cgnn/autodiff.hpp"
#include "json.hpp"

namespace cgnn::nn {

inline constexpr const char* kCheckpointMagic = "cgnn-checkpoint-v1";

// Checkpoint layout (JSON):
//   {
//     "format": "cgnn-checkpoint-v1",
//     "kind": "<model kind>",
//     "meta": { ... model-specific settings ... },
//     "params": [ {"name": str, "shape": [rows, cols], "data": [row-major values]} , ...]
//   }
// Values are written with shortest round-trip formatting, so a reload is
// bit-exact.

nlohmann::json params_to_json(const std::vector<const Parameter*>& params);

/// Loads values by name; every parameter must be present with a matching shape.
void params_from_json(const nlohmann::json& array, const std::vector<Parameter*>& params);

}  // namespace cgnn::nn
