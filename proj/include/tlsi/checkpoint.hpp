#pragma once

#include <string>

#include <json.hpp>

#include "tlsi/graph.hpp"

namespace tlsi {

inline constexpr int kCheckpointFormatVersion = 1;

// Layout: <dir>/manifest.json plus one raw little-endian float64 file per
// parameter. Written to a temporary directory and renamed into place.
void save_checkpoint(const std::string& dir, const ParameterStore& params,
                     const nlohmann::json& config_echo);

nlohmann::json load_checkpoint_manifest(const std::string& dir);

// Fills an existing store; every parameter must match the manifest by name
// and shape, and vice versa.
void load_checkpoint_params(const std::string& dir, ParameterStore& params);

}  // namespace tlsi
