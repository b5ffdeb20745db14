#pragma once

#include "resode/nn.hpp"

#include <string>
#include <utility>

namespace resode {

/// Versioned JSON model file: config plus every parameter tensor as nested
/// row-major arrays. Text on purpose, so tests and humans can inspect it.
std::string model_to_json(const Model& m, const NetworkConfig& cfg);

std::pair<Model, NetworkConfig> model_from_json(const std::string& text);

void save_model(const std::string& path, const Model& m,
                const NetworkConfig& cfg);
std::pair<Model, NetworkConfig> load_model(const std::string& path);

}  // namespace resode
