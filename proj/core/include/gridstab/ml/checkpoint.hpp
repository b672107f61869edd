#pragma once

#include "gridstab/ml/pipeline.hpp"

#include <filesystem>
#include <string>

namespace gridstab::ml {

/// Checkpoint format: one line of compact JSON (kind, head, target, layer
/// shapes and activations, training config, seed, parameter count, scaler
/// statistics), a newline, then parameter_count little-endian IEEE-754
/// float64 values in Model::parameters() order.
std::string serialize_predictor(const Predictor& predictor);
Predictor deserialize_predictor(const std::string& bytes);

void save_predictor(const Predictor& predictor, const std::filesystem::path& path);
/// Throws IoError or SchemaError.
Predictor load_predictor(const std::filesystem::path& path);

}  // namespace gridstab::ml
