#pragma once

#include <string>

#include "json.hpp"

#include "gks/engine.hpp"

namespace gks {

/// Strict: unknown keys, wrong types and inconsistent fields throw
/// std::invalid_argument naming the offending key.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

nlohmann::json config_json(const ExperimentConfig& config);
nlohmann::json summary_json(const RunSummary& summary);

}  // namespace gks
