#pragma once

#include <string>

#include "trustfed/domain.hpp"
#include "trustfed/optimizer.hpp"

namespace trustfed {

// Parses a scenario config document. Every field has a default except `seed`,
// which must be present. Unknown keys and type errors throw Error
// ("invalid-config") naming the field.
ScenarioConfig scenario_config_from_json(const std::string& text);
ScenarioConfig load_scenario_config(const std::string& path);

std::string scenario_config_to_json(const ScenarioConfig& config);

// Optimizer instance: a JSON header naming the device/utility CSV pair and
// carrying weights, thresholds, requested areas, and per-device trust and
// cluster labels. CSV paths resolve relative to the instance file.
DeploymentContext load_instance(const std::string& path);

std::string instance_to_json(const DeploymentContext& ctx, const std::string& devices_csv,
                             const std::string& utilities_csv);

} // namespace trustfed
