#pragma once

#include <string>

#include <json.hpp>

#include "edgesmdp/learner.hpp"

namespace edgesmdp {

// {"schema": "edgesmdp.checkpoint/1", "config_hash", "n", "R_bar", "gamma", "Y",
//  "tau_bar", "policy": {"inputs", "hidden", "outputs", "params"}, "value": {...}}
nlohmann::json checkpoint_json(const LearnerState& ls, const std::string& config_hash);
LearnerState learner_state_from_json(const nlohmann::json& j, const SystemConfig& cfg);

void save_checkpoint(const std::string& path, const LearnerState& ls, const std::string& config_hash);
// Throws IoError when unreadable, ShapeError when the networks do not fit cfg.
LearnerState load_checkpoint(const std::string& path, const SystemConfig& cfg);

}  // namespace edgesmdp
