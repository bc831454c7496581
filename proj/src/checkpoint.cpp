#include "edgesmdp/checkpoint.hpp"

#include <fstream>

#include "edgesmdp/errors.hpp"
#include "edgesmdp/model.hpp"

namespace edgesmdp {

namespace {

nlohmann::json net_json(const Mlp& net) {
    return {{"inputs", net.inputs()}, {"hidden", net.hidden()}, {"outputs", net.outputs()}, {"params", net.flatten()}};
}

Mlp net_from_json(const nlohmann::json& j, int inputs, int outputs) {
    if (j.at("inputs").get<int>() != inputs || j.at("outputs").get<int>() != outputs)
        throw ShapeError("checkpoint network does not match the configured model");
    return Mlp::unflatten(inputs, j.at("hidden").get<std::vector<int>>(), outputs,
                          j.at("params").get<std::vector<double>>());
}

}  // namespace

nlohmann::json checkpoint_json(const LearnerState& ls, const std::string& config_hash) {
    return {{"schema", "edgesmdp.checkpoint/1"},
            {"config_hash", config_hash},
            {"n", ls.n},
            {"R_bar", ls.R_bar},
            {"gamma", ls.gamma},
            {"Y", ls.Y},
            {"tau_bar", ls.tau_bar},
            {"policy", net_json(ls.theta)},
            {"value", net_json(ls.w)}};
}

LearnerState learner_state_from_json(const nlohmann::json& j, const SystemConfig& cfg) {
    if (j.value("schema", "") != "edgesmdp.checkpoint/1") throw ShapeError("not an edgesmdp checkpoint");
    LearnerState ls;
    ls.theta = net_from_json(j.at("policy"), feature_count(cfg), cfg.action_count());
    ls.w = net_from_json(j.at("value"), feature_count(cfg), 1);
    ls.traces = Traces::zeros(ls.w, ls.theta);
    ls.n = j.at("n").get<long long>();
    ls.R_bar = j.at("R_bar").get<double>();
    ls.gamma = j.at("gamma").get<std::vector<double>>();
    ls.Y = j.at("Y").get<std::vector<double>>();
    ls.tau_bar = j.at("tau_bar").get<double>();
    if (static_cast<int>(ls.gamma.size()) != cfg.priorities || static_cast<int>(ls.Y.size()) != cfg.priorities)
        throw ShapeError("checkpoint priority count does not match config");
    return ls;
}

void save_checkpoint(const std::string& path, const LearnerState& ls, const std::string& config_hash) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint " + path);
    out << checkpoint_json(ls, config_hash).dump(1) << '\n';
    if (!out) throw IoError("failed writing checkpoint " + path);
}

LearnerState load_checkpoint(const std::string& path, const SystemConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed checkpoint " + path + ": " + e.what());
    }
    return learner_state_from_json(j, cfg);
}

}  // namespace edgesmdp
