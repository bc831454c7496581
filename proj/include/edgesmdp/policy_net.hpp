#pragma once

#include <span>
#include <vector>

#include "edgesmdp/config.hpp"
#include "edgesmdp/env.hpp"
#include "edgesmdp/mlp.hpp"

namespace edgesmdp {

struct PolicyOutput {
    std::vector<double> probs;  // over the global action index set
    std::vector<bool> mask;
};

struct Traces {
    std::vector<double> z_w;
    std::vector<double> z_theta;

    static Traces zeros(const Mlp& value_net, const Mlp& policy_net) {
        return {std::vector<double>(value_net.param_count(), 0.0), std::vector<double>(policy_net.param_count(), 0.0)};
    }
};

// Preference network h(s, ., theta): one output per action index. Default
// initialization per layer; see Mlp::initialized.
Mlp make_policy_net(const SystemConfig& cfg, RngStream& rng);
// Value network v(s, w); the output layer starts at zero so v == 0 initially.
Mlp make_value_net(const SystemConfig& cfg, RngStream& rng);

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input);
std::vector<double> preferences(const Mlp& theta, std::span<const double> features);
double value_estimate(const Mlp& w, std::span<const double> features);

// Softmax over entries with mask[k] set, shifted by the largest feasible
// preference. Throws NoFeasibleAction on an all-false mask.
PolicyOutput masked_softmax(std::span<const double> h, const std::vector<bool>& mask);

int sample_action(const PolicyOutput& out, RngStream& rng);

// d/dtheta ln pi(k | s) with pi the masked softmax of the preferences.
// Throws DomainError when k is masked out.
std::vector<double> grad_log_policy(const Mlp& theta, std::span<const double> features, int k,
                                    const std::vector<bool>& mask);
std::vector<double> grad_value(const Mlp& w, std::span<const double> features);

}  // namespace edgesmdp
