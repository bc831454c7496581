#include "edgesmdp/policy_net.hpp"

#include <cmath>
#include <limits>

#include "edgesmdp/errors.hpp"
#include "edgesmdp/model.hpp"

namespace edgesmdp {

Mlp make_policy_net(const SystemConfig& cfg, RngStream& rng) {
    return Mlp::initialized(feature_count(cfg), cfg.learner.policy_hidden, cfg.action_count(), rng, false);
}

Mlp make_value_net(const SystemConfig& cfg, RngStream& rng) {
    return Mlp::initialized(feature_count(cfg), cfg.learner.value_hidden, 1, rng, true);
}

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input) {
    Eigen::VectorXd y = net.forward(input);
    return {y.data(), y.data() + y.size()};
}

std::vector<double> preferences(const Mlp& theta, std::span<const double> features) {
    return mlp_forward(theta, features);
}

double value_estimate(const Mlp& w, std::span<const double> features) {
    if (w.outputs() != 1) throw ShapeError("value network must have a scalar output");
    return w.forward(features)(0);
}

PolicyOutput masked_softmax(std::span<const double> h, const std::vector<bool>& mask) {
    if (h.size() != mask.size()) throw ShapeError("preference and mask lengths differ");
    double top = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t k = 0; k < h.size(); ++k)
        if (mask[k]) {
            any = true;
            top = std::max(top, h[k]);
        }
    if (!any) throw NoFeasibleAction("no feasible action in mask");

    PolicyOutput out{std::vector<double>(h.size(), 0.0), mask};
    double sum = 0;
    for (std::size_t k = 0; k < h.size(); ++k)
        if (mask[k]) {
            out.probs[k] = std::exp(h[k] - top);
            sum += out.probs[k];
        }
    for (double& p : out.probs) p /= sum;
    return out;
}

int sample_action(const PolicyOutput& out, RngStream& rng) {
    const double u = rng.uniform();
    double acc = 0;
    int last = -1;
    for (std::size_t k = 0; k < out.probs.size(); ++k) {
        if (out.probs[k] <= 0) continue;
        acc += out.probs[k];
        last = static_cast<int>(k);
        if (u < acc) return last;
    }
    return last;
}

std::vector<double> grad_log_policy(const Mlp& theta, std::span<const double> features, int k,
                                    const std::vector<bool>& mask) {
    if (k < 0 || k >= static_cast<int>(mask.size()) || !mask[k])
        throw DomainError("grad_log_policy: action index " + std::to_string(k) + " is not feasible");
    Mlp::Tape tape;
    Eigen::VectorXd h = theta.forward(features, &tape);
    PolicyOutput pi = masked_softmax(std::span<const double>(h.data(), h.size()), mask);
    // d ln pi_k / d h_j = [j == k] - pi_j on feasible j, 0 elsewhere.
    Eigen::VectorXd dh(h.size());
    for (int j = 0; j < h.size(); ++j) dh(j) = (j == k ? 1.0 : 0.0) - pi.probs[j];
    return theta.backward(tape, dh);
}

std::vector<double> grad_value(const Mlp& w, std::span<const double> features) {
    if (w.outputs() != 1) throw ShapeError("value network must have a scalar output");
    Mlp::Tape tape;
    w.forward(features, &tape);
    return w.backward(tape, Eigen::VectorXd::Ones(1));
}

}  // namespace edgesmdp
