#include "edgesmdp/mlp.hpp"

#include <cmath>

#include "edgesmdp/errors.hpp"

namespace edgesmdp {

Mlp::Mlp(int inputs, std::vector<int> hidden, int outputs) {
    if (inputs < 1 || outputs < 1) throw ShapeError("network needs at least one input and output");
    widths_.push_back(inputs);
    for (int h : hidden) {
        if (h < 1) throw ShapeError("hidden width must be positive");
        widths_.push_back(h);
    }
    widths_.push_back(outputs);
    std::size_t total = 0;
    for (int l = 0; l + 1 < static_cast<int>(widths_.size()); ++l) {
        offsets_.push_back(total);
        total += static_cast<std::size_t>(widths_[l + 1]) * (widths_[l] + 1);
    }
    params_.assign(total, 0.0);
}

Mlp Mlp::initialized(int inputs, std::vector<int> hidden, int outputs, RngStream& rng,
                     bool zero_output_layer) {
    Mlp net(inputs, std::move(hidden), outputs);
    for (int l = 0; l < net.layer_count(); ++l) {
        if (zero_output_layer && l + 1 == net.layer_count()) break;
        const double bound = 1.0 / std::sqrt(static_cast<double>(net.widths_[l]));
        const std::size_t n = static_cast<std::size_t>(net.widths_[l + 1]) * (net.widths_[l] + 1);
        for (std::size_t k = 0; k < n; ++k) net.params_[net.offsets_[l] + k] = bound * (2.0 * rng.uniform() - 1.0);
    }
    return net;
}

Mlp Mlp::unflatten(int inputs, std::vector<int> hidden, int outputs, std::vector<double> params) {
    Mlp net(inputs, std::move(hidden), outputs);
    if (params.size() != net.params_.size())
        throw ShapeError("parameter vector length " + std::to_string(params.size()) + " does not match network (" +
                         std::to_string(net.params_.size()) + ")");
    net.params_ = std::move(params);
    return net;
}

Eigen::Map<const Mlp::RowMatrix> Mlp::weight(int l) const {
    return {params_.data() + offsets_[l], widths_[l + 1], widths_[l]};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(int l) const {
    return {params_.data() + offsets_[l] + static_cast<std::size_t>(widths_[l + 1]) * widths_[l], widths_[l + 1]};
}

Eigen::Map<Mlp::RowMatrix> Mlp::weight(int l) { return {params_.data() + offsets_[l], widths_[l + 1], widths_[l]}; }

Eigen::Map<Eigen::VectorXd> Mlp::bias(int l) {
    return {params_.data() + offsets_[l] + static_cast<std::size_t>(widths_[l + 1]) * widths_[l], widths_[l + 1]};
}

Eigen::VectorXd Mlp::forward(std::span<const double> input, Tape* tape) const {
    if (static_cast<int>(input.size()) != inputs())
        throw ShapeError("input length " + std::to_string(input.size()) + " does not match network input " +
                         std::to_string(inputs()));
    Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(input.data(), input.size());
    if (tape) tape->activations.assign(1, h);
    for (int l = 0; l < layer_count(); ++l) {
        Eigen::VectorXd z = weight(l) * h + bias(l);
        if (l + 1 < layer_count()) {
            h = z.array().tanh();
            if (tape) tape->activations.push_back(h);
        } else {
            h = std::move(z);
        }
    }
    return h;
}

std::vector<double> Mlp::backward(const Tape& tape, const Eigen::VectorXd& grad_output) const {
    if (grad_output.size() != outputs()) throw ShapeError("output gradient has wrong length");
    if (static_cast<int>(tape.activations.size()) != layer_count()) throw ShapeError("tape does not match network");
    std::vector<double> grad(params_.size(), 0.0);
    Eigen::VectorXd delta = grad_output;
    for (int l = layer_count() - 1; l >= 0; --l) {
        const Eigen::VectorXd& in = tape.activations[l];
        Eigen::Map<RowMatrix> gw(grad.data() + offsets_[l], widths_[l + 1], widths_[l]);
        Eigen::Map<Eigen::VectorXd> gb(grad.data() + offsets_[l] + static_cast<std::size_t>(widths_[l + 1]) * widths_[l],
                                       widths_[l + 1]);
        gw.noalias() = delta * in.transpose();
        gb = delta;
        if (l > 0) {
            Eigen::VectorXd back = weight(l).transpose() * delta;
            delta = back.array() * (1.0 - in.array().square());
        }
    }
    return grad;
}

}  // namespace edgesmdp
