#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "edgesmdp/env.hpp"

namespace edgesmdp {

// Fully connected network: tanh hidden layers, linear output.
//
// Parameters live in one flat vector; layer l contributes its weight matrix
// (out x in, row-major) followed by its bias. That order is the canonical
// parameter order for gradients, traces and checkpoints.
class Mlp {
public:
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    // Per-call activations kept for backpropagation.
    struct Tape {
        std::vector<Eigen::VectorXd> activations;  // [0] = input, [l] = output of hidden layer l-1
    };

    Mlp() = default;
    // All parameters zero.
    Mlp(int inputs, std::vector<int> hidden, int outputs);

    // uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer.
    static Mlp initialized(int inputs, std::vector<int> hidden, int outputs, RngStream& rng,
                           bool zero_output_layer);
    static Mlp unflatten(int inputs, std::vector<int> hidden, int outputs, std::vector<double> params);

    int inputs() const { return widths_.front(); }
    int outputs() const { return widths_.back(); }
    std::vector<int> hidden() const { return {widths_.begin() + 1, widths_.end() - 1}; }
    int layer_count() const { return static_cast<int>(widths_.size()) - 1; }
    std::size_t param_count() const { return params_.size(); }

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }
    const std::vector<double>& flatten() const { return params_; }

    Eigen::Map<const RowMatrix> weight(int layer) const;
    Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
    Eigen::Map<RowMatrix> weight(int layer);
    Eigen::Map<Eigen::VectorXd> bias(int layer);

    // Throws ShapeError when the input length does not match.
    Eigen::VectorXd forward(std::span<const double> input, Tape* tape = nullptr) const;

    // Gradient of <grad_output, f(input)> w.r.t. the flat parameters, from a
    // tape recorded by forward().
    std::vector<double> backward(const Tape& tape, const Eigen::VectorXd& grad_output) const;

private:
    std::vector<int> widths_;
    std::vector<std::size_t> offsets_;  // start of each layer's weights
    std::vector<double> params_;
};

}  // namespace edgesmdp
