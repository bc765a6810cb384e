#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "scr/matrix.hpp"

namespace scr {

enum class Activation { ReLU, Identity };

// One fully connected layer, y = act(x W^T + b). Weights are [out_dim x in_dim].
struct DenseLayer {
    Matrix weights;
    std::vector<double> bias;
    Activation activation = Activation::ReLU;

    std::size_t in_dim() const { return weights.cols(); }
    std::size_t out_dim() const { return weights.rows(); }
};

// Plain feed-forward stack. Layer dims must chain.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<DenseLayer> layers);

    // Fresh network with uniform(-sqrt(6/(fan_in+fan_out)), +...) weights and
    // zero biases. `dims` is {input, hidden..., output}; the final layer gets
    // `final_activation`, all earlier layers ReLU.
    static Mlp make(const std::vector<std::size_t>& dims, Activation final_activation, std::uint64_t seed);

    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }
    std::size_t layer_count() const { return layers_.size(); }
    std::size_t input_dim() const { return layers_.front().in_dim(); }
    std::size_t output_dim() const { return layers_.back().out_dim(); }

    std::size_t parameter_count() const;

    friend bool operator==(const Mlp& a, const Mlp& b);

private:
    std::vector<DenseLayer> layers_;
};

// Pre- and post-activation values for one batch, enough for an exact backward
// pass. `input` is the batch itself.
struct ForwardCache {
    Matrix input;
    std::vector<Matrix> pre;
    std::vector<Matrix> post;
    std::size_t batch_rows() const { return input.rows(); }
};

struct MlpGrads {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> bias;
};

Matrix forward(const Mlp& net, const Matrix& batch, ForwardCache* cache = nullptr);

struct BackwardResult {
    MlpGrads grads;
    Matrix input_grad;
};

// Exact chain rule for the piecewise-linear net; ReLU subgradient at 0 is 0.
BackwardResult backward(const Mlp& net, const ForwardCache& cache, const Matrix& upstream_grad);

// Adam with standard bias correction. Moments mirror the owning network's
// parameter shapes.
struct AdamState {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step_count = 0;

    std::vector<Matrix> m_weights, v_weights;
    std::vector<std::vector<double>> m_bias, v_bias;

    static AdamState for_net(const Mlp& net, double learning_rate);
};

// Flat-buffer update rule; the Mlp-level step is built on this.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, std::uint64_t step_count, double learning_rate, double beta1,
                 double beta2, double epsilon);

// Applies one optimizer step to every parameter of `net`. Refuses non-finite
// gradients, leaving both the network and the state untouched.
void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state);

// loss_and_grad(x, grad_out) evaluates the loss at x and, when grad_out is
// non-empty, writes the analytic gradient. Central differences are compared
// against the analytic gradient at `point`; per-coordinate relative error is
// |analytic - numeric| / max(1, |analytic|, |numeric|).
using LossAndGrad = std::function<double(std::span<const double>, std::span<double>)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
};

GradCheckResult grad_check(const LossAndGrad& loss_and_grad, std::span<const double> point, double eps);

// Pack/unpack helpers used by grad_check harnesses over whole networks.
std::vector<double> flatten_params(const Mlp& net);
void unflatten_params(std::span<const double> flat, Mlp& net);
std::vector<double> flatten_grads(const MlpGrads& grads);

}  // namespace scr
