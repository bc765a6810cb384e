#include "scr/nn.hpp"

#include <cmath>
#include <cstring>

#include "scr/errors.hpp"
#include "scr/rng.hpp"

namespace scr {

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ContractError("Mlp requires at least one layer");
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
        if (layers_[i].out_dim() != layers_[i + 1].in_dim()) {
            throw ContractError("Mlp layer dims do not chain at layer " + std::to_string(i));
        }
        if (layers_[i].activation == Activation::Identity) {
            throw ContractError("Identity activation is only allowed on the final layer");
        }
    }
    for (const auto& layer : layers_) {
        if (layer.bias.size() != layer.out_dim()) {
            throw ContractError("bias length does not match layer out_dim");
        }
    }
}

Mlp Mlp::make(const std::vector<std::size_t>& dims, Activation final_activation, std::uint64_t seed) {
    if (dims.size() < 2) throw ContractError("Mlp::make needs at least input and output dims");
    Rng rng(seed);
    std::vector<DenseLayer> layers;
    layers.reserve(dims.size() - 1);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        DenseLayer layer;
        const std::size_t fan_in = dims[i], fan_out = dims[i + 1];
        layer.weights = Matrix(fan_out, fan_in);
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (std::size_t j = 0; j < layer.weights.size(); ++j) {
            layer.weights.data()[j] = rng.uniform(-bound, bound);
        }
        layer.bias.assign(fan_out, 0.0);
        layer.activation = (i + 2 == dims.size()) ? final_activation : Activation::ReLU;
        layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += layer.weights.size() + layer.bias.size();
    return n;
}

bool operator==(const Mlp& a, const Mlp& b) {
    if (a.layers_.size() != b.layers_.size()) return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i) {
        if (!(a.layers_[i].weights == b.layers_[i].weights)) return false;
        if (a.layers_[i].bias != b.layers_[i].bias) return false;
        if (a.layers_[i].activation != b.layers_[i].activation) return false;
    }
    return true;
}

Matrix forward(const Mlp& net, const Matrix& batch, ForwardCache* cache) {
    if (net.layer_count() == 0) throw ContractError("forward on empty Mlp");
    if (batch.cols() != net.input_dim()) {
        throw ContractError("forward: batch has " + std::to_string(batch.cols()) +
                            " columns, net expects " + std::to_string(net.input_dim()));
    }
    if (!all_finite(batch)) throw NumericError("forward: non-finite entry in input batch");

    if (cache) {
        cache->input = batch;
        cache->pre.clear();
        cache->post.clear();
        cache->pre.reserve(net.layer_count());
        cache->post.reserve(net.layer_count());
    }

    Matrix current = batch;
    for (std::size_t li = 0; li < net.layer_count(); ++li) {
        const DenseLayer& layer = net.layers()[li];
        Matrix z = matmul_nt(current, layer.weights);
        for (std::size_t r = 0; r < z.rows(); ++r) {
            double* zr = z.row(r);
            for (std::size_t c = 0; c < z.cols(); ++c) zr[c] += layer.bias[c];
        }
        if (!all_finite(z)) {
            throw NumericError("forward: non-finite value produced at layer " + std::to_string(li));
        }
        Matrix a = z;
        if (layer.activation == Activation::ReLU) {
            double* p = a.data();
            for (std::size_t i = 0; i < a.size(); ++i) p[i] = p[i] > 0.0 ? p[i] : 0.0;
        }
        if (cache) {
            cache->pre.push_back(std::move(z));
            cache->post.push_back(a);
        }
        current = std::move(a);
    }
    return current;
}

BackwardResult backward(const Mlp& net, const ForwardCache& cache, const Matrix& upstream_grad) {
    const std::size_t n_layers = net.layer_count();
    if (cache.pre.size() != n_layers || cache.post.size() != n_layers) {
        throw ContractError("backward: cache depth does not match layer count");
    }
    if (upstream_grad.rows() != cache.batch_rows() || upstream_grad.cols() != net.output_dim()) {
        throw ContractError("backward: upstream_grad shape mismatch");
    }
    for (std::size_t li = 0; li < n_layers; ++li) {
        if (cache.pre[li].rows() != cache.batch_rows() || cache.pre[li].cols() != net.layers()[li].out_dim()) {
            throw ContractError("backward: stale or mismatched cache at layer " + std::to_string(li));
        }
    }

    BackwardResult result;
    result.grads.weights.resize(n_layers);
    result.grads.bias.resize(n_layers);

    Matrix grad = upstream_grad;  // d loss / d post-activation of current layer
    for (std::size_t li = n_layers; li-- > 0;) {
        const DenseLayer& layer = net.layers()[li];
        // Through the activation: ReLU passes grad where pre > 0 (0 at 0).
        if (layer.activation == Activation::ReLU) {
            const Matrix& pre = cache.pre[li];
            double* g = grad.data();
            const double* z = pre.data();
            for (std::size_t i = 0; i < grad.size(); ++i) {
                if (z[i] <= 0.0) g[i] = 0.0;
            }
        }
        const Matrix& layer_input = (li == 0) ? cache.input : cache.post[li - 1];
        result.grads.weights[li] = matmul_tn(grad, layer_input);  // [out x in]
        std::vector<double>& db = result.grads.bias[li];
        db.assign(layer.out_dim(), 0.0);
        for (std::size_t r = 0; r < grad.rows(); ++r) {
            const double* gr = grad.row(r);
            for (std::size_t c = 0; c < grad.cols(); ++c) db[c] += gr[c];
        }
        if (li > 0) {
            grad = matmul_nn(grad, layer.weights);  // to previous layer's post-activation
        } else {
            result.input_grad = matmul_nn(grad, layer.weights);
        }
    }
    return result;
}

AdamState AdamState::for_net(const Mlp& net, double learning_rate) {
    AdamState state;
    state.learning_rate = learning_rate;
    for (const auto& layer : net.layers()) {
        state.m_weights.emplace_back(layer.weights.rows(), layer.weights.cols());
        state.v_weights.emplace_back(layer.weights.rows(), layer.weights.cols());
        state.m_bias.emplace_back(layer.bias.size(), 0.0);
        state.v_bias.emplace_back(layer.bias.size(), 0.0);
    }
    return state;
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, std::uint64_t step_count, double learning_rate, double beta1,
                 double beta2, double epsilon) {
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
    }
}

void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state) {
    const std::size_t n_layers = net.layer_count();
    if (grads.weights.size() != n_layers || grads.bias.size() != n_layers ||
        state.m_weights.size() != n_layers) {
        throw ContractError("adam_step: grads/state layer count mismatch");
    }
    for (std::size_t li = 0; li < n_layers; ++li) {
        if (!grads.weights[li].same_shape(net.layers()[li].weights) ||
            grads.bias[li].size() != net.layers()[li].bias.size()) {
            throw ContractError("adam_step: gradient shape mismatch at layer " + std::to_string(li));
        }
        if (!all_finite(grads.weights[li]) || !all_finite(grads.bias[li])) {
            throw NumericError("adam_step: non-finite gradient at layer " + std::to_string(li) +
                               " (step refused)");
        }
    }
    state.step_count += 1;
    for (std::size_t li = 0; li < n_layers; ++li) {
        DenseLayer& layer = net.layers()[li];
        adam_update({layer.weights.data(), layer.weights.size()},
                    {grads.weights[li].data(), grads.weights[li].size()},
                    {state.m_weights[li].data(), state.m_weights[li].size()},
                    {state.v_weights[li].data(), state.v_weights[li].size()}, state.step_count,
                    state.learning_rate, state.beta1, state.beta2, state.epsilon);
        adam_update(layer.bias, grads.bias[li], state.m_bias[li], state.v_bias[li], state.step_count,
                    state.learning_rate, state.beta1, state.beta2, state.epsilon);
    }
}

GradCheckResult grad_check(const LossAndGrad& loss_and_grad, std::span<const double> point, double eps) {
    if (!(eps > 0.0 && eps <= 1e-2)) throw ContractError("grad_check: eps must be in (0, 1e-2]");
    std::vector<double> analytic(point.size(), 0.0);
    loss_and_grad(point, analytic);

    std::vector<double> x(point.begin(), point.end());
    GradCheckResult result;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + eps;
        const double up = loss_and_grad(x, {});
        x[i] = saved - eps;
        const double down = loss_and_grad(x, {});
        x[i] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
        const double rel = std::abs(analytic[i] - numeric) / denom;
        if (rel > result.max_rel_error) {
            result.max_rel_error = rel;
            result.worst_index = i;
        }
    }
    return result;
}

std::vector<double> flatten_params(const Mlp& net) {
    std::vector<double> flat;
    flat.reserve(net.parameter_count());
    for (const auto& layer : net.layers()) {
        flat.insert(flat.end(), layer.weights.data(), layer.weights.data() + layer.weights.size());
        flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
    }
    return flat;
}

void unflatten_params(std::span<const double> flat, Mlp& net) {
    std::size_t pos = 0;
    for (auto& layer : net.layers()) {
        std::memcpy(layer.weights.data(), flat.data() + pos, layer.weights.size() * sizeof(double));
        pos += layer.weights.size();
        std::memcpy(layer.bias.data(), flat.data() + pos, layer.bias.size() * sizeof(double));
        pos += layer.bias.size();
    }
    if (pos != flat.size()) throw ContractError("unflatten_params: size mismatch");
}

std::vector<double> flatten_grads(const MlpGrads& grads) {
    std::vector<double> flat;
    for (std::size_t li = 0; li < grads.weights.size(); ++li) {
        flat.insert(flat.end(), grads.weights[li].data(),
                    grads.weights[li].data() + grads.weights[li].size());
        flat.insert(flat.end(), grads.bias[li].begin(), grads.bias[li].end());
    }
    return flat;
}

}  // namespace scr
