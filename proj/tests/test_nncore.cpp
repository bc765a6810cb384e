#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "scr/errors.hpp"
#include "scr/nn.hpp"
#include "scr/rng.hpp"

using namespace scr;

namespace {

Mlp single_layer(Matrix weights, std::vector<double> bias, Activation act) {
    DenseLayer layer;
    layer.weights = std::move(weights);
    layer.bias = std::move(bias);
    layer.activation = act;
    return Mlp({layer});
}

Matrix identity_matrix(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

}  // namespace

TEST_CASE("forward: identity layer with identity weights is the identity map") {
    Mlp net = single_layer(identity_matrix(2), {0.0, 0.0}, Activation::Identity);
    Matrix in(1, 2);
    in(0, 0) = 1.0;
    in(0, 1) = 2.0;
    const Matrix out = forward(net, in);
    CHECK(out(0, 0) == 1.0);
    CHECK(out(0, 1) == 2.0);
}

TEST_CASE("forward: ReLU clamps negatives") {
    Mlp net = single_layer(identity_matrix(2), {0.0, 0.0}, Activation::ReLU);
    Matrix in(1, 2);
    in(0, 0) = -3.0;
    in(0, 1) = 5.0;
    const Matrix out = forward(net, in);
    CHECK(out(0, 0) == 0.0);
    CHECK(out(0, 1) == 5.0);
}

TEST_CASE("forward: zero weights make the output a function of biases alone") {
    DenseLayer l1;
    l1.weights = Matrix(3, 2, 0.0);
    l1.bias = {0.5, -1.0, 2.0};
    l1.activation = Activation::ReLU;
    DenseLayer l2;
    l2.weights = Matrix(2, 3, 0.0);
    l2.bias = {4.0, -7.0};
    l2.activation = Activation::Identity;
    Mlp net({l1, l2});

    Matrix a(1, 2);
    a(0, 0) = 10.0;
    a(0, 1) = -3.0;
    Matrix b(1, 2);
    b(0, 0) = -123.0;
    b(0, 1) = 0.25;
    const Matrix out_a = forward(net, a);
    const Matrix out_b = forward(net, b);
    CHECK(out_a(0, 0) == 4.0);
    CHECK(out_a(0, 1) == -7.0);
    CHECK(out_a == out_b);
}

TEST_CASE("forward: dimension mismatch and non-finite input are rejected") {
    Mlp net = single_layer(identity_matrix(2), {0.0, 0.0}, Activation::Identity);
    CHECK_THROWS_AS(forward(net, Matrix(1, 3)), ContractError);
    Matrix bad(1, 2);
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(forward(net, bad), NumericError);
}

TEST_CASE("forward is a pure function of weights and input") {
    Rng rng(7);
    Mlp net = Mlp::make({5, 8, 3}, Activation::Identity, 11);
    const Matrix batch = random_matrix(4, 5, rng);
    const Matrix a = forward(net, batch);
    const Matrix b = forward(net, batch);
    CHECK(a == b);  // bit-identical
}

TEST_CASE("backward: identity layer gradient matches finite differences") {
    Rng rng(3);
    Mlp net = single_layer(random_matrix(3, 4, rng), {0.1, -0.2, 0.3}, Activation::Identity);
    const Matrix batch = random_matrix(5, 4, rng);
    const Matrix upstream = random_matrix(5, 3, rng);

    ForwardCache cache;
    forward(net, batch, &cache);
    const BackwardResult analytic = backward(net, cache, upstream);

    // Loss implied by a fixed upstream gradient: L = sum(upstream .* output).
    const auto loss_of = [&](const std::vector<double>& flat) {
        Mlp probe = net;
        unflatten_params(flat, probe);
        const Matrix out = forward(probe, batch);
        double v = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) v += out.data()[i] * upstream.data()[i];
        return v;
    };
    const std::vector<double> fd = oracle::finite_difference_gradient(loss_of, flatten_params(net), 1e-5);
    const std::vector<double> an = flatten_grads(analytic.grads);
    REQUIRE(fd.size() == an.size());
    for (std::size_t i = 0; i < fd.size(); ++i) {
        const double denom = std::max({1.0, std::abs(fd[i]), std::abs(an[i])});
        CHECK(std::abs(fd[i] - an[i]) / denom < 1e-6);
    }
}

TEST_CASE("backward: zero upstream gradient gives exactly zero gradients") {
    Rng rng(5);
    Mlp net = Mlp::make({4, 6, 2}, Activation::Identity, 99);
    const Matrix batch = random_matrix(3, 4, rng);
    ForwardCache cache;
    forward(net, batch, &cache);
    const BackwardResult res = backward(net, cache, Matrix(3, 2, 0.0));
    for (const Matrix& g : res.grads.weights) {
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.data()[i] == 0.0);
    }
    for (const auto& g : res.grads.bias) {
        for (double v : g) CHECK(v == 0.0);
    }
    for (std::size_t i = 0; i < res.input_grad.size(); ++i) CHECK(res.input_grad.data()[i] == 0.0);
}

TEST_CASE("backward: dead ReLU unit has exactly zero incoming weight gradients") {
    // One ReLU unit driven negative on every batch row.
    Matrix w(2, 2);
    w(0, 0) = 1.0;
    w(0, 1) = 0.0;
    w(1, 0) = -5.0;  // unit 1 sees -5*x0 - 5*x1 < 0 for positive inputs
    w(1, 1) = -5.0;
    Mlp net = single_layer(std::move(w), {0.0, 0.0}, Activation::ReLU);
    Matrix batch(2, 2);
    batch(0, 0) = 1.0;
    batch(0, 1) = 2.0;
    batch(1, 0) = 0.5;
    batch(1, 1) = 1.5;
    ForwardCache cache;
    forward(net, batch, &cache);
    const BackwardResult res = backward(net, cache, Matrix(2, 2, 1.0));
    CHECK(res.grads.weights[0](1, 0) == 0.0);
    CHECK(res.grads.weights[0](1, 1) == 0.0);
    CHECK(res.grads.bias[0][1] == 0.0);
    CHECK(res.grads.weights[0](0, 0) != 0.0);  // live unit still learns
}

TEST_CASE("backward: mismatched cache is rejected") {
    Rng rng(8);
    Mlp net = Mlp::make({3, 4, 2}, Activation::Identity, 1);
    Mlp other = Mlp::make({3, 5, 2}, Activation::Identity, 2);
    const Matrix batch = random_matrix(2, 3, rng);
    ForwardCache cache;
    forward(other, batch, &cache);
    CHECK_THROWS_AS(backward(net, cache, Matrix(2, 2, 0.0)), ContractError);
}

TEST_CASE("adam: hand-evaluated first step") {
    std::vector<double> param = {0.0};
    std::vector<double> grad = {0.5};
    std::vector<double> m = {0.0}, v = {0.0};
    adam_update(param, grad, m, v, 1, 0.001, 0.9, 0.999, 1e-8);
    CHECK(m[0] == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(v[0] == doctest::Approx(2.5e-4).epsilon(1e-12));
    // m_hat = 0.5, v_hat = 0.25, update = 0.001 * 0.5 / (0.5 + 1e-8)
    CHECK(param[0] == doctest::Approx(-0.001).epsilon(1e-7));
}

TEST_CASE("adam: zero gradient with fresh state leaves parameters unchanged") {
    Mlp net = Mlp::make({3, 4, 1}, Activation::Identity, 42);
    const Mlp before = net;
    AdamState state = AdamState::for_net(net, 0.001);
    MlpGrads grads;
    for (const auto& layer : net.layers()) {
        grads.weights.emplace_back(layer.weights.rows(), layer.weights.cols());
        grads.bias.emplace_back(layer.bias.size(), 0.0);
    }
    adam_step(net, grads, state);
    CHECK(net == before);
    CHECK(state.step_count == 1);
}

TEST_CASE("adam: two successive identical positive gradients strictly decrease the parameter") {
    std::vector<double> param = {0.3};
    std::vector<double> m = {0.0}, v = {0.0};
    const std::vector<double> grad = {0.7};
    const double p0 = param[0];
    adam_update(param, grad, m, v, 1, 0.001, 0.9, 0.999, 1e-8);
    const double p1 = param[0];
    adam_update(param, grad, m, v, 2, 0.001, 0.9, 0.999, 1e-8);
    const double p2 = param[0];
    CHECK(p1 < p0);
    CHECK(p2 < p1);
}

TEST_CASE("adam: non-finite gradient refuses the step and leaves state untouched") {
    Mlp net = Mlp::make({2, 2, 1}, Activation::Identity, 5);
    const Mlp before = net;
    AdamState state = AdamState::for_net(net, 0.001);
    MlpGrads grads;
    for (const auto& layer : net.layers()) {
        grads.weights.emplace_back(layer.weights.rows(), layer.weights.cols());
        grads.bias.emplace_back(layer.bias.size(), 0.0);
    }
    grads.weights[0](0, 0) = std::nan("");
    CHECK_THROWS_AS(adam_step(net, grads, state), NumericError);
    CHECK(net == before);
    CHECK(state.step_count == 0);
}

TEST_CASE("grad_check: quadratic loss |Wx - y|^2") {
    Rng rng(17);
    const std::size_t out_dim = 3, in_dim = 4;
    const Matrix x = random_matrix(1, in_dim, rng);
    std::vector<double> y(out_dim);
    for (double& v : y) v = rng.normal();

    // Parameters are the entries of W; analytic gradient dL/dW = 2 (Wx - y) x^T.
    const LossAndGrad loss = [&](std::span<const double> flat, std::span<double> grad) {
        double value = 0.0;
        std::vector<double> residual(out_dim, 0.0);
        for (std::size_t o = 0; o < out_dim; ++o) {
            double wx = 0.0;
            for (std::size_t i = 0; i < in_dim; ++i) wx += flat[o * in_dim + i] * x(0, i);
            residual[o] = wx - y[o];
            value += residual[o] * residual[o];
        }
        if (!grad.empty()) {
            for (std::size_t o = 0; o < out_dim; ++o) {
                for (std::size_t i = 0; i < in_dim; ++i) grad[o * in_dim + i] = 2.0 * residual[o] * x(0, i);
            }
        }
        return value;
    };
    std::vector<double> point(out_dim * in_dim);
    for (double& v : point) v = rng.normal();
    const GradCheckResult res = grad_check(loss, point, 1e-5);
    CHECK(res.max_rel_error < 1e-7);
}

TEST_CASE("grad_check: constant loss reports zero error") {
    const LossAndGrad loss = [](std::span<const double>, std::span<double> grad) {
        for (double& g : grad) g = 0.0;
        return 42.0;
    };
    const std::vector<double> point = {1.0, -2.0, 3.0};
    const GradCheckResult res = grad_check(loss, point, 1e-4);
    CHECK(res.max_rel_error == 0.0);
}

TEST_CASE("grad_check: rejects eps outside (0, 1e-2]") {
    const LossAndGrad loss = [](std::span<const double>, std::span<double>) { return 0.0; };
    const std::vector<double> point = {0.0};
    CHECK_THROWS_AS(grad_check(loss, point, 0.0), ContractError);
    CHECK_THROWS_AS(grad_check(loss, point, 0.1), ContractError);
}

TEST_CASE("composition: stacked encoder+projector equals the concatenated Mlp") {
    Rng rng(23);
    Mlp encoder = Mlp::make({6, 8, 8}, Activation::ReLU, 31);
    Mlp projector = Mlp::make({8, 8, 4}, Activation::Identity, 37);
    std::vector<DenseLayer> merged = encoder.layers();
    for (const auto& layer : projector.layers()) merged.push_back(layer);
    Mlp concatenated(merged);

    const Matrix batch = random_matrix(5, 6, rng);
    const Matrix upstream = random_matrix(5, 4, rng);

    ForwardCache enc_cache, proj_cache, cat_cache;
    const Matrix h = forward(encoder, batch, &enc_cache);
    const Matrix out_stacked = forward(projector, h, &proj_cache);
    const Matrix out_concat = forward(concatenated, batch, &cat_cache);
    CHECK(out_stacked == out_concat);  // identical operations, bit-identical

    const BackwardResult proj_back = backward(projector, proj_cache, upstream);
    const BackwardResult enc_back = backward(encoder, enc_cache, proj_back.input_grad);
    const BackwardResult cat_back = backward(concatenated, cat_cache, upstream);

    std::vector<double> stacked = flatten_grads(enc_back.grads);
    const std::vector<double> tail = flatten_grads(proj_back.grads);
    stacked.insert(stacked.end(), tail.begin(), tail.end());
    const std::vector<double> merged_grads = flatten_grads(cat_back.grads);
    REQUIRE(stacked.size() == merged_grads.size());
    for (std::size_t i = 0; i < stacked.size(); ++i) CHECK(stacked[i] == merged_grads[i]);
    CHECK(enc_back.input_grad == cat_back.input_grad);
}

TEST_CASE("pipeline network configurations: backward matches finite differences") {
    // Same depth structure as the real models, small widths, batch <= 16.
    Rng rng(29);
    const std::vector<std::vector<std::size_t>> configs = {
        {7, 12, 12, 12, 12},  // encoder shape (4 layers)
        {12, 12, 12},         // projector shape (2 layers)
        {12, 12, 1},          // regressor shape (2 layers)
    };
    for (const auto& dims : configs) {
        Mlp net = Mlp::make(dims, Activation::Identity, 1000 + dims.size());
        const Matrix batch = random_matrix(9, dims.front(), rng);
        const Matrix upstream = random_matrix(9, dims.back(), rng);

        ForwardCache cache;
        forward(net, batch, &cache);
        const std::vector<double> analytic = flatten_grads(backward(net, cache, upstream).grads);
        const auto loss_of = [&](const std::vector<double>& flat) {
            Mlp probe = net;
            unflatten_params(flat, probe);
            const Matrix out = forward(probe, batch);
            double v = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) v += out.data()[i] * upstream.data()[i];
            return v;
        };
        const std::vector<double> fd =
            oracle::finite_difference_gradient(loss_of, flatten_params(net), 1e-6);
        for (std::size_t i = 0; i < fd.size(); ++i) {
            const double denom = std::max({1.0, std::abs(fd[i]), std::abs(analytic[i])});
            CHECK(std::abs(fd[i] - analytic[i]) / denom < 1e-5);
        }
    }
}

TEST_CASE("Mlp construction rejects non-chaining dims and misplaced Identity") {
    DenseLayer a;
    a.weights = Matrix(4, 3);
    a.bias.assign(4, 0.0);
    a.activation = Activation::ReLU;
    DenseLayer b;
    b.weights = Matrix(2, 5);  // expects 4 inputs
    b.bias.assign(2, 0.0);
    b.activation = Activation::Identity;
    CHECK_THROWS_AS(Mlp({a, b}), ContractError);

    DenseLayer c = a;
    c.activation = Activation::Identity;  // Identity before the final layer
    DenseLayer d;
    d.weights = Matrix(2, 4);
    d.bias.assign(2, 0.0);
    d.activation = Activation::Identity;
    CHECK_THROWS_AS(Mlp({c, d}), ContractError);
}
