#include "scr/gradcheck.hpp"

#include <cmath>

#include "scr/augment.hpp"
#include "scr/contrastive.hpp"
#include "scr/pipeline.hpp"
#include "scr/rng.hpp"

namespace scr {

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

// Shared packing: networks are laid out back to back in the flat vector.
std::vector<double> pack(const Mlp& a, const Mlp& b) {
    std::vector<double> flat = flatten_params(a);
    const std::vector<double> tail = flatten_params(b);
    flat.insert(flat.end(), tail.begin(), tail.end());
    return flat;
}

void unpack(std::span<const double> flat, Mlp& a, Mlp& b) {
    const std::size_t na = a.parameter_count();
    unflatten_params(flat.subspan(0, na), a);
    unflatten_params(flat.subspan(na), b);
}

}  // namespace

GradCheckOutcome run_gradcheck(std::uint64_t seed, double analytic_perturbation) {
    // Small widths keep 2*n_params loss evaluations cheap; the layer structure
    // matches the real pipeline (4-layer encoder, 2-layer heads).
    constexpr std::size_t kBatch = 8;
    constexpr std::size_t kFeatures = 12;
    constexpr std::size_t kWidth = 16;

    GradCheckOutcome outcome;

    // --- MSE fine-tune path ------------------------------------------------
    {
        Rng rng(derive_seed(seed, "gradcheck.mse"));
        const Matrix batch = random_matrix(kBatch, kFeatures, rng);
        std::vector<double> labels(kBatch);
        for (double& y : labels) y = rng.uniform(-3.0, 3.0);

        Mlp encoder = Mlp::make({kFeatures, kWidth, kWidth, kWidth, kWidth}, Activation::ReLU,
                                derive_seed(seed, "gradcheck.mse.encoder"));
        Mlp regressor = Mlp::make({kWidth, kWidth, 1}, Activation::Identity,
                                  derive_seed(seed, "gradcheck.mse.regressor"));

        const LossAndGrad loss = [&](std::span<const double> point, std::span<double> grad) {
            unpack(point, encoder, regressor);
            ForwardCache enc_cache, reg_cache;
            const bool want_grad = !grad.empty();
            const Matrix h = forward(encoder, batch, want_grad ? &enc_cache : nullptr);
            const Matrix pred = forward(regressor, h, want_grad ? &reg_cache : nullptr);
            double value = 0.0;
            for (std::size_t r = 0; r < kBatch; ++r) {
                const double diff = pred(r, 0) - labels[r];
                value += diff * diff;
            }
            value /= static_cast<double>(kBatch);
            if (want_grad) {
                Matrix upstream(kBatch, 1);
                for (std::size_t r = 0; r < kBatch; ++r) {
                    upstream(r, 0) = 2.0 * (pred(r, 0) - labels[r]) / static_cast<double>(kBatch);
                }
                const BackwardResult reg_back = backward(regressor, reg_cache, upstream);
                const BackwardResult enc_back = backward(encoder, enc_cache, reg_back.input_grad);
                std::vector<double> flat = flatten_grads(enc_back.grads);
                const std::vector<double> tail = flatten_grads(reg_back.grads);
                flat.insert(flat.end(), tail.begin(), tail.end());
                for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = flat[i];
                grad[0] += analytic_perturbation;
            }
            return value;
        };

        const std::vector<double> point = pack(encoder, regressor);
        outcome.mse_path = grad_check(loss, point, 1e-6);
    }

    // --- Full SCR pretraining path ------------------------------------------
    {
        Rng rng(derive_seed(seed, "gradcheck.scr"));
        const Matrix batch = random_matrix(kBatch, kFeatures, rng);
        std::vector<double> labels(kBatch);
        for (double& y : labels) y = rng.uniform(-3.0, 3.0);

        // Corruption is data preparation: the corrupted copy is fixed before
        // parameters are differentiated.
        const ColumnPool pool = make_column_pool(random_matrix(32, kFeatures, rng));
        Rng corruption_rng(derive_seed(seed, "gradcheck.scr.corruption"));
        const CorruptResult corrupted = corrupt_batch(batch, pool, CorruptionConfig{0.5}, corruption_rng);
        const Matrix combined = vstack(batch, corrupted.corrupted);
        std::vector<double> combined_labels = labels;
        combined_labels.insert(combined_labels.end(), labels.begin(), labels.end());

        const ContrastiveConfig cfg{1.0, 0.35, SupconAggregate::Mean};
        const PairMask mask = determine_pairs(combined_labels, cfg.label_threshold);

        Mlp encoder = Mlp::make({kFeatures, kWidth, kWidth, kWidth, kWidth}, Activation::ReLU,
                                derive_seed(seed, "gradcheck.scr.encoder"));
        Mlp projector = Mlp::make({kWidth, kWidth, kWidth}, Activation::Identity,
                                  derive_seed(seed, "gradcheck.scr.projector"));

        const LossAndGrad loss = [&](std::span<const double> point, std::span<double> grad) {
            unpack(point, encoder, projector);
            ForwardCache enc_cache, proj_cache;
            const bool want_grad = !grad.empty();
            const Matrix h = forward(encoder, combined, want_grad ? &enc_cache : nullptr);
            const Matrix raw = forward(projector, h, want_grad ? &proj_cache : nullptr);
            const EmbeddingBatch embeddings = l2_normalize(raw);
            const SupconResult result = supcon_loss(embeddings, mask, cfg);
            if (want_grad) {
                const Matrix grad_raw = l2_normalize_backward(embeddings, result.grad_z);
                const BackwardResult proj_back = backward(projector, proj_cache, grad_raw);
                const BackwardResult enc_back = backward(encoder, enc_cache, proj_back.input_grad);
                std::vector<double> flat = flatten_grads(enc_back.grads);
                const std::vector<double> tail = flatten_grads(proj_back.grads);
                flat.insert(flat.end(), tail.begin(), tail.end());
                for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = flat[i];
                grad[0] += analytic_perturbation;
            }
            return result.loss;
        };

        const std::vector<double> point = pack(encoder, projector);
        outcome.scr_path = grad_check(loss, point, 1e-6);
    }

    return outcome;
}

}  // namespace scr
