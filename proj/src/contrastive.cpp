#include "scr/contrastive.hpp"

#include <cmath>
#include <string>

#include "scr/errors.hpp"

namespace scr {

void PairMask::set_positive(std::size_t i, std::size_t j) {
    if (i == j) throw ContractError("PairMask: diagonal entries are excluded by construction");
    positive_[i * m_ + j] = 1;
    positive_[j * m_ + i] = 1;
}

std::size_t PairMask::positive_count(std::size_t anchor) const {
    std::size_t count = 0;
    const unsigned char* row = positive_.data() + anchor * m_;
    for (std::size_t j = 0; j < m_; ++j) count += row[j];
    return count;
}

PairMask determine_pairs(const std::vector<double>& labels, double theta) {
    if (!(theta > 0.0) || !std::isfinite(theta)) {
        throw ContractError("determine_pairs: theta must be finite and positive");
    }
    for (double y : labels) {
        if (!std::isfinite(y)) throw ContractError("determine_pairs: non-finite label");
    }
    const std::size_t m = labels.size();
    PairMask mask(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            if (std::abs(labels[i] - labels[j]) < theta) mask.set_positive(i, j);
        }
    }
    return mask;
}

EmbeddingBatch l2_normalize(const Matrix& raw) {
    EmbeddingBatch out;
    out.z = raw;
    out.norms.resize(raw.rows());
    for (std::size_t r = 0; r < raw.rows(); ++r) {
        const double norm = std::sqrt(dot(raw.row(r), raw.row(r), raw.cols()));
        if (norm < 1e-12) {
            throw NumericError("l2_normalize: row " + std::to_string(r) + " has near-zero norm");
        }
        out.norms[r] = norm;
        double* row = out.z.row(r);
        for (std::size_t c = 0; c < raw.cols(); ++c) row[c] /= norm;
    }
    return out;
}

Matrix l2_normalize_backward(const EmbeddingBatch& normalized, const Matrix& grad_z) {
    if (!normalized.z.same_shape(grad_z)) {
        throw ContractError("l2_normalize_backward: gradient shape mismatch");
    }
    Matrix grad_raw(grad_z.rows(), grad_z.cols());
    for (std::size_t r = 0; r < grad_z.rows(); ++r) {
        const double* g = grad_z.row(r);
        const double* u = normalized.z.row(r);  // unit row
        double* out = grad_raw.row(r);
        const double g_dot_u = dot(g, u, grad_z.cols());
        const double inv_norm = 1.0 / normalized.norms[r];
        for (std::size_t c = 0; c < grad_z.cols(); ++c) {
            out[c] = (g[c] - g_dot_u * u[c]) * inv_norm;
        }
    }
    return grad_raw;
}

SupconResult supcon_loss(const EmbeddingBatch& embeddings, const PairMask& mask,
                         const ContrastiveConfig& config) {
    const std::size_t m = embeddings.size();
    if (m < 2) throw ContractError("supcon_loss: need at least two samples");
    if (mask.size() != m) throw ContractError("supcon_loss: mask size does not match batch");
    if (!(config.temperature > 0.0)) throw ContractError("supcon_loss: temperature must be positive");

    const double tau = config.temperature;
    const Matrix similarity = matmul_nt(embeddings.z, embeddings.z);  // [M x M]

    std::size_t contributing = 0;
    for (std::size_t r = 0; r < m; ++r) {
        if (mask.positive_count(r) > 0) ++contributing;
    }
    if (contributing == 0) {
        throw DegenerateBatchError("supcon_loss: degenerate batch, no anchor has a positive pair");
    }
    const double anchor_weight =
        config.aggregate == SupconAggregate::Mean ? 1.0 / static_cast<double>(contributing) : 1.0;

    double loss = 0.0;
    Matrix coeff(m, m);  // dLoss/dS, diagonal stays zero
    std::vector<double> logits(m);
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t n_pos = mask.positive_count(r);
        if (n_pos == 0) continue;  // skipped anchor

        const double* sim_row = similarity.row(r);
        double max_logit = -HUGE_VAL;
        for (std::size_t a = 0; a < m; ++a) {
            if (a == r) continue;
            logits[a] = sim_row[a] / tau;
            if (logits[a] > max_logit) max_logit = logits[a];
        }
        double z_sum = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            if (a == r) continue;
            z_sum += std::exp(logits[a] - max_logit);
        }
        const double log_denominator = max_logit + std::log(z_sum);

        double positive_logit_sum = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            if (a != r && mask.positive(r, a)) positive_logit_sum += logits[a];
        }
        loss += anchor_weight *
                (log_denominator - positive_logit_sum / static_cast<double>(n_pos));

        const double inv_tau_pos = 1.0 / (tau * static_cast<double>(n_pos));
        double* coeff_row = coeff.row(r);
        for (std::size_t a = 0; a < m; ++a) {
            if (a == r) continue;
            const double softmax = std::exp(logits[a] - max_logit) / z_sum;
            double c = softmax / tau;
            if (mask.positive(r, a)) c -= inv_tau_pos;
            coeff_row[a] = anchor_weight * c;
        }
    }

    // dLoss/dZ = (C + C^T) Z since S is the Gram matrix of Z.
    Matrix sym(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) sym(i, j) = coeff(i, j) + coeff(j, i);
    }
    SupconResult result;
    result.loss = loss;
    result.grad_z = matmul_nn(sym, embeddings.z);
    result.anchors_used = contributing;
    return result;
}

}  // namespace scr
