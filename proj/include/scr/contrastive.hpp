#pragma once

#include <vector>

#include "scr/errors.hpp"
#include "scr/matrix.hpp"

namespace scr {

// No anchor in the batch has a positive pair; the caller must resample.
struct DegenerateBatchError : Error {
    explicit DegenerateBatchError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

enum class SupconAggregate {
    Mean,  // average over anchors with at least one positive (batch-size independent scale)
    Sum,   // literal sum over anchors
};

struct ContrastiveConfig {
    double temperature = 1.0;
    double label_threshold = 0.35;
    SupconAggregate aggregate = SupconAggregate::Mean;
};

// Symmetric boolean positive-pair relation over a combined batch; the diagonal
// is excluded by construction.
class PairMask {
public:
    PairMask() = default;
    explicit PairMask(std::size_t m) : m_(m), positive_(m * m, 0) {}

    std::size_t size() const { return m_; }
    bool positive(std::size_t i, std::size_t j) const { return positive_[i * m_ + j] != 0; }
    void set_positive(std::size_t i, std::size_t j);
    std::size_t positive_count(std::size_t anchor) const;

private:
    std::size_t m_ = 0;
    std::vector<unsigned char> positive_;
};

// positive(i, j) = (i != j) && (|y_i - y_j| < theta), strict inequality.
PairMask determine_pairs(const std::vector<double>& labels, double theta);

// Projector outputs with rows scaled to unit Euclidean norm; `norms` keeps the
// original row norms so gradients can be pushed back through the scaling.
struct EmbeddingBatch {
    Matrix z;
    std::vector<double> norms;
    std::size_t size() const { return z.rows(); }
    std::size_t dim() const { return z.cols(); }
};

EmbeddingBatch l2_normalize(const Matrix& raw);
// Given dLoss/dz for the normalized rows, returns dLoss/draw.
Matrix l2_normalize_backward(const EmbeddingBatch& normalized, const Matrix& grad_z);

struct SupconResult {
    double loss = 0.0;
    Matrix grad_z;                  // dLoss/dz, [M x E]
    std::size_t anchors_used = 0;   // anchors with a non-empty positive set
};

// Supervised contrastive loss over normalized embeddings. Anchors without
// positives are skipped. Log-sum-exp denominators use max subtraction.
SupconResult supcon_loss(const EmbeddingBatch& embeddings, const PairMask& mask,
                         const ContrastiveConfig& config);

}  // namespace scr
