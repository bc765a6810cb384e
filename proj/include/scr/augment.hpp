#pragma once

#include <cstdint>
#include <vector>

#include "scr/matrix.hpp"
#include "scr/rng.hpp"

namespace scr {

struct CorruptionConfig {
    double rate = 0.5;  // fraction of features replaced per row
};

// Replacement source: per-feature value pools taken from the training split.
struct ColumnPool {
    Matrix values;  // [n_train x D]
    std::size_t n_features() const { return values.cols(); }
    std::size_t pool_size() const { return values.rows(); }
};

ColumnPool make_column_pool(const Matrix& training_features);

struct CorruptResult {
    Matrix corrupted;
    // Per row, the replaced column indices (ascending). A draw that happens to
    // equal the original value still counts as replaced.
    std::vector<std::vector<std::size_t>> replaced;
};

// For each row independently, exactly floor(rate * D) positions chosen
// uniformly without replacement are overwritten by draws from the pool's same
// column; every other entry is bit-identical to the input. Labels are the
// caller's business and ride along unchanged.
CorruptResult corrupt_batch(const Matrix& batch, const ColumnPool& pool, const CorruptionConfig& config,
                            Rng& rng);

// Test probe: number of corrupt_batch invocations since the last reset.
std::uint64_t corrupt_batch_call_count();
void reset_corrupt_batch_call_count();

}  // namespace scr
