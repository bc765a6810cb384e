#include "scr/augment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "scr/errors.hpp"

namespace scr {

namespace {
std::atomic<std::uint64_t> g_corrupt_calls{0};
}

ColumnPool make_column_pool(const Matrix& training_features) {
    if (training_features.rows() == 0) throw ContractError("make_column_pool: empty training matrix");
    return ColumnPool{training_features};
}

CorruptResult corrupt_batch(const Matrix& batch, const ColumnPool& pool, const CorruptionConfig& config,
                            Rng& rng) {
    g_corrupt_calls.fetch_add(1, std::memory_order_relaxed);
    if (batch.cols() != pool.n_features()) {
        throw ContractError("corrupt_batch: batch has " + std::to_string(batch.cols()) +
                            " features, pool has " + std::to_string(pool.n_features()));
    }
    if (!(config.rate >= 0.0 && config.rate <= 1.0)) {
        throw ContractError("corrupt_batch: corruption rate must be in [0, 1]");
    }

    const std::size_t d = batch.cols();
    const std::size_t k = static_cast<std::size_t>(std::floor(config.rate * static_cast<double>(d)));

    CorruptResult result;
    result.corrupted = batch;
    result.replaced.resize(batch.rows());
    if (k == 0) return result;  // rate 0 is a no-op copy

    for (std::size_t r = 0; r < batch.rows(); ++r) {
        std::vector<std::size_t> cols = rng.sample_without_replacement(d, k);
        std::sort(cols.begin(), cols.end());
        double* row = result.corrupted.row(r);
        for (std::size_t c : cols) {
            const std::size_t donor = static_cast<std::size_t>(rng.below(pool.pool_size()));
            row[c] = pool.values(donor, c);
        }
        result.replaced[r] = std::move(cols);
    }
    return result;
}

std::uint64_t corrupt_batch_call_count() { return g_corrupt_calls.load(std::memory_order_relaxed); }

void reset_corrupt_batch_call_count() { g_corrupt_calls.store(0, std::memory_order_relaxed); }

}  // namespace scr
