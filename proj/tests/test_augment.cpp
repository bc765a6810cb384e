#include <doctest.h>

#include <algorithm>
#include <vector>

#include "oracles.hpp"
#include "scr/augment.hpp"
#include "scr/errors.hpp"
#include "scr/rng.hpp"

using namespace scr;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

}  // namespace

TEST_CASE("corrupt_batch: exact floor(c*D) replacements per row across rates and widths") {
    for (const std::size_t d : {std::size_t{10}, std::size_t{100}, std::size_t{953}}) {
        const Matrix pool_values = random_matrix(20, d, 100 + d);
        const ColumnPool pool = make_column_pool(pool_values);
        const Matrix batch = random_matrix(6, d, 200 + d);
        for (const double c : {0.3, 0.4, 0.5, 0.6, 0.7}) {
            Rng rng(7);
            const CorruptResult res = corrupt_batch(batch, pool, CorruptionConfig{c}, rng);
            const std::size_t expected = static_cast<std::size_t>(c * static_cast<double>(d));
            for (const auto& row_mask : res.replaced) CHECK(row_mask.size() == expected);
        }
    }
}

TEST_CASE("corrupt_batch: D=953 at c=0.5 replaces exactly 476 entries per row") {
    const ColumnPool pool = make_column_pool(random_matrix(8, 953, 1));
    const Matrix batch = random_matrix(3, 953, 2);
    Rng rng(3);
    const CorruptResult res = corrupt_batch(batch, pool, CorruptionConfig{0.5}, rng);
    for (const auto& row_mask : res.replaced) CHECK(row_mask.size() == 476);
}

TEST_CASE("corrupt_batch: rate zero is a bit-exact no-op") {
    const ColumnPool pool = make_column_pool(random_matrix(10, 12, 4));
    const Matrix batch = random_matrix(5, 12, 5);
    Rng rng(6);
    const CorruptResult res = corrupt_batch(batch, pool, CorruptionConfig{0.0}, rng);
    CHECK(res.corrupted == batch);
    for (const auto& row_mask : res.replaced) CHECK(row_mask.empty());
}

TEST_CASE("corrupt_batch: untouched positions are bit-identical to the source") {
    const ColumnPool pool = make_column_pool(random_matrix(15, 20, 8));
    const Matrix batch = random_matrix(8, 20, 9);
    Rng rng(10);
    const CorruptResult res = corrupt_batch(batch, pool, CorruptionConfig{0.4}, rng);
    for (std::size_t r = 0; r < batch.rows(); ++r) {
        std::vector<bool> replaced(batch.cols(), false);
        for (std::size_t c : res.replaced[r]) replaced[c] = true;
        for (std::size_t c = 0; c < batch.cols(); ++c) {
            if (!replaced[c]) CHECK(res.corrupted(r, c) == batch(r, c));
        }
    }
}

TEST_CASE("corrupt_batch: every replacement value is a member of its column pool") {
    // Exhaustive membership scan on a 10x5 batch.
    const Matrix pool_values = random_matrix(12, 5, 21);
    const ColumnPool pool = make_column_pool(pool_values);
    const Matrix batch = random_matrix(10, 5, 22);
    Rng rng(23);
    const CorruptResult res = corrupt_batch(batch, pool, CorruptionConfig{0.6}, rng);
    for (std::size_t r = 0; r < batch.rows(); ++r) {
        for (std::size_t c : res.replaced[r]) {
            bool found = false;
            for (std::size_t p = 0; p < pool.pool_size(); ++p) {
                if (res.corrupted(r, c) == pool_values(p, c)) {
                    found = true;
                    break;
                }
            }
            CHECK(found);
        }
    }
}

TEST_CASE("corrupt_batch: dimension mismatch is rejected") {
    const ColumnPool pool = make_column_pool(random_matrix(5, 4, 31));
    const Matrix batch = random_matrix(3, 6, 32);
    Rng rng(33);
    CHECK_THROWS_AS(corrupt_batch(batch, pool, CorruptionConfig{0.5}, rng), ContractError);
}

TEST_CASE("corrupt_batch: replaced-column draws converge to the pool marginal (KS)") {
    // Collect ~1e5 replacement draws for one column and compare against the
    // pool column's empirical distribution.
    const std::size_t d = 4;
    const Matrix pool_values = random_matrix(200, d, 41);
    const ColumnPool pool = make_column_pool(pool_values);
    const Matrix batch = random_matrix(50, d, 42);
    Rng rng(43);

    std::vector<double> draws;
    draws.reserve(110000);
    const std::size_t target_column = 2;
    while (draws.size() < 100000) {
        const CorruptResult res = corrupt_batch(batch, pool, CorruptionConfig{0.5}, rng);
        for (std::size_t r = 0; r < batch.rows(); ++r) {
            for (std::size_t c : res.replaced[r]) {
                if (c == target_column) draws.push_back(res.corrupted(r, c));
            }
        }
    }
    std::vector<double> pool_column(pool_values.rows());
    for (std::size_t p = 0; p < pool_values.rows(); ++p) pool_column[p] = pool_values(p, target_column);
    CHECK(oracle::ks_statistic(draws, pool_column) < 0.05);
}

TEST_CASE("corrupt_batch call counter tracks invocations") {
    const ColumnPool pool = make_column_pool(random_matrix(5, 3, 51));
    const Matrix batch = random_matrix(2, 3, 52);
    Rng rng(53);
    reset_corrupt_batch_call_count();
    corrupt_batch(batch, pool, CorruptionConfig{0.5}, rng);
    corrupt_batch(batch, pool, CorruptionConfig{0.5}, rng);
    CHECK(corrupt_batch_call_count() == 2);
    reset_corrupt_batch_call_count();
}
