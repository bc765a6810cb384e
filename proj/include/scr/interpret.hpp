#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scr/data.hpp"
#include "scr/pipeline.hpp"
#include "scr/rng.hpp"

namespace scr {

struct ImportanceConfig {
    // 0 means "use the default rule": max(1, round(0.1 * D)).
    std::size_t group_size = 0;
    std::size_t n_permutations = 2000;
    bool retrain = true;  // shuffle training features and retrain from scratch;
                          // false = cheap mode, shuffle test features under the baseline model
    std::uint64_t master_seed = 0;
    std::size_t workers = 1;
};

struct PermutationRecord {
    std::vector<std::size_t> features;  // the g shuffled feature indices
    double delta_r = 0.0;               // baseline_r - permuted_r
    bool failed = false;                // degenerate run, excluded from scores
};

struct FeatureScore {
    std::size_t feature_index = 0;
    std::string feature_name;
    double mean_delta_r = 0.0;  // NaN when inclusion_count == 0
    std::size_t inclusion_count = 0;
};

struct ImportanceReport {
    double baseline_r = 0.0;
    std::size_t group_size = 0;
    std::size_t completed_permutations = 0;
    std::size_t failed_permutations = 0;
    std::vector<FeatureScore> scores;            // sorted by mean_delta_r descending
    std::vector<PermutationRecord> permutations;  // raw per-permutation results
};

// Returns a copy with each selected column row-shuffled by its own
// permutation; other columns and labels are untouched.
Dataset permute_group(const Dataset& dataset, const std::vector<std::size_t>& feature_indices, Rng& rng);

// Grouped permutation importance. Every permutation derives its randomness
// from (master_seed, permutation index) alone, so reports are identical for
// any worker count.
ImportanceReport run_importance(const Dataset& dataset, const SplitIndices& split,
                                const TrainPlan& plan, const ImportanceConfig& config);

// CSV: `feature_index,feature_name,mean_delta_r,inclusion_count`, sorted by
// mean_delta_r descending; baseline and failure count in `#` header lines.
void save_importance_csv(const ImportanceReport& report, const std::string& path);
std::string importance_csv_string(const ImportanceReport& report);

}  // namespace scr
