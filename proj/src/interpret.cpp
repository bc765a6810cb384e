#include "scr/interpret.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "scr/errors.hpp"
#include "scr/metrics.hpp"

namespace scr {

namespace {

void permute_columns_in_rows(Dataset& dataset, const std::vector<std::size_t>& feature_indices,
                             const std::vector<std::size_t>& rows, Rng& rng) {
    std::vector<double> values(rows.size());
    for (std::size_t c : feature_indices) {
        if (c >= dataset.n_features()) {
            throw ContractError("permute_group: feature index " + std::to_string(c) + " out of range");
        }
        for (std::size_t i = 0; i < rows.size(); ++i) values[i] = dataset.features(rows[i], c);
        rng.shuffle(values);
        for (std::size_t i = 0; i < rows.size(); ++i) dataset.features(rows[i], c) = values[i];
    }
}

std::size_t effective_group_size(const ImportanceConfig& config, std::size_t d) {
    std::size_t g = config.group_size;
    if (g == 0) g = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(d))));
    if (g > d) throw ConfigError("importance: group size exceeds feature count");
    return g;
}

double test_pearson(const ModelBundle& bundle, const Dataset& raw, const SplitIndices& split) {
    const Dataset standardized = apply(bundle.standardizer, raw);
    const Dataset test = take_rows(standardized, split.test);
    return pearson_r(predict(bundle, test), test.labels);
}

}  // namespace

Dataset permute_group(const Dataset& dataset, const std::vector<std::size_t>& feature_indices, Rng& rng) {
    std::vector<std::size_t> sorted(feature_indices);
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ContractError("permute_group: duplicate feature index");
    }
    std::vector<std::size_t> all_rows(dataset.n_rows());
    for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;
    Dataset out = dataset;
    permute_columns_in_rows(out, sorted, all_rows, rng);
    return out;
}

ImportanceReport run_importance(const Dataset& dataset, const SplitIndices& split,
                                const TrainPlan& plan, const ImportanceConfig& config) {
    if (config.n_permutations == 0) throw ConfigError("importance: n_permutations must be >= 1");
    const std::size_t d = dataset.n_features();
    const std::size_t g = effective_group_size(config, d);

    ImportanceReport report;
    report.group_size = g;

    // Baseline model on untouched data; its test accuracy anchors every delta.
    const TrainOutcome baseline = train_scr(dataset, split, plan);
    report.baseline_r = test_pearson(baseline.bundle, dataset, split);

    report.permutations.assign(config.n_permutations, PermutationRecord{});

    const auto run_one = [&](std::size_t index) {
        Rng rng(derive_seed(config.master_seed, "perm", index));
        PermutationRecord record;
        record.features = rng.sample_without_replacement(d, g);
        std::sort(record.features.begin(), record.features.end());
        try {
            double permuted_r = 0.0;
            if (config.retrain) {
                // Retrain mode: shuffle the selected columns within the
                // training rows, retrain from scratch, evaluate on test.
                Dataset shuffled = dataset;
                permute_columns_in_rows(shuffled, record.features, split.train, rng);
                const TrainOutcome outcome = train_scr(shuffled, split, plan);
                permuted_r = test_pearson(outcome.bundle, shuffled, split);
            } else {
                // Cheap mode: keep the baseline model, shuffle test features.
                Dataset standardized = apply(baseline.bundle.standardizer, dataset);
                Dataset test = take_rows(standardized, split.test);
                std::vector<std::size_t> all_rows(test.n_rows());
                for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;
                permute_columns_in_rows(test, record.features, all_rows, rng);
                permuted_r = pearson_r(predict(baseline.bundle, test), test.labels);
            }
            record.delta_r = report.baseline_r - permuted_r;
        } catch (const NumericError&) {
            record.failed = true;  // degenerate run; excluded and counted
        }
        report.permutations[index] = std::move(record);
    };

    const std::size_t workers = std::max<std::size_t>(1, config.workers);
    if (workers == 1) {
        for (std::size_t i = 0; i < config.n_permutations; ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= config.n_permutations) return;
                    run_one(i);
                }
            });
        }
        for (std::thread& t : pool) t.join();
    }

    // Merge in permutation order; the result cannot depend on scheduling.
    std::vector<double> delta_sum(d, 0.0);
    std::vector<std::size_t> counts(d, 0);
    for (const PermutationRecord& record : report.permutations) {
        if (record.failed) {
            ++report.failed_permutations;
            continue;
        }
        ++report.completed_permutations;
        for (std::size_t c : record.features) {
            delta_sum[c] += record.delta_r;
            ++counts[c];
        }
    }

    report.scores.resize(d);
    for (std::size_t c = 0; c < d; ++c) {
        FeatureScore& score = report.scores[c];
        score.feature_index = c;
        score.feature_name = c < dataset.feature_names.size() ? dataset.feature_names[c] : "";
        score.inclusion_count = counts[c];
        score.mean_delta_r =
            counts[c] > 0 ? delta_sum[c] / static_cast<double>(counts[c]) : std::nan("");
    }
    std::sort(report.scores.begin(), report.scores.end(), [](const FeatureScore& a, const FeatureScore& b) {
        const bool a_defined = a.inclusion_count > 0;
        const bool b_defined = b.inclusion_count > 0;
        if (a_defined != b_defined) return a_defined;  // undefined scores sink to the bottom
        if (a_defined && a.mean_delta_r != b.mean_delta_r) return a.mean_delta_r > b.mean_delta_r;
        return a.feature_index < b.feature_index;
    });
    return report;
}

std::string importance_csv_string(const ImportanceReport& report) {
    std::ostringstream out;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", report.baseline_r);
    out << "# baseline_r=" << buf << '\n';
    out << "# group_size=" << report.group_size << '\n';
    out << "# completed_permutations=" << report.completed_permutations << '\n';
    out << "# failed_permutations=" << report.failed_permutations << '\n';
    out << "feature_index,feature_name,mean_delta_r,inclusion_count\n";
    for (const FeatureScore& score : report.scores) {
        if (score.inclusion_count > 0) {
            std::snprintf(buf, sizeof buf, "%.17g", score.mean_delta_r);
        } else {
            std::snprintf(buf, sizeof buf, "nan");
        }
        out << score.feature_index << ',' << score.feature_name << ',' << buf << ','
            << score.inclusion_count << '\n';
    }
    return out.str();
}

void save_importance_csv(const ImportanceReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open importance report for writing: " + path);
    out << importance_csv_string(report);
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace scr
