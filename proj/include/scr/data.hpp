#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scr/matrix.hpp"

namespace scr {

// Tabular dataset: N x D features plus one continuous label per row.
// `standardized` guards against double application of a Standardizer.
struct Dataset {
    Matrix features;
    std::vector<double> labels;
    std::vector<std::string> feature_names;
    std::string modality_tag;
    bool standardized = false;

    std::size_t n_rows() const { return features.rows(); }
    std::size_t n_features() const { return features.cols(); }
};

struct SplitIndices {
    std::vector<std::size_t> train, val, test;
    std::uint64_t seed = 0;
};

// Per-feature z-scoring fitted on training rows only. Constant columns are
// flagged and map to zero instead of dividing by zero.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> std_dev;
    std::vector<bool> constant;
    std::size_t n_features() const { return mean.size(); }
};

struct SynthSpec {
    std::size_t n_samples = 0;
    std::size_t n_features = 0;
    std::vector<std::size_t> informative_indices;
    double noise_std = 0.0;
    bool nonlinear = false;
    std::uint64_t seed = 0;
};

// What generate_synthetic actually used, kept for oracle-style checks.
struct SynthGroundTruth {
    std::vector<std::size_t> informative_indices;
    std::vector<double> linear_weights;   // size D, zero off the informative set
    std::vector<double> tanh_weights;     // size D, zero unless nonlinear
    double label_scale = 1.0;             // labels = raw * scale + offset
    double label_offset = 0.0;
};

// CSV ingestion: header row required, a column named `label` holds targets,
// all other columns are numeric features. Empty cells read as 0.0.
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& dataset, const std::string& path);

// 70/10/20 split with remainder rows going to test. Seeded uniform shuffle.
SplitIndices split(std::size_t n, std::uint64_t seed);

Standardizer fit_standardizer(const Dataset& dataset, const std::vector<std::size_t>& train_indices);
Dataset apply(const Standardizer& standardizer, const Dataset& dataset);

struct SynthResult {
    Dataset dataset;
    SynthGroundTruth truth;
};

// Features are iid standard normal; the label is a weighted sum over the
// informative set (plus tanh terms when nonlinear) plus Gaussian noise, then
// affinely rescaled onto [-3, 3].
SynthResult generate_synthetic(const SynthSpec& spec);

// Recomputes noiseless labels from features and recorded weights, including
// the recorded affine rescale.
std::vector<double> regenerate_labels(const Matrix& features, const SynthGroundTruth& truth);

// Sidecar CSV: feature_index,weight,informative(0/1).
void save_ground_truth(const SynthGroundTruth& truth, std::size_t n_features, const std::string& path);

// Row subset utility (labels and names carried over).
Dataset take_rows(const Dataset& dataset, const std::vector<std::size_t>& indices);

}  // namespace scr
