#include "scr/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "scr/errors.hpp"
#include "scr/rng.hpp"

namespace scr {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

void format_double(char* buf, std::size_t n, double v) { std::snprintf(buf, n, "%.17g", v); }

}  // namespace

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("CSV file is empty (missing header): " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = split_line(line);
    std::ptrdiff_t label_col = -1;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = trim(header[c]);
        if (name == "label") {
            if (label_col >= 0) throw DataError("CSV has more than one `label` column: " + path);
            label_col = static_cast<std::ptrdiff_t>(c);
        } else {
            names.push_back(name);
        }
    }
    if (label_col < 0) throw DataError("CSV is missing the `label` column: " + path);

    std::vector<double> labels;
    std::vector<double> values;  // row-major features
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size()) {
            throw DataError("CSV row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                            " cells, header has " + std::to_string(header.size()) + ": " + path);
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string cell = trim(cells[c]);
            double value = 0.0;  // empty cell means empty cluster, measure is zero
            if (!cell.empty()) {
                const char* begin = cell.c_str();
                char* end = nullptr;
                value = std::strtod(begin, &end);
                if (end == begin || *end != '\0') {
                    throw DataError("CSV non-numeric cell at row " + std::to_string(row) + ", column " +
                                    std::to_string(c + 1) + " (`" + cell + "`): " + path);
                }
            }
            if (static_cast<std::ptrdiff_t>(c) == label_col) {
                labels.push_back(value);
            } else {
                values.push_back(value);
            }
        }
    }
    if (row == 0) throw DataError("CSV has a header but no data rows: " + path);

    Dataset ds;
    ds.feature_names = std::move(names);
    ds.labels = std::move(labels);
    ds.features = Matrix(row, ds.feature_names.size());
    std::copy(values.begin(), values.end(), ds.features.data());
    if (!all_finite(ds.features) || !all_finite(ds.labels)) {
        throw DataError("CSV contains non-finite values: " + path);
    }
    return ds;
}

void save_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open CSV file for writing: " + path);
    out << "label";
    for (const auto& name : dataset.feature_names) out << ',' << name;
    out << '\n';
    char buf[40];
    for (std::size_t r = 0; r < dataset.n_rows(); ++r) {
        format_double(buf, sizeof buf, dataset.labels[r]);
        out << buf;
        const double* row = dataset.features.row(r);
        for (std::size_t c = 0; c < dataset.n_features(); ++c) {
            format_double(buf, sizeof buf, row[c]);
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

SplitIndices split(std::size_t n, std::uint64_t seed) {
    if (n < 10) throw DataError("split: need at least 10 rows to honor 70/10/20 ratios");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(derive_seed(seed, "split"));
    rng.shuffle(order);

    const std::size_t n_train = static_cast<std::size_t>(std::floor(0.7 * static_cast<double>(n)));
    const std::size_t n_val = static_cast<std::size_t>(std::floor(0.1 * static_cast<double>(n)));

    SplitIndices s;
    s.seed = seed;
    s.train.assign(order.begin(), order.begin() + n_train);
    s.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    s.test.assign(order.begin() + n_train + n_val, order.end());
    return s;
}

Standardizer fit_standardizer(const Dataset& dataset, const std::vector<std::size_t>& train_indices) {
    if (train_indices.empty()) throw ContractError("fit_standardizer: empty training index list");
    const std::size_t d = dataset.n_features();
    Standardizer st;
    st.mean.assign(d, 0.0);
    st.std_dev.assign(d, 0.0);
    st.constant.assign(d, false);

    const double n = static_cast<double>(train_indices.size());
    for (std::size_t idx : train_indices) {
        const double* row = dataset.features.row(idx);
        for (std::size_t c = 0; c < d; ++c) st.mean[c] += row[c];
    }
    for (std::size_t c = 0; c < d; ++c) st.mean[c] /= n;
    for (std::size_t idx : train_indices) {
        const double* row = dataset.features.row(idx);
        for (std::size_t c = 0; c < d; ++c) {
            const double diff = row[c] - st.mean[c];
            st.std_dev[c] += diff * diff;
        }
    }
    for (std::size_t c = 0; c < d; ++c) {
        st.std_dev[c] = std::sqrt(st.std_dev[c] / n);  // population std
        if (st.std_dev[c] < 1e-12) {
            st.constant[c] = true;
            st.std_dev[c] = 0.0;
        }
    }
    return st;
}

Dataset apply(const Standardizer& standardizer, const Dataset& dataset) {
    if (dataset.standardized) {
        throw ContractError("apply: dataset is already standardized (double application rejected)");
    }
    if (standardizer.n_features() != dataset.n_features()) {
        throw ContractError("apply: standardizer dimension does not match dataset");
    }
    Dataset out = dataset;
    out.standardized = true;
    for (std::size_t r = 0; r < out.n_rows(); ++r) {
        double* row = out.features.row(r);
        for (std::size_t c = 0; c < out.n_features(); ++c) {
            row[c] = standardizer.constant[c] ? 0.0 : (row[c] - standardizer.mean[c]) / standardizer.std_dev[c];
        }
    }
    return out;
}

SynthResult generate_synthetic(const SynthSpec& spec) {
    if (spec.informative_indices.empty()) {
        throw ContractError("generate_synthetic: need at least one informative feature");
    }
    for (std::size_t idx : spec.informative_indices) {
        if (idx >= spec.n_features) {
            throw ContractError("generate_synthetic: informative index out of range");
        }
    }

    SynthResult result;
    SynthGroundTruth& truth = result.truth;
    truth.informative_indices = spec.informative_indices;
    std::sort(truth.informative_indices.begin(), truth.informative_indices.end());
    truth.linear_weights.assign(spec.n_features, 0.0);
    truth.tanh_weights.assign(spec.n_features, 0.0);

    Rng weight_rng(derive_seed(spec.seed, "synth.weights"));
    for (std::size_t idx : truth.informative_indices) {
        // Weights bounded away from zero so every informative feature carries signal.
        const double magnitude = weight_rng.uniform(0.5, 1.5);
        truth.linear_weights[idx] = weight_rng.uniform01() < 0.5 ? -magnitude : magnitude;
        if (spec.nonlinear) {
            const double t = weight_rng.uniform(0.5, 1.5);
            truth.tanh_weights[idx] = weight_rng.uniform01() < 0.5 ? -t : t;
        }
    }

    Dataset& ds = result.dataset;
    ds.features = Matrix(spec.n_samples, spec.n_features);
    ds.labels.assign(spec.n_samples, 0.0);
    ds.feature_names.resize(spec.n_features);
    for (std::size_t c = 0; c < spec.n_features; ++c) ds.feature_names[c] = "f" + std::to_string(c);
    ds.modality_tag = "synthetic";

    Rng feature_rng(derive_seed(spec.seed, "synth.features"));
    for (std::size_t i = 0; i < ds.features.size(); ++i) ds.features.data()[i] = feature_rng.normal();

    Rng noise_rng(derive_seed(spec.seed, "synth.noise"));
    for (std::size_t r = 0; r < spec.n_samples; ++r) {
        const double* row = ds.features.row(r);
        double y = 0.0;
        for (std::size_t idx : truth.informative_indices) {
            y += truth.linear_weights[idx] * row[idx];
            if (spec.nonlinear) y += truth.tanh_weights[idx] * std::tanh(row[idx]);
        }
        if (spec.noise_std > 0.0) y += spec.noise_std * noise_rng.normal();
        ds.labels[r] = y;
    }

    // Rescale onto [-3, 3] to mirror the label range the defaults are tuned for.
    const auto [lo_it, hi_it] = std::minmax_element(ds.labels.begin(), ds.labels.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi - lo > 1e-12) {
        truth.label_scale = 6.0 / (hi - lo);
        truth.label_offset = -3.0 - lo * truth.label_scale;
    } else {
        truth.label_scale = 1.0;
        truth.label_offset = 0.0;
    }
    for (double& y : ds.labels) y = y * truth.label_scale + truth.label_offset;
    return result;
}

std::vector<double> regenerate_labels(const Matrix& features, const SynthGroundTruth& truth) {
    std::vector<double> labels(features.rows(), 0.0);
    for (std::size_t r = 0; r < features.rows(); ++r) {
        const double* row = features.row(r);
        double y = 0.0;
        for (std::size_t idx : truth.informative_indices) {
            y += truth.linear_weights[idx] * row[idx];
            if (truth.tanh_weights[idx] != 0.0) y += truth.tanh_weights[idx] * std::tanh(row[idx]);
        }
        labels[r] = y * truth.label_scale + truth.label_offset;
    }
    return labels;
}

void save_ground_truth(const SynthGroundTruth& truth, std::size_t n_features, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open ground-truth file for writing: " + path);
    out << "feature_index,weight,informative\n";
    char buf[40];
    for (std::size_t c = 0; c < n_features; ++c) {
        const bool informative = std::find(truth.informative_indices.begin(),
                                           truth.informative_indices.end(), c) !=
                                 truth.informative_indices.end();
        format_double(buf, sizeof buf, truth.linear_weights[c]);
        out << c << ',' << buf << ',' << (informative ? 1 : 0) << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

Dataset take_rows(const Dataset& dataset, const std::vector<std::size_t>& indices) {
    Dataset out;
    out.feature_names = dataset.feature_names;
    out.modality_tag = dataset.modality_tag;
    out.standardized = dataset.standardized;
    out.features = Matrix(indices.size(), dataset.n_features());
    out.labels.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t src = indices[i];
        if (src >= dataset.n_rows()) throw ContractError("take_rows: index out of range");
        std::copy(dataset.features.row(src), dataset.features.row(src) + dataset.n_features(),
                  out.features.row(i));
        out.labels[i] = dataset.labels[src];
    }
    return out;
}

}  // namespace scr
