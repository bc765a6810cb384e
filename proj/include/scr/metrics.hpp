#pragma once

#include <cstddef>
#include <vector>

namespace scr {

struct EvalResult {
    double pearson_r = 0.0;
    double mse = 0.0;
    std::size_t n = 0;
};

// Sample Pearson correlation. Zero variance in either argument raises a
// numeric error; a constant predictor is a failure the harness must surface,
// not a zero.
double pearson_r(const std::vector<double>& pred, const std::vector<double>& truth);

double mse(const std::vector<double>& pred, const std::vector<double>& truth);

EvalResult evaluate(const std::vector<double>& pred, const std::vector<double>& truth);

}  // namespace scr
