#include "scr/metrics.hpp"

#include <cmath>

#include "scr/errors.hpp"

namespace scr {

double pearson_r(const std::vector<double>& pred, const std::vector<double>& truth) {
    if (pred.size() != truth.size()) throw ContractError("pearson_r: length mismatch");
    if (pred.size() < 2) throw ContractError("pearson_r: need at least two points");
    const double n = static_cast<double>(pred.size());
    double mean_p = 0.0, mean_t = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!std::isfinite(pred[i]) || !std::isfinite(truth[i])) {
            throw NumericError("pearson_r: non-finite input");
        }
        mean_p += pred[i];
        mean_t += truth[i];
    }
    mean_p /= n;
    mean_t /= n;
    double cov = 0.0, var_p = 0.0, var_t = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double dp = pred[i] - mean_p;
        const double dt = truth[i] - mean_t;
        cov += dp * dt;
        var_p += dp * dp;
        var_t += dt * dt;
    }
    if (var_p <= 0.0 || var_t <= 0.0) {
        throw NumericError("pearson_r: undefined correlation, zero variance input");
    }
    return cov / std::sqrt(var_p * var_t);
}

double mse(const std::vector<double>& pred, const std::vector<double>& truth) {
    if (pred.size() != truth.size()) throw ContractError("mse: length mismatch");
    if (pred.empty()) throw ContractError("mse: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        sum += d * d;
    }
    return sum / static_cast<double>(pred.size());
}

EvalResult evaluate(const std::vector<double>& pred, const std::vector<double>& truth) {
    return EvalResult{pearson_r(pred, truth), mse(pred, truth), pred.size()};
}

}  // namespace scr
