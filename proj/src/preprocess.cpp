#include "oilcast/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "oilcast/errors.hpp"

namespace oilcast {

Scaler fit_scaler(std::span<const double> values) {
    if (values.size() < 2) {
        throw UsageError("fit_scaler: need at least 2 values");
    }
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (!(*hi > *lo)) {
        throw DomainError("fit_scaler: constant input, min == max");
    }
    return {*lo, *hi};
}

std::vector<double> apply_scaler(std::span<const double> values, const Scaler& scaler,
                                 bool inverse) {
    const double span = scaler.max - scaler.min;
    std::vector<double> out;
    out.reserve(values.size());
    for (const double v : values) {
        out.push_back(inverse ? scaler.min + v * span : (v - scaler.min) / span);
    }
    return out;
}

std::pair<std::vector<double>, std::vector<double>>
split_train_test(std::span<const double> values, double train_fraction) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
        throw UsageError("split_train_test: train_fraction must be in (0, 1)");
    }
    if (values.size() < 2) {
        throw UsageError("split_train_test: need at least 2 values");
    }
    const auto train_len = static_cast<std::size_t>(
        std::floor(static_cast<double>(values.size()) * train_fraction));
    if (train_len == 0 || train_len == values.size()) {
        throw DataError("split_train_test: fraction leaves an empty side (" +
                        std::to_string(train_len) + " of " + std::to_string(values.size()) +
                        " in train)");
    }
    return {std::vector<double>(values.begin(), values.begin() + train_len),
            std::vector<double>(values.begin() + train_len, values.end())};
}

WindowedDataset make_windows(std::span<const double> values, std::size_t window_len) {
    if (window_len < 1) {
        throw UsageError("make_windows: window_len must be >= 1");
    }
    if (values.size() <= window_len) {
        throw DataError("make_windows: need more than " + std::to_string(window_len) +
                        " values, got " + std::to_string(values.size()));
    }
    const std::size_t num_samples = values.size() - window_len;
    WindowedDataset ds;
    ds.window_len = window_len;
    ds.inputs.reserve(num_samples * window_len);
    ds.targets.reserve(num_samples);
    for (std::size_t k = 0; k < num_samples; ++k) {
        ds.inputs.insert(ds.inputs.end(), values.begin() + k, values.begin() + k + window_len);
        ds.targets.push_back(values[k + window_len]);
    }
    return ds;
}

} // namespace oilcast
