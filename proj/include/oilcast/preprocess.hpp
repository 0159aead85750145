#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace oilcast {

// Min-max affine map fitted on one vector of values; max > min strictly.
struct Scaler {
    double min = 0.0;
    double max = 1.0;

    bool operator==(const Scaler&) const = default;
};

// Supervised one-step-ahead samples built with a stride-1 sliding
// window: inputs[k] = source[k .. k+window_len), targets[k] =
// source[k+window_len].
struct WindowedDataset {
    std::size_t window_len = 0;
    std::vector<double> inputs;  // num_samples x window_len, row-major
    std::vector<double> targets; // num_samples

    std::size_t num_samples() const { return targets.size(); }
    std::span<const double> window(std::size_t k) const {
        return {inputs.data() + k * window_len, window_len};
    }
};

// Extrema of the input; constant input has no usable scale.
Scaler fit_scaler(std::span<const double> values);

// Forward: v -> (v - min) / (max - min). Inverse: u -> min + u * (max - min).
std::vector<double> apply_scaler(std::span<const double> values, const Scaler& scaler,
                                 bool inverse = false);

// Chronological split: first floor(n * train_fraction) values train,
// remainder test. Either side empty is an error.
std::pair<std::vector<double>, std::vector<double>>
split_train_test(std::span<const double> values, double train_fraction);

WindowedDataset make_windows(std::span<const double> values, std::size_t window_len);

} // namespace oilcast
