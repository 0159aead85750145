#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "oilcast/lstm.hpp"
#include "oilcast/preprocess.hpp"

namespace oilcast {

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double plateau_factor = 0.5;
    std::size_t plateau_patience = 3;
    double plateau_min_delta = 1e-6;
    double min_learning_rate = 1e-5;
    std::size_t window_len = 90;
    std::vector<std::size_t> layer_sizes = {60, 60, 60};
    double dropout_rate = 0.2;
    std::uint64_t seed = 0;
    double grad_clip = 0.0; // elementwise clip threshold; 0 disables

    bool operator==(const TrainConfig&) const = default;
};

// Throws UsageError on out-of-range fields.
void validate(const TrainConfig& config);

// Adam moments in param_spans order, plus the live learning rate the
// plateau scheduler adjusts.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t step = 0;
    double learning_rate = 0.0;
};

AdamState make_adam_state(const StackedLstm& net, const TrainConfig& config);

// m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;  bias-corrected
// m^ = m/(1-b1^t), v^ = v/(1-b2^t);  p <- p - lr m^ / (sqrt(v^) + eps).
void adam_step(StackedLstm& params, const Gradients& grads, AdamState& state,
               const TrainConfig& config);

// Reduce-on-plateau bookkeeping.
struct PlateauScheduler {
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t bad_epochs = 0;
};

// Improvement means validation_loss < best - min_delta. After
// plateau_patience consecutive non-improving epochs the learning rate
// is multiplied by plateau_factor, floored at min_learning_rate.
void plateau_step(PlateauScheduler& scheduler, double& learning_rate, double validation_loss,
                  const TrainConfig& config);

struct TrainLog {
    struct Entry {
        double train_loss = 0.0;
        double val_loss = 0.0;
        double learning_rate = 0.0;
    };
    std::vector<Entry> entries;
};

struct Metrics {
    double mae = 0.0;
    double rmse = 0.0;
};

double mse_loss(std::span<const double> predictions, std::span<const double> targets);

struct FitResult {
    StackedLstm model;
    AdamState adam;
    TrainLog log;
};

// Mini-batch BPTT training with a seeded shuffle per epoch, gradients
// averaged over each batch, per-epoch train/validation losses computed
// with dropout off, and the plateau scheduler driven by the validation
// loss. Fully deterministic for a fixed config.
FitResult fit(const WindowedDataset& train, const WindowedDataset& validation,
              const TrainConfig& config);

// forward_infer; expected_window_len != 0 additionally enforces the
// trained window length.
double predict_one_step(const StackedLstm& model, std::span<const double> window,
                        std::size_t expected_window_len = 0);

// Recursive one-step forecasting: each prediction is appended as the
// newest input and the window slides by one.
std::vector<double> forecast_recursive(const StackedLstm& model,
                                       std::span<const double> seed_window, std::size_t horizon,
                                       std::size_t expected_window_len = 0);

// Inverse-scales predictions and targets (and exponentiates when the
// pipeline was log-transformed) before computing MAE/RMSE, so both
// metrics are in USD/barrel.
Metrics evaluate(const StackedLstm& model, const WindowedDataset& dataset, const Scaler& scaler,
                 bool log_scale);

struct Checkpoint {
    StackedLstm model;
    Scaler scaler;
    TrainConfig config;
};

// Versioned text checkpoint. Floats are written as shortest round-trip
// decimals, so save -> load -> save is byte-identical.
void save_checkpoint(std::ostream& out, const StackedLstm& model, const Scaler& scaler,
                     const TrainConfig& config);
Checkpoint load_checkpoint(std::istream& in);

// CSV schema: epoch,train_loss,val_loss,lr
void write_train_log_csv(std::ostream& out, const TrainLog& log);

} // namespace oilcast
