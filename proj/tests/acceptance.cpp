// Acceptance harness: one pass/fail line per criterion, nonzero exit if
// any criterion fails. Every tolerance is pinned here in code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oilcast/cli.hpp"
#include "oilcast/gbm.hpp"
#include "oilcast/lstm.hpp"
#include "oilcast/preprocess.hpp"
#include "oilcast/rng.hpp"
#include "oilcast/series.hpp"
#include "oilcast/train.hpp"

using namespace oilcast;

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& detail) {
    if (!condition) {
        throw CheckFailure(detail);
    }
}

double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --------------------------------------------------------------- criterion 1

void gradient_correctness() {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(20240501);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::size_t> sizes{1 + rng.next_u64() % 8};
        if (trial % 2 == 1) {
            sizes.push_back(1 + rng.next_u64() % 8);
        }
        const StackedLstm net = init_network(sizes, 0.0, rng.next_u64());

        std::vector<double> window;
        const std::size_t len = 1 + rng.next_u64() % 12;
        for (std::size_t t = 0; t < len; ++t) {
            window.push_back(rng.uniform(-1.0, 1.0));
        }
        const double target = rng.uniform(-1.0, 1.0);

        const double err = gradient_check(net, window, target, 1e-5);
        require(err < 1e-4, "trial " + std::to_string(trial) + ": max relative error " +
                                std::to_string(err) + " >= 1e-4");
    }
    const double secs = elapsed_seconds(start);
    require(secs < 30.0, "took " + std::to_string(secs) + " s, limit 30 s");
}

// --------------------------------------------------------------- criterion 2

void oracle_equivalence() {
    Rng rng(20240502);
    const StackedLstm model = init_network({3}, 0.0, 99);

    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 4 + rng.next_u64() % 60;
        std::vector<double> values;
        for (std::size_t i = 0; i < n; ++i) {
            values.push_back(rng.uniform(20.0, 120.0));
        }

        // Scaler forward and inverse against the raw formulas.
        const Scaler scaler = fit_scaler(values);
        const std::vector<double> forward = apply_scaler(values, scaler);
        const std::vector<double> inverse = apply_scaler(forward, scaler, true);
        for (std::size_t i = 0; i < n; ++i) {
            const double expect_fwd = (values[i] - scaler.min) / (scaler.max - scaler.min);
            require(rel_diff(forward[i], expect_fwd) < 1e-12 ||
                        std::abs(forward[i] - expect_fwd) < 1e-15,
                    "scaler forward mismatch");
            require(std::abs(inverse[i] - values[i]) <=
                        1e-12 * std::max(1.0, std::abs(values[i])),
                    "scaler inverse mismatch");
        }

        // Windows against an index-by-index rebuild.
        const std::size_t window_len = 1 + rng.next_u64() % (n - 1);
        const WindowedDataset ds = make_windows(forward, window_len);
        require(ds.num_samples() == n - window_len, "window count mismatch");
        for (std::size_t k = 0; k < ds.num_samples(); ++k) {
            for (std::size_t j = 0; j < window_len; ++j) {
                require(ds.window(k)[j] == forward[k + j], "window content mismatch");
            }
            require(ds.targets[k] == forward[k + window_len], "window target mismatch");
        }

        // MSE against a plain loop.
        std::vector<double> preds;
        for (std::size_t k = 0; k < ds.num_samples(); ++k) {
            preds.push_back(forward_infer(ds.window(k), model));
        }
        double sq = 0.0;
        for (std::size_t k = 0; k < preds.size(); ++k) {
            const double d = preds[k] - ds.targets[k];
            sq += d * d;
        }
        const double mse_expect = sq / static_cast<double>(preds.size());
        require(rel_diff(mse_loss(preds, ds.targets), mse_expect) < 1e-12, "MSE mismatch");

        // MAE/RMSE against brute-force denormalized errors.
        const Metrics metrics = evaluate(model, ds, scaler, false);
        double abs_sum = 0.0;
        double sq_sum = 0.0;
        for (std::size_t k = 0; k < preds.size(); ++k) {
            const double p = scaler.min + preds[k] * (scaler.max - scaler.min);
            const double t = scaler.min + ds.targets[k] * (scaler.max - scaler.min);
            abs_sum += std::abs(p - t);
            sq_sum += (p - t) * (p - t);
        }
        const double mae_expect = abs_sum / static_cast<double>(preds.size());
        const double rmse_expect = std::sqrt(sq_sum / static_cast<double>(preds.size()));
        require(rel_diff(metrics.mae, mae_expect) < 1e-12, "MAE mismatch");
        require(rel_diff(metrics.rmse, rmse_expect) < 1e-12, "RMSE mismatch");
    }
}

// --------------------------------------------------------------- criterion 3

void gbm_analytic_mean() {
    const auto start = std::chrono::steady_clock::now();

    const GbmModel model{0.1, 0.3, 64.94, 1.0 / 252.0};
    const std::size_t horizon = 60;
    const std::size_t num_paths = 100000;
    const PathMatrix paths = simulate_paths(model, horizon, num_paths, 7, 0);
    const std::vector<double> mean = mean_path(paths);

    for (std::size_t t = 1; t <= horizon; ++t) {
        const double elapsed = model.dt * static_cast<double>(t);
        const double expected = model.s0 * std::exp(model.mu * elapsed);
        const double sd = model.s0 * std::exp(model.mu * elapsed) *
                          std::sqrt(std::exp(model.sigma * model.sigma * elapsed) - 1.0);
        const double se = sd / std::sqrt(static_cast<double>(num_paths));
        require(std::abs(mean[t] - expected) < 3.0 * se,
                "step " + std::to_string(t) + ": mean " + std::to_string(mean[t]) +
                    " deviates from " + std::to_string(expected) + " by more than 3 SE (" +
                    std::to_string(3.0 * se) + ")");
    }

    const GbmModel flat{0.1, 0.0, 64.94, 1.0 / 252.0};
    const PathMatrix exact = simulate_paths(flat, horizon, 8, 7);
    for (std::size_t p = 0; p < exact.num_paths; ++p) {
        for (std::size_t t = 0; t <= horizon; ++t) {
            const double closed =
                flat.s0 * std::exp(flat.mu * flat.dt * static_cast<double>(t));
            require(rel_diff(exact.at(p, t), closed) < 1e-12,
                    "sigma=0 path deviates from the closed form at step " + std::to_string(t));
        }
    }

    const double secs = elapsed_seconds(start);
    require(secs < 10.0, "took " + std::to_string(secs) + " s, limit 10 s");
}

// --------------------------------------------------------------- criterion 4

void learning_sanity() {
    const auto start = std::chrono::steady_clock::now();

    std::vector<double> sine;
    for (int t = 0; t < 400; ++t) {
        sine.push_back(std::sin(2.0 * 3.14159265358979323846 * t / 40.0));
    }
    const Scaler scaler = fit_scaler(sine);
    const std::vector<double> scaled = apply_scaler(sine, scaler);
    const auto [train_vals, test_vals] = split_train_test(scaled, 0.7);

    TrainConfig config;
    config.window_len = 16;
    config.layer_sizes = {16, 16};
    config.dropout_rate = 0.0;
    config.epochs = 30;
    config.batch_size = 16;
    config.learning_rate = 5e-3;
    config.seed = 2024;

    const WindowedDataset train = make_windows(train_vals, config.window_len);
    const WindowedDataset test = make_windows(test_vals, config.window_len);

    const FitResult result = fit(train, test, config);

    const Metrics lstm_metrics = evaluate(result.model, test, scaler, false);
    double persistence_sq = 0.0;
    for (std::size_t k = 0; k < test.num_samples(); ++k) {
        const double pred = test.window(k)[config.window_len - 1];
        const double p = scaler.min + pred * (scaler.max - scaler.min);
        const double t = scaler.min + test.targets[k] * (scaler.max - scaler.min);
        persistence_sq += (p - t) * (p - t);
    }
    const double persistence_rmse =
        std::sqrt(persistence_sq / static_cast<double>(test.num_samples()));

    require(lstm_metrics.rmse < persistence_rmse,
            "test RMSE " + std::to_string(lstm_metrics.rmse) +
                " does not beat persistence RMSE " + std::to_string(persistence_rmse));

    std::vector<double> running_min;
    for (const auto& entry : result.log.entries) {
        require(std::isfinite(entry.val_loss), "non-finite validation loss");
        const double best = running_min.empty() ? entry.val_loss
                                                : std::min(running_min.back(), entry.val_loss);
        running_min.push_back(best);
    }
    for (std::size_t i = 1; i < running_min.size(); ++i) {
        require(running_min[i] <= running_min[i - 1],
                "best-so-far validation loss increased at epoch " + std::to_string(i + 1));
    }
    require(running_min.back() < result.log.entries.front().val_loss,
            "validation loss never improved over the first epoch");

    const double secs = elapsed_seconds(start);
    require(secs < 120.0, "took " + std::to_string(secs) + " s, limit 120 s");
}

// --------------------------------------------------------------- criterion 5

std::filesystem::path scratch_dir() {
    auto dir = std::filesystem::temp_directory_path() / "oilcast_acceptance";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string synthetic_brent_csv(std::size_t points) {
    using namespace std::chrono;
    Rng rng(987);
    PriceSeries series;
    double price = 70.0;
    sys_days cursor{year{2018} / January / 1};
    while (series.size() < points) {
        const weekday dow{cursor};
        if (dow != Saturday && dow != Sunday) {
            series.observations.push_back({year_month_day{cursor}, price});
            price *= std::exp(0.0002 + 0.02 * rng.normal());
        }
        cursor += days{1};
    }
    return write_series_csv(series);
}

int quiet_cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream diag;
    return oilcast::cli::run(args, out, diag);
}

std::string first_line(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

void full_configuration_dry_run() {
    const auto dir = scratch_dir();
    const auto input = (dir / "brent.csv").string();
    {
        std::ofstream out(input);
        out << synthetic_brent_csv(500);
    }

    const auto fig1 = dir / "fig1.csv";
    const auto fig2 = dir / "fig2.csv";
    const auto fig3 = dir / "fig3.csv";
    const auto fig4 = dir / "fig4.csv";
    const auto ckpt = (dir / "model.ckpt").string();

    require(quiet_cli({"describe", "--input", input, "--monthly", "--out", fig1.string()}) == 0,
            "describe exited nonzero");
    require(first_line(fig1) == "date,price", "fig1 header wrong");

    require(quiet_cli({"gbm", "--input", input, "--paths", "50", "--horizon", "60", "--seed",
                       "7", "--out", fig2.string()}) == 0,
            "gbm exited nonzero");
    require(first_line(fig2).rfind("step,path_0,", 0) == 0, "fig2 header wrong");

    require(quiet_cli({"train", "--input", input, "--checkpoint", ckpt, "--out",
                       fig3.string(), "--window", "90", "--layers", "60,60,60", "--dropout",
                       "0.2", "--epochs", "3", "--batch", "32", "--split", "0.7", "--seed",
                       "1"}) == 0,
            "train exited nonzero (divergence or error)");
    require(first_line(fig3) == "epoch,train_loss,val_loss,lr", "fig3 header wrong");

    require(quiet_cli({"export", "--input", input, "--checkpoint", ckpt, "--out",
                       fig4.string()}) == 0,
            "export exited nonzero");
    require(first_line(fig4) == "step,actual,predicted", "fig4 header wrong");

    // The loss log must hold one finite row per epoch.
    std::ifstream log(fig3);
    std::string line;
    std::getline(log, line);
    std::size_t rows = 0;
    while (std::getline(log, line)) {
        ++rows;
        require(line.find("nan") == std::string::npos && line.find("inf") == std::string::npos,
                "non-finite loss in fig3");
    }
    require(rows == 3, "fig3 should hold 3 epochs, got " + std::to_string(rows));

    std::filesystem::remove_all(dir);
}

// --------------------------------------------------------------- criterion 6

void determinism() {
    require(init_network({7, 5}, 0.2, 31) == init_network({7, 5}, 0.2, 31),
            "init_network differs between runs");

    std::vector<double> values;
    Rng rng(55);
    for (int i = 0; i < 70; ++i) {
        values.push_back(rng.uniform(0.0, 1.0));
    }
    TrainConfig config;
    config.window_len = 5;
    config.layer_sizes = {8};
    config.dropout_rate = 0.2;
    config.epochs = 3;
    config.batch_size = 16;
    config.seed = 12;
    const auto [train_vals, test_vals] = split_train_test(values, 0.7);
    const WindowedDataset train = make_windows(train_vals, config.window_len);
    const WindowedDataset test = make_windows(test_vals, config.window_len);
    const FitResult fit_a = fit(train, test, config);
    const FitResult fit_b = fit(train, test, config);
    require(fit_a.model == fit_b.model, "fit differs between runs");
    require(fit_a.log.entries.size() == fit_b.log.entries.size() &&
                [&] {
                    for (std::size_t i = 0; i < fit_a.log.entries.size(); ++i) {
                        if (fit_a.log.entries[i].train_loss != fit_b.log.entries[i].train_loss ||
                            fit_a.log.entries[i].val_loss != fit_b.log.entries[i].val_loss ||
                            fit_a.log.entries[i].learning_rate !=
                                fit_b.log.entries[i].learning_rate) {
                            return false;
                        }
                    }
                    return true;
                }(),
            "training log differs between runs");

    const GbmModel model{0.09, 0.35, 64.0, 1.0 / 252.0};
    const PathMatrix serial = simulate_paths(model, 40, 128, 5, 1);
    require(serial == simulate_paths(model, 40, 128, 5, 1), "GBM differs between runs");
    require(serial == simulate_paths(model, 40, 128, 5, 4),
            "GBM differs between thread counts");
    require(serial == simulate_paths(model, 40, 128, 5, 0),
            "GBM differs with automatic threads");

    // CLI end to end, byte for byte.
    const auto dir = scratch_dir();
    const auto input = (dir / "prices.csv").string();
    {
        std::ofstream out(input);
        out << synthetic_brent_csv(140);
    }
    auto read_all = [](const std::filesystem::path& p) {
        std::ifstream in(p);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };

    const auto gbm_a = dir / "gbm_a.csv";
    const auto gbm_b = dir / "gbm_b.csv";
    require(quiet_cli({"gbm", "--input", input, "--paths", "20", "--horizon", "15", "--seed",
                       "3", "--out", gbm_a.string()}) == 0 &&
                quiet_cli({"gbm", "--input", input, "--paths", "20", "--horizon", "15",
                           "--seed", "3", "--out", gbm_b.string()}) == 0,
            "CLI gbm exited nonzero");
    require(read_all(gbm_a) == read_all(gbm_b), "CLI gbm output differs between runs");

    const auto ckpt_a = (dir / "a.ckpt").string();
    const auto ckpt_b = (dir / "b.ckpt").string();
    const std::vector<std::string> base = {"train",    "--input", input,    "--window", "4",
                                           "--layers", "5",       "--epochs", "2",      "--batch",
                                           "8",        "--seed",  "6"};
    auto with_ckpt = [&](const std::string& path) {
        std::vector<std::string> args = base;
        args.push_back("--checkpoint");
        args.push_back(path);
        return args;
    };
    require(quiet_cli(with_ckpt(ckpt_a)) == 0 && quiet_cli(with_ckpt(ckpt_b)) == 0,
            "CLI train exited nonzero");
    require(read_all(ckpt_a) == read_all(ckpt_b), "CLI checkpoints differ between runs");

    std::filesystem::remove_all(dir);
}

// --------------------------------------------------------------- criterion 7

void checkpoint_round_trip() {
    const StackedLstm model = init_network({6, 5}, 0.2, 41);
    const Scaler scaler{3.375, 88.5};
    TrainConfig config;
    config.epochs = 23;
    config.batch_size = 11;
    config.learning_rate = 0.00075;
    config.window_len = 9;
    config.layer_sizes = {6, 5};
    config.dropout_rate = 0.2;
    config.seed = 41;
    config.grad_clip = 1.25;

    std::ostringstream out;
    save_checkpoint(out, model, scaler, config);
    std::istringstream in(out.str());
    const Checkpoint loaded = load_checkpoint(in);

    require(loaded.model == model, "model not bitwise identical after round trip");
    require(loaded.scaler == scaler, "scaler not bitwise identical after round trip");
    require(loaded.config == config, "config not identical after round trip");

    Rng rng(77);
    WindowedDataset ds;
    ds.window_len = config.window_len;
    for (int k = 0; k < 25; ++k) {
        for (std::size_t j = 0; j < ds.window_len; ++j) {
            ds.inputs.push_back(rng.uniform(0.0, 1.0));
        }
        ds.targets.push_back(rng.uniform(0.0, 1.0));
    }
    const Metrics before = evaluate(model, ds, scaler, false);
    const Metrics after = evaluate(loaded.model, ds, scaler, false);
    require(before.mae == after.mae && before.rmse == after.rmse,
            "metrics changed across the round trip");
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* label;
        std::function<void()> body;
    };
    const std::vector<Criterion> criteria = {
        {1, "gradient correctness (BPTT vs central differences)", gradient_correctness},
        {2, "oracle equivalence (metrics, scaler, windows)", oracle_equivalence},
        {3, "GBM Monte Carlo mean vs analytic expectation", gbm_analytic_mean},
        {4, "learning sanity on a noiseless sine", learning_sanity},
        {5, "full-configuration dry run via the CLI", full_configuration_dry_run},
        {6, "bit-exact determinism (init, fit, GBM, CLI)", determinism},
        {7, "checkpoint save/load round trip", checkpoint_round_trip},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        try {
            const auto start = std::chrono::steady_clock::now();
            criterion.body();
            std::printf("PASS criterion %d: %s (%.1fs)\n", criterion.id, criterion.label,
                        elapsed_seconds(start));
        } catch (const std::exception& e) {
            ++failures;
            std::printf("FAIL criterion %d: %s: %s\n", criterion.id, criterion.label,
                        e.what());
        }
        std::fflush(stdout);
    }
    if (failures > 0) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
