#include "oilcast/cli.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <CLI11.hpp>

#include "oilcast/errors.hpp"
#include "oilcast/gbm.hpp"
#include "oilcast/preprocess.hpp"
#include "oilcast/series.hpp"
#include "oilcast/train.hpp"
#include "text_util.hpp"

namespace oilcast::cli {

namespace {

PriceSeries load_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open input file '" + path + "'");
    }
    return parse_price_csv(in);
}

Date parse_date_flag(const std::string& text, const char* flag) {
    try {
        return parse_date(text);
    } catch (const ParseError& e) {
        throw UsageError(std::string(flag) + ": " + e.what());
    }
}

PriceSeries maybe_slice(PriceSeries series, const std::string& start, const std::string& end) {
    if (start.empty() && end.empty()) {
        return series;
    }
    const Date lo = start.empty() ? series.observations.front().date
                                  : parse_date_flag(start, "--start");
    const Date hi = end.empty() ? series.observations.back().date : parse_date_flag(end, "--end");
    return slice_date_range(series, lo, hi);
}

// Writes through `writer` to the --out path, or to the report stream
// when no path was given.
void write_output(const std::string& path, std::ostream& fallback,
                  const std::function<void(std::ostream&)>& writer) {
    if (path.empty()) {
        writer(fallback);
        return;
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write output file '" + path + "'");
    }
    writer(out);
    out.flush();
    if (!out) {
        throw DataError("error while writing '" + path + "'");
    }
}

struct PreparedData {
    Scaler scaler;
    std::vector<double> train_scaled;
    std::vector<double> test_scaled;
    std::vector<double> all_scaled;
};

// log -> split -> scale, with the scaler either refitted on the
// training portion (or the whole series) or taken from a checkpoint.
PreparedData prepare(const PriceSeries& series, bool use_log, double split_fraction,
                     bool fit_whole, const Scaler* fixed_scaler) {
    const PriceSeries working = use_log ? log_transform(series) : series;
    const std::vector<double> values = working.values();
    auto [train_vals, test_vals] = split_train_test(values, split_fraction);

    PreparedData data;
    if (fixed_scaler != nullptr) {
        data.scaler = *fixed_scaler;
    } else {
        data.scaler = fit_scaler(fit_whole ? std::span<const double>(values)
                                           : std::span<const double>(train_vals));
    }
    data.train_scaled = apply_scaler(train_vals, data.scaler);
    data.test_scaled = apply_scaler(test_vals, data.scaler);
    data.all_scaled = apply_scaler(values, data.scaler);
    return data;
}

Checkpoint load_checkpoint_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open checkpoint '" + path + "'");
    }
    return load_checkpoint(in);
}

void write_predictions_csv(std::ostream& out, const StackedLstm& model,
                           const WindowedDataset& dataset, const Scaler& scaler, bool use_log) {
    std::vector<double> preds;
    preds.reserve(dataset.num_samples());
    for (std::size_t k = 0; k < dataset.num_samples(); ++k) {
        preds.push_back(forward_infer(dataset.window(k), model));
    }
    std::vector<double> predicted = apply_scaler(preds, scaler, true);
    std::vector<double> actual = apply_scaler(dataset.targets, scaler, true);
    if (use_log) {
        for (double& v : predicted) {
            v = std::exp(v);
        }
        for (double& v : actual) {
            v = std::exp(v);
        }
    }
    out << "step,actual,predicted\n";
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        out << i << ',' << detail::format_double(actual[i]) << ','
            << detail::format_double(predicted[i]) << '\n';
    }
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& diag);

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& diag) {
    try {
        return dispatch(args, out, diag);
    } catch (const UsageError& e) {
        diag << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const DataError& e) {
        diag << "error: " << e.what() << '\n';
        return exit_data;
    } catch (const DivergenceError& e) {
        diag << "error: " << e.what() << '\n';
        return exit_numeric;
    } catch (const std::exception& e) {
        diag << "internal error: " << e.what() << '\n';
        return exit_numeric;
    }
}

namespace {

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& diag) {
    CLI::App app{"Crude-oil price forecasting toolkit: LSTM training and GBM simulation "
                 "over daily price CSVs"};
    app.name("oilcast");
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);

    // Shared flags.
    struct {
        std::string input, output, start, end;
        bool monthly = false;
        bool use_log = false;
    } describe;
    struct {
        std::string input, output, start, end;
        std::size_t paths = 50;
        std::size_t horizon = 60;
        double dt = 1.0 / 252.0;
        std::uint64_t seed = 0;
        unsigned threads = 1;
    } gbm_opts;
    struct {
        std::string input, output, start, end, checkpoint;
        bool use_log = true;
        bool fit_whole = false;
        double split = 0.7;
        TrainConfig config;
    } train_opts;
    struct {
        std::string input, start, end, checkpoint;
        bool use_log = true;
        bool fit_whole = false;
        double split = 0.7;
    } eval_opts;
    struct {
        std::string input, output, start, end, checkpoint;
        bool use_log = true;
        std::size_t horizon = 30;
    } forecast_opts;
    struct {
        std::string input, output, start, end, checkpoint;
        bool use_log = true;
        bool fit_whole = false;
        double split = 0.7;
    } export_opts;

    auto* cmd_describe =
        app.add_subcommand("describe", "Export a (optionally monthly-resampled) price series");
    cmd_describe->add_option("--input", describe.input, "Input price CSV")->required();
    cmd_describe->add_option("--out", describe.output, "Output CSV (stdout when omitted)");
    cmd_describe->add_option("--start", describe.start, "Slice start date YYYY-MM-DD");
    cmd_describe->add_option("--end", describe.end, "Slice end date YYYY-MM-DD");
    cmd_describe->add_flag("--monthly", describe.monthly, "Resample to monthly mean prices");
    cmd_describe->add_flag("--log,!--no-log", describe.use_log, "Log-transform the values");

    auto* cmd_gbm = app.add_subcommand(
        "gbm", "Calibrate geometric Brownian motion and simulate price paths");
    cmd_gbm->add_option("--input", gbm_opts.input, "Input price CSV")->required();
    cmd_gbm->add_option("--out", gbm_opts.output, "Output CSV (stdout when omitted)");
    cmd_gbm->add_option("--start", gbm_opts.start, "Calibration start date");
    cmd_gbm->add_option("--end", gbm_opts.end, "Calibration end date");
    cmd_gbm->add_option("--paths", gbm_opts.paths, "Number of simulated paths");
    cmd_gbm->add_option("--horizon", gbm_opts.horizon, "Steps to simulate");
    cmd_gbm->add_option("--dt", gbm_opts.dt, "Time-step length in years");
    cmd_gbm->add_option("--seed", gbm_opts.seed, "Random seed");
    cmd_gbm->add_option("--threads", gbm_opts.threads,
                        "Worker threads (0 = hardware concurrency); result is identical for "
                        "any value");

    auto* cmd_train = app.add_subcommand("train", "Train the stacked LSTM on a price series");
    cmd_train->add_option("--input", train_opts.input, "Input price CSV")->required();
    cmd_train->add_option("--checkpoint", train_opts.checkpoint, "Checkpoint file to write")
        ->required();
    cmd_train->add_option("--out", train_opts.output, "Per-epoch loss CSV");
    cmd_train->add_option("--start", train_opts.start, "Slice start date");
    cmd_train->add_option("--end", train_opts.end, "Slice end date");
    cmd_train->add_flag("--log,!--no-log", train_opts.use_log, "Log-transform prices first");
    cmd_train->add_flag("--fit-whole", train_opts.fit_whole,
                        "Fit the scaler on the whole series instead of the training portion");
    cmd_train->add_option("--split", train_opts.split, "Training fraction of the series");
    cmd_train->add_option("--window", train_opts.config.window_len, "Input window length");
    cmd_train->add_option("--layers", train_opts.config.layer_sizes, "LSTM layer sizes")
        ->delimiter(',');
    cmd_train->add_option("--dropout", train_opts.config.dropout_rate, "Dropout rate");
    cmd_train->add_option("--epochs", train_opts.config.epochs, "Training epochs");
    cmd_train->add_option("--batch", train_opts.config.batch_size, "Mini-batch size");
    cmd_train->add_option("--lr", train_opts.config.learning_rate, "Initial learning rate");
    cmd_train->add_option("--patience", train_opts.config.plateau_patience,
                          "Epochs without improvement before reducing the learning rate");
    cmd_train->add_option("--factor", train_opts.config.plateau_factor,
                          "Learning-rate reduction factor");
    cmd_train->add_option("--min-lr", train_opts.config.min_learning_rate,
                          "Learning-rate floor");
    cmd_train->add_option("--min-delta", train_opts.config.plateau_min_delta,
                          "Minimum improvement that resets the plateau counter");
    cmd_train->add_option("--clip", train_opts.config.grad_clip,
                          "Elementwise gradient clip (0 = off)");
    cmd_train->add_option("--seed", train_opts.config.seed, "Random seed");

    auto* cmd_eval = app.add_subcommand(
        "evaluate", "Denormalized MAE/RMSE of a checkpoint on the train and test sets");
    cmd_eval->add_option("--input", eval_opts.input, "Input price CSV")->required();
    cmd_eval->add_option("--checkpoint", eval_opts.checkpoint, "Checkpoint file")->required();
    cmd_eval->add_option("--start", eval_opts.start, "Slice start date");
    cmd_eval->add_option("--end", eval_opts.end, "Slice end date");
    cmd_eval->add_flag("--log,!--no-log", eval_opts.use_log,
                       "Match the train-time log-transform choice");
    cmd_eval->add_flag("--fit-whole", eval_opts.fit_whole,
                       "Match the train-time scaler fit mode (informational)");
    cmd_eval->add_option("--split", eval_opts.split, "Training fraction used at train time");

    auto* cmd_forecast =
        app.add_subcommand("forecast", "Recursive multi-step forecast from the newest window");
    cmd_forecast->add_option("--input", forecast_opts.input, "Input price CSV")->required();
    cmd_forecast->add_option("--checkpoint", forecast_opts.checkpoint, "Checkpoint file")
        ->required();
    cmd_forecast->add_option("--out", forecast_opts.output, "Output CSV (stdout when omitted)");
    cmd_forecast->add_option("--start", forecast_opts.start, "Slice start date");
    cmd_forecast->add_option("--end", forecast_opts.end, "Slice end date");
    cmd_forecast->add_flag("--log,!--no-log", forecast_opts.use_log,
                           "Match the train-time log-transform choice");
    cmd_forecast->add_option("--horizon", forecast_opts.horizon, "Days to forecast");

    auto* cmd_export = app.add_subcommand(
        "export", "Export denormalized actual-vs-predicted values over the test set");
    cmd_export->add_option("--input", export_opts.input, "Input price CSV")->required();
    cmd_export->add_option("--checkpoint", export_opts.checkpoint, "Checkpoint file")
        ->required();
    cmd_export->add_option("--out", export_opts.output, "Output CSV (stdout when omitted)");
    cmd_export->add_option("--start", export_opts.start, "Slice start date");
    cmd_export->add_option("--end", export_opts.end, "Slice end date");
    cmd_export->add_flag("--log,!--no-log", export_opts.use_log,
                         "Match the train-time log-transform choice");
    cmd_export->add_flag("--fit-whole", export_opts.fit_whole,
                         "Match the train-time scaler fit mode (informational)");
    cmd_export->add_option("--split", export_opts.split, "Training fraction used at train time");

    std::vector<std::string> argv_store;
    argv_store.reserve(args.size() + 1);
    argv_store.push_back("oilcast");
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    argv.reserve(argv_store.size());
    for (auto& arg : argv_store) {
        argv.push_back(arg.data());
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        const CLI::App* target = &app;
        while (!target->get_subcommands().empty()) {
            target = target->get_subcommands().front();
        }
        out << target->help();
        return exit_success;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_success;
    } catch (const CLI::ParseError& e) {
        diag << "error: " << e.what() << '\n';
        diag << app.help();
        return exit_usage;
    }

    if (cmd_describe->parsed()) {
        PriceSeries series = maybe_slice(load_series(describe.input), describe.start,
                                         describe.end);
        if (describe.monthly) {
            series = resample_monthly(series);
        }
        if (describe.use_log) {
            series = log_transform(series);
        }
        write_output(describe.output, out,
                     [&](std::ostream& o) { write_series_csv(o, series); });
        diag << "describe: wrote " << series.size() << " observations\n";
        return exit_success;
    }

    if (cmd_gbm->parsed()) {
        const PriceSeries series =
            maybe_slice(load_series(gbm_opts.input), gbm_opts.start, gbm_opts.end);
        const GbmModel model = estimate_gbm(series, gbm_opts.dt);
        const PathMatrix paths = simulate_paths(model, gbm_opts.horizon, gbm_opts.paths,
                                                gbm_opts.seed, gbm_opts.threads);
        write_output(gbm_opts.output, out, [&](std::ostream& o) { write_paths_csv(o, paths); });
        diag << "gbm: mu=" << detail::format_double(model.mu)
             << " sigma=" << detail::format_double(model.sigma)
             << " s0=" << detail::format_double(model.s0) << ", " << gbm_opts.paths
             << " paths x " << gbm_opts.horizon << " steps\n";
        return exit_success;
    }

    if (cmd_train->parsed()) {
        const PriceSeries series =
            maybe_slice(load_series(train_opts.input), train_opts.start, train_opts.end);
        const PreparedData data =
            prepare(series, train_opts.use_log, train_opts.split, train_opts.fit_whole, nullptr);
        const WindowedDataset train_ds =
            make_windows(data.train_scaled, train_opts.config.window_len);
        const WindowedDataset test_ds =
            make_windows(data.test_scaled, train_opts.config.window_len);

        FitResult result = fit(train_ds, test_ds, train_opts.config);

        write_output(train_opts.checkpoint, out, [&](std::ostream& o) {
            save_checkpoint(o, result.model, data.scaler, train_opts.config);
        });
        if (!train_opts.output.empty()) {
            write_output(train_opts.output, out,
                         [&](std::ostream& o) { write_train_log_csv(o, result.log); });
        }

        const Metrics train_metrics =
            evaluate(result.model, train_ds, data.scaler, train_opts.use_log);
        const Metrics test_metrics =
            evaluate(result.model, test_ds, data.scaler, train_opts.use_log);
        const auto& last = result.log.entries.back();
        diag << "train: " << result.log.entries.size()
             << " epochs, final train_loss=" << detail::format_double(last.train_loss)
             << " val_loss=" << detail::format_double(last.val_loss) << '\n';
        diag << "train: denormalized train mae=" << detail::format_double(train_metrics.mae)
             << " rmse=" << detail::format_double(train_metrics.rmse)
             << " | test mae=" << detail::format_double(test_metrics.mae)
             << " rmse=" << detail::format_double(test_metrics.rmse) << '\n';
        return exit_success;
    }

    if (cmd_eval->parsed()) {
        const Checkpoint ckpt = load_checkpoint_file(eval_opts.checkpoint);
        const PriceSeries series =
            maybe_slice(load_series(eval_opts.input), eval_opts.start, eval_opts.end);
        const PreparedData data =
            prepare(series, eval_opts.use_log, eval_opts.split, eval_opts.fit_whole,
                    &ckpt.scaler);
        const WindowedDataset train_ds = make_windows(data.train_scaled, ckpt.config.window_len);
        const WindowedDataset test_ds = make_windows(data.test_scaled, ckpt.config.window_len);
        const Metrics train_metrics = evaluate(ckpt.model, train_ds, data.scaler,
                                               eval_opts.use_log);
        const Metrics test_metrics = evaluate(ckpt.model, test_ds, data.scaler,
                                              eval_opts.use_log);
        out << "train mae " << detail::format_double(train_metrics.mae) << " rmse "
            << detail::format_double(train_metrics.rmse) << '\n';
        out << "test mae " << detail::format_double(test_metrics.mae) << " rmse "
            << detail::format_double(test_metrics.rmse) << '\n';
        return exit_success;
    }

    if (cmd_forecast->parsed()) {
        const Checkpoint ckpt = load_checkpoint_file(forecast_opts.checkpoint);
        const PriceSeries raw =
            maybe_slice(load_series(forecast_opts.input), forecast_opts.start,
                        forecast_opts.end);
        const PriceSeries working = forecast_opts.use_log ? log_transform(raw) : raw;
        const std::vector<double> scaled = apply_scaler(working.values(), ckpt.scaler);
        if (scaled.size() < ckpt.config.window_len) {
            throw DataError("forecast: series has " + std::to_string(scaled.size()) +
                            " observations, need at least " +
                            std::to_string(ckpt.config.window_len));
        }
        const std::span<const double> seed_window{scaled.data() + scaled.size() -
                                                      ckpt.config.window_len,
                                                  ckpt.config.window_len};
        std::vector<double> forecast = forecast_recursive(ckpt.model, seed_window,
                                                          forecast_opts.horizon,
                                                          ckpt.config.window_len);
        forecast = apply_scaler(forecast, ckpt.scaler, true);
        if (forecast_opts.use_log) {
            for (double& v : forecast) {
                v = std::exp(v);
            }
        }
        write_output(forecast_opts.output, out, [&](std::ostream& o) {
            o << "step,predicted\n";
            for (std::size_t i = 0; i < forecast.size(); ++i) {
                o << (i + 1) << ',' << detail::format_double(forecast[i]) << '\n';
            }
        });
        diag << "forecast: " << forecast.size() << " steps from "
             << format_date(raw.observations.back().date) << '\n';
        return exit_success;
    }

    if (cmd_export->parsed()) {
        const Checkpoint ckpt = load_checkpoint_file(export_opts.checkpoint);
        const PriceSeries series =
            maybe_slice(load_series(export_opts.input), export_opts.start, export_opts.end);
        const PreparedData data =
            prepare(series, export_opts.use_log, export_opts.split, export_opts.fit_whole,
                    &ckpt.scaler);
        const WindowedDataset test_ds = make_windows(data.test_scaled, ckpt.config.window_len);
        write_output(export_opts.output, out, [&](std::ostream& o) {
            write_predictions_csv(o, ckpt.model, test_ds, data.scaler, export_opts.use_log);
        });
        diag << "export: " << test_ds.num_samples() << " test-set predictions\n";
        return exit_success;
    }

    diag << "error: no subcommand selected\n";
    return exit_usage;
}

} // namespace

} // namespace oilcast::cli
