#include "oilcast/train.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "oilcast/errors.hpp"
#include "oilcast/rng.hpp"
#include "text_util.hpp"

namespace oilcast {

void validate(const TrainConfig& config) {
    if (config.epochs < 1) {
        throw UsageError("config: epochs must be >= 1");
    }
    if (config.batch_size < 1) {
        throw UsageError("config: batch_size must be >= 1");
    }
    if (!(config.learning_rate > 0.0)) {
        throw UsageError("config: learning_rate must be > 0");
    }
    if (!(config.plateau_factor > 0.0) || !(config.plateau_factor < 1.0)) {
        throw UsageError("config: plateau_factor must be in (0, 1)");
    }
    if (!(config.min_learning_rate > 0.0)) {
        throw UsageError("config: min_learning_rate must be > 0");
    }
    if (config.window_len < 1) {
        throw UsageError("config: window_len must be >= 1");
    }
    if (config.layer_sizes.empty()) {
        throw UsageError("config: need at least one layer");
    }
    for (const std::size_t size : config.layer_sizes) {
        if (size < 1) {
            throw UsageError("config: layer sizes must be >= 1");
        }
    }
    if (!(config.dropout_rate >= 0.0) || !(config.dropout_rate < 1.0)) {
        throw UsageError("config: dropout_rate must be in [0, 1)");
    }
    if (config.grad_clip < 0.0) {
        throw UsageError("config: grad_clip must be >= 0");
    }
}

AdamState make_adam_state(const StackedLstm& net, const TrainConfig& config) {
    AdamState state;
    state.m.assign(net.param_count(), 0.0);
    state.v.assign(net.param_count(), 0.0);
    state.step = 0;
    state.learning_rate = config.learning_rate;
    return state;
}

void adam_step(StackedLstm& params, const Gradients& grads, AdamState& state,
               const TrainConfig& config) {
    auto param_blocks = param_spans(params);
    auto grad_blocks = param_spans(grads);
    if (param_blocks.size() != grad_blocks.size()) {
        throw ShapeError("adam_step: gradient layout differs from parameters");
    }
    if (state.m.size() != params.param_count()) {
        throw ShapeError("adam_step: Adam state sized for a different network");
    }

    state.step += 1;
    const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(state.step));
    const double lr = state.learning_rate;

    std::size_t offset = 0;
    for (std::size_t blk = 0; blk < param_blocks.size(); ++blk) {
        auto p = param_blocks[blk];
        auto g = grad_blocks[blk];
        if (p.size() != g.size()) {
            throw ShapeError("adam_step: gradient block size mismatch");
        }
        for (std::size_t i = 0; i < p.size(); ++i, ++offset) {
            double& m = state.m[offset];
            double& v = state.v[offset];
            m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * g[i];
            v = config.adam_beta2 * v + (1.0 - config.adam_beta2) * g[i] * g[i];
            const double m_hat = m / bc1;
            const double v_hat = v / bc2;
            p[i] -= lr * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
        }
    }
}

void plateau_step(PlateauScheduler& scheduler, double& learning_rate, double validation_loss,
                  const TrainConfig& config) {
    if (validation_loss < scheduler.best_loss - config.plateau_min_delta) {
        scheduler.best_loss = validation_loss;
        scheduler.bad_epochs = 0;
        return;
    }
    scheduler.bad_epochs += 1;
    if (scheduler.bad_epochs >= config.plateau_patience) {
        learning_rate = std::max(learning_rate * config.plateau_factor, config.min_learning_rate);
        scheduler.bad_epochs = 0;
    }
}

double mse_loss(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.empty() || predictions.size() != targets.size()) {
        throw ShapeError("mse_loss: need equal nonzero lengths, got " +
                         std::to_string(predictions.size()) + " and " +
                         std::to_string(targets.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - targets[i];
        sum += d * d;
    }
    return sum / static_cast<double>(predictions.size());
}

namespace {

void add_gradients(Gradients& acc, const Gradients& g) {
    auto a = param_spans(acc);
    auto b = param_spans(g);
    for (std::size_t blk = 0; blk < a.size(); ++blk) {
        for (std::size_t i = 0; i < a[blk].size(); ++i) {
            a[blk][i] += b[blk][i];
        }
    }
}

void clip_gradients(Gradients& g, double threshold) {
    for (auto blk : param_spans(g)) {
        for (double& v : blk) {
            v = std::clamp(v, -threshold, threshold);
        }
    }
}

double dataset_mse(const StackedLstm& net, const WindowedDataset& ds) {
    std::vector<double> preds;
    preds.reserve(ds.num_samples());
    for (std::size_t k = 0; k < ds.num_samples(); ++k) {
        preds.push_back(forward_infer(ds.window(k), net));
    }
    return mse_loss(preds, ds.targets);
}

} // namespace

FitResult fit(const WindowedDataset& train, const WindowedDataset& validation,
              const TrainConfig& config) {
    validate(config);
    if (train.num_samples() == 0) {
        throw UsageError("fit: empty training set");
    }
    if (validation.num_samples() == 0) {
        throw UsageError("fit: empty validation set");
    }

    FitResult result;
    result.model = init_network(config.layer_sizes, config.dropout_rate, config.seed);
    result.adam = make_adam_state(result.model, config);
    PlateauScheduler scheduler;

    std::vector<std::size_t> order(train.num_samples());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng = Rng::substream(config.seed, 2 * epoch);
        Rng sample_seeds = Rng::substream(config.seed, 2 * epoch + 1);
        shuffle_rng.shuffle(order);

        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t batch = std::min(config.batch_size, order.size() - start);
            Gradients batch_grads = zero_gradients(result.model);
            for (std::size_t k = 0; k < batch; ++k) {
                const std::size_t idx = order[start + k];
                ForwardCache cache;
                const double pred =
                    forward_train(train.window(idx), result.model, sample_seeds.next_u64(), cache);
                // d/dpred of the batch-mean squared error.
                const double upstream =
                    2.0 * (pred - train.targets[idx]) / static_cast<double>(batch);
                add_gradients(batch_grads, backward_sequence(cache, result.model, upstream));
            }
            if (config.grad_clip > 0.0) {
                clip_gradients(batch_grads, config.grad_clip);
            }
            adam_step(result.model, batch_grads, result.adam, config);
        }

        const double train_loss = dataset_mse(result.model, train);
        const double val_loss = dataset_mse(result.model, validation);
        if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
            throw DivergenceError("fit: non-finite loss at epoch " + std::to_string(epoch + 1));
        }
        result.log.entries.push_back({train_loss, val_loss, result.adam.learning_rate});
        plateau_step(scheduler, result.adam.learning_rate, val_loss, config);
    }
    return result;
}

double predict_one_step(const StackedLstm& model, std::span<const double> window,
                        std::size_t expected_window_len) {
    if (expected_window_len != 0 && window.size() != expected_window_len) {
        throw ShapeError("predict_one_step: window length " + std::to_string(window.size()) +
                         " != trained length " + std::to_string(expected_window_len));
    }
    return forward_infer(window, model);
}

std::vector<double> forecast_recursive(const StackedLstm& model,
                                       std::span<const double> seed_window, std::size_t horizon,
                                       std::size_t expected_window_len) {
    if (horizon < 1) {
        throw UsageError("forecast_recursive: horizon must be >= 1");
    }
    std::vector<double> window(seed_window.begin(), seed_window.end());
    std::vector<double> out;
    out.reserve(horizon);
    for (std::size_t k = 0; k < horizon; ++k) {
        const double pred = predict_one_step(model, window, expected_window_len);
        out.push_back(pred);
        window.erase(window.begin());
        window.push_back(pred);
    }
    return out;
}

Metrics evaluate(const StackedLstm& model, const WindowedDataset& dataset, const Scaler& scaler,
                 bool log_scale) {
    if (dataset.num_samples() == 0) {
        throw UsageError("evaluate: empty dataset");
    }
    std::vector<double> preds;
    preds.reserve(dataset.num_samples());
    for (std::size_t k = 0; k < dataset.num_samples(); ++k) {
        preds.push_back(forward_infer(dataset.window(k), model));
    }
    std::vector<double> p = apply_scaler(preds, scaler, true);
    std::vector<double> t = apply_scaler(dataset.targets, scaler, true);
    if (log_scale) {
        for (double& v : p) {
            v = std::exp(v);
        }
        for (double& v : t) {
            v = std::exp(v);
        }
    }

    double abs_sum = 0.0;
    double sq_sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - t[i];
        abs_sum += std::abs(d);
        sq_sum += d * d;
    }
    const auto n = static_cast<double>(p.size());
    return {abs_sum / n, std::sqrt(sq_sum / n)};
}

// ---------------------------------------------------------------------------
// Checkpoint format v1: versioned text, whitespace-tokenized, floats as
// shortest round-trip decimals.

namespace {

constexpr const char* checkpoint_magic = "oilcast checkpoint";
constexpr const char* checkpoint_version = "v1";

std::string join_sizes(const std::vector<std::size_t>& sizes) {
    std::string out;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += std::to_string(sizes[i]);
    }
    return out;
}

std::vector<std::size_t> split_sizes(const std::string& text, const std::string& context) {
    std::vector<std::size_t> sizes;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto piece = text.substr(pos, comma == std::string::npos ? std::string::npos
                                                                       : comma - pos);
        const long long v = detail::parse_int(piece, context);
        if (v < 1) {
            throw CheckpointError(context + ": layer size must be >= 1");
        }
        sizes.push_back(static_cast<std::size_t>(v));
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }
    return sizes;
}

void write_matrix(std::ostream& out, const char* name, const Matrix& m) {
    out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto row = m.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
            out << (j > 0 ? " " : "") << detail::format_double(row[j]);
        }
        out << '\n';
    }
}

void write_vector(std::ostream& out, const char* name, std::span<const double> v) {
    out << name << ' ' << v.size() << '\n';
    for (std::size_t i = 0; i < v.size(); ++i) {
        out << (i > 0 ? " " : "") << detail::format_double(v[i]);
    }
    out << '\n';
}

// Whitespace tokenizer that remembers the line it is on, so truncation
// errors can name an offset.
class CheckpointReader {
public:
    explicit CheckpointReader(std::istream& in) : in_(in) {}

    std::string next(const std::string& what) {
        while (pos_ >= tokens_.size()) {
            std::string line;
            if (!std::getline(in_, line)) {
                throw CheckpointError("truncated checkpoint: expected " + what + " after line " +
                                      std::to_string(line_no_));
            }
            ++line_no_;
            tokens_.clear();
            pos_ = 0;
            std::istringstream split(line);
            std::string tok;
            while (split >> tok) {
                tokens_.push_back(tok);
            }
        }
        return tokens_[pos_++];
    }

    void expect(const std::string& literal) {
        const std::string tok = next("'" + literal + "'");
        if (tok != literal) {
            throw CheckpointError("checkpoint line " + std::to_string(line_no_) + ": expected '" +
                                  literal + "', got '" + tok + "'");
        }
    }

    double next_double(const std::string& what) {
        const std::string tok = next(what);
        double value = 0.0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
            throw CheckpointError("checkpoint line " + std::to_string(line_no_) + ": bad " +
                                  what + " '" + tok + "'");
        }
        return value;
    }

    std::uint64_t next_uint(const std::string& what) {
        const std::string tok = next(what);
        std::uint64_t value = 0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
            throw CheckpointError("checkpoint line " + std::to_string(line_no_) + ": bad " +
                                  what + " '" + tok + "'");
        }
        return value;
    }

    std::size_t line_no() const { return line_no_; }

private:
    std::istream& in_;
    std::vector<std::string> tokens_;
    std::size_t pos_ = 0;
    std::size_t line_no_ = 0;
};

Matrix read_matrix(CheckpointReader& reader, const char* name, std::size_t rows,
                   std::size_t cols) {
    reader.expect(name);
    const auto r = reader.next_uint("row count");
    const auto c = reader.next_uint("column count");
    if (r != rows || c != cols) {
        throw CheckpointError(std::string("checkpoint: ") + name + " has shape " +
                              std::to_string(r) + "x" + std::to_string(c) + ", expected " +
                              std::to_string(rows) + "x" + std::to_string(cols));
    }
    Matrix m(rows, cols);
    for (double& v : m.flat()) {
        v = reader.next_double("matrix entry");
    }
    return m;
}

std::vector<double> read_vector(CheckpointReader& reader, const char* name, std::size_t len) {
    reader.expect(name);
    const auto n = reader.next_uint("vector length");
    if (n != len) {
        throw CheckpointError(std::string("checkpoint: ") + name + " has length " +
                              std::to_string(n) + ", expected " + std::to_string(len));
    }
    std::vector<double> v(len);
    for (double& x : v) {
        x = reader.next_double("vector entry");
    }
    return v;
}

} // namespace

void save_checkpoint(std::ostream& out, const StackedLstm& model, const Scaler& scaler,
                     const TrainConfig& config) {
    auto f = [](double v) { return detail::format_double(v); };

    out << checkpoint_magic << ' ' << checkpoint_version << '\n';
    out << "[config]\n";
    out << "epochs " << config.epochs << '\n';
    out << "batch_size " << config.batch_size << '\n';
    out << "learning_rate " << f(config.learning_rate) << '\n';
    out << "adam_beta1 " << f(config.adam_beta1) << '\n';
    out << "adam_beta2 " << f(config.adam_beta2) << '\n';
    out << "adam_epsilon " << f(config.adam_epsilon) << '\n';
    out << "plateau_factor " << f(config.plateau_factor) << '\n';
    out << "plateau_patience " << config.plateau_patience << '\n';
    out << "plateau_min_delta " << f(config.plateau_min_delta) << '\n';
    out << "min_learning_rate " << f(config.min_learning_rate) << '\n';
    out << "window_len " << config.window_len << '\n';
    out << "layer_sizes " << join_sizes(config.layer_sizes) << '\n';
    out << "dropout_rate " << f(config.dropout_rate) << '\n';
    out << "seed " << config.seed << '\n';
    out << "grad_clip " << f(config.grad_clip) << '\n';
    out << "[scaler]\n";
    out << "min " << f(scaler.min) << '\n';
    out << "max " << f(scaler.max) << '\n';
    out << "[model]\n";
    out << "dropout_rate " << f(model.dropout_rate) << '\n';
    out << "layers " << model.layers.size() << '\n';
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        out << "layer " << l << " in " << layer.in_size << " hidden " << layer.hidden_size
            << '\n';
        write_matrix(out, "w_forget", layer.w_forget);
        write_matrix(out, "w_input", layer.w_input);
        write_matrix(out, "w_candidate", layer.w_candidate);
        write_matrix(out, "w_output", layer.w_output);
        write_matrix(out, "u_forget", layer.u_forget);
        write_matrix(out, "u_input", layer.u_input);
        write_matrix(out, "u_candidate", layer.u_candidate);
        write_matrix(out, "u_output", layer.u_output);
        write_vector(out, "b_forget", layer.b_forget);
        write_vector(out, "b_input", layer.b_input);
        write_vector(out, "b_candidate", layer.b_candidate);
        write_vector(out, "b_output", layer.b_output);
    }
    write_vector(out, "head_weights", model.head_weights);
    out << "head_bias " << f(model.head_bias) << '\n';
    out << "[end]\n";
}

Checkpoint load_checkpoint(std::istream& in) {
    CheckpointReader reader(in);
    reader.expect("oilcast");
    reader.expect("checkpoint");
    const std::string version = reader.next("version tag");
    if (version != checkpoint_version) {
        throw CheckpointError("unsupported checkpoint version '" + version + "' (expected " +
                              std::string(checkpoint_version) + ")");
    }

    Checkpoint ckpt;
    reader.expect("[config]");
    reader.expect("epochs");
    ckpt.config.epochs = static_cast<std::size_t>(reader.next_uint("epochs"));
    reader.expect("batch_size");
    ckpt.config.batch_size = static_cast<std::size_t>(reader.next_uint("batch_size"));
    reader.expect("learning_rate");
    ckpt.config.learning_rate = reader.next_double("learning_rate");
    reader.expect("adam_beta1");
    ckpt.config.adam_beta1 = reader.next_double("adam_beta1");
    reader.expect("adam_beta2");
    ckpt.config.adam_beta2 = reader.next_double("adam_beta2");
    reader.expect("adam_epsilon");
    ckpt.config.adam_epsilon = reader.next_double("adam_epsilon");
    reader.expect("plateau_factor");
    ckpt.config.plateau_factor = reader.next_double("plateau_factor");
    reader.expect("plateau_patience");
    ckpt.config.plateau_patience = static_cast<std::size_t>(reader.next_uint("plateau_patience"));
    reader.expect("plateau_min_delta");
    ckpt.config.plateau_min_delta = reader.next_double("plateau_min_delta");
    reader.expect("min_learning_rate");
    ckpt.config.min_learning_rate = reader.next_double("min_learning_rate");
    reader.expect("window_len");
    ckpt.config.window_len = static_cast<std::size_t>(reader.next_uint("window_len"));
    reader.expect("layer_sizes");
    ckpt.config.layer_sizes = split_sizes(reader.next("layer_sizes"), "layer_sizes");
    reader.expect("dropout_rate");
    ckpt.config.dropout_rate = reader.next_double("dropout_rate");
    reader.expect("seed");
    ckpt.config.seed = reader.next_uint("seed");
    reader.expect("grad_clip");
    ckpt.config.grad_clip = reader.next_double("grad_clip");

    reader.expect("[scaler]");
    reader.expect("min");
    ckpt.scaler.min = reader.next_double("scaler min");
    reader.expect("max");
    ckpt.scaler.max = reader.next_double("scaler max");

    reader.expect("[model]");
    reader.expect("dropout_rate");
    ckpt.model.dropout_rate = reader.next_double("model dropout_rate");
    reader.expect("layers");
    const auto num_layers = static_cast<std::size_t>(reader.next_uint("layer count"));
    if (num_layers == 0) {
        throw CheckpointError("checkpoint: zero layers");
    }
    std::size_t expect_in = 1;
    for (std::size_t l = 0; l < num_layers; ++l) {
        reader.expect("layer");
        const auto index = reader.next_uint("layer index");
        if (index != l) {
            throw CheckpointError("checkpoint: layer index " + std::to_string(index) +
                                  " out of order");
        }
        LstmLayerParams layer;
        reader.expect("in");
        layer.in_size = static_cast<std::size_t>(reader.next_uint("in_size"));
        reader.expect("hidden");
        layer.hidden_size = static_cast<std::size_t>(reader.next_uint("hidden_size"));
        if (layer.in_size != expect_in) {
            throw CheckpointError("checkpoint: layer " + std::to_string(l) + " in_size " +
                                  std::to_string(layer.in_size) + " breaks the layer chain");
        }
        layer.w_forget = read_matrix(reader, "w_forget", layer.hidden_size, layer.in_size);
        layer.w_input = read_matrix(reader, "w_input", layer.hidden_size, layer.in_size);
        layer.w_candidate = read_matrix(reader, "w_candidate", layer.hidden_size, layer.in_size);
        layer.w_output = read_matrix(reader, "w_output", layer.hidden_size, layer.in_size);
        layer.u_forget = read_matrix(reader, "u_forget", layer.hidden_size, layer.hidden_size);
        layer.u_input = read_matrix(reader, "u_input", layer.hidden_size, layer.hidden_size);
        layer.u_candidate =
            read_matrix(reader, "u_candidate", layer.hidden_size, layer.hidden_size);
        layer.u_output = read_matrix(reader, "u_output", layer.hidden_size, layer.hidden_size);
        layer.b_forget = read_vector(reader, "b_forget", layer.hidden_size);
        layer.b_input = read_vector(reader, "b_input", layer.hidden_size);
        layer.b_candidate = read_vector(reader, "b_candidate", layer.hidden_size);
        layer.b_output = read_vector(reader, "b_output", layer.hidden_size);
        expect_in = layer.hidden_size;
        ckpt.model.layers.push_back(std::move(layer));
    }
    ckpt.model.head_weights = read_vector(reader, "head_weights", expect_in);
    reader.expect("head_bias");
    ckpt.model.head_bias = reader.next_double("head_bias");
    reader.expect("[end]");
    return ckpt;
}

void write_train_log_csv(std::ostream& out, const TrainLog& log) {
    out << "epoch,train_loss,val_loss,lr\n";
    for (std::size_t i = 0; i < log.entries.size(); ++i) {
        const auto& e = log.entries[i];
        out << (i + 1) << ',' << detail::format_double(e.train_loss) << ','
            << detail::format_double(e.val_loss) << ',' << detail::format_double(e.learning_rate)
            << '\n';
    }
}

} // namespace oilcast
