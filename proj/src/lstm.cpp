#include "oilcast/lstm.hpp"

#include <cmath>
#include <type_traits>

#include "oilcast/errors.hpp"
#include "oilcast/rng.hpp"

namespace oilcast {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

template <typename Net>
auto collect_spans(Net& net) {
    using SpanT = std::conditional_t<std::is_const_v<Net>, std::span<const double>,
                                     std::span<double>>;
    std::vector<SpanT> out;
    out.reserve(net.layers.size() * 12 + 2);
    for (auto& layer : net.layers) {
        out.push_back(layer.w_forget.flat());
        out.push_back(layer.w_input.flat());
        out.push_back(layer.w_candidate.flat());
        out.push_back(layer.w_output.flat());
        out.push_back(layer.u_forget.flat());
        out.push_back(layer.u_input.flat());
        out.push_back(layer.u_candidate.flat());
        out.push_back(layer.u_output.flat());
        out.push_back(SpanT{layer.b_forget});
        out.push_back(SpanT{layer.b_input});
        out.push_back(SpanT{layer.b_candidate});
        out.push_back(SpanT{layer.b_output});
    }
    out.push_back(SpanT{net.head_weights});
    out.push_back(SpanT{&net.head_bias, 1});
    return out;
}

// Gate pre-activation a_g = W_g x + U_g h_prev + b_g, then the gate's
// nonlinearity.
std::vector<double> gate_preact(const Matrix& w, const Matrix& u, const std::vector<double>& b,
                                std::span<const double> x, std::span<const double> h_prev) {
    std::vector<double> a = b;
    matvec_add(w, x, a);
    matvec_add(u, h_prev, a);
    return a;
}

} // namespace

std::size_t StackedLstm::param_count() const {
    std::size_t n = 0;
    for (const auto& span : collect_spans(*this)) {
        n += span.size();
    }
    return n;
}

Gradients zero_gradients(const StackedLstm& net) {
    Gradients g;
    g.layers.reserve(net.layers.size());
    for (const auto& layer : net.layers) {
        LstmLayerParams z;
        z.in_size = layer.in_size;
        z.hidden_size = layer.hidden_size;
        z.w_forget = z.w_input = z.w_candidate = z.w_output =
            Matrix(layer.hidden_size, layer.in_size);
        z.u_forget = z.u_input = z.u_candidate = z.u_output =
            Matrix(layer.hidden_size, layer.hidden_size);
        z.b_forget = z.b_input = z.b_candidate = z.b_output =
            std::vector<double>(layer.hidden_size, 0.0);
        g.layers.push_back(std::move(z));
    }
    g.head_weights.assign(net.head_weights.size(), 0.0);
    g.head_bias = 0.0;
    g.dropout_rate = 0.0;
    return g;
}

std::vector<std::span<double>> param_spans(StackedLstm& net) { return collect_spans(net); }

std::vector<std::span<const double>> param_spans(const StackedLstm& net) {
    return collect_spans(net);
}

StackedLstm init_network(const std::vector<std::size_t>& layer_sizes, double dropout_rate,
                         std::uint64_t seed) {
    if (layer_sizes.empty()) {
        throw UsageError("init_network: need at least one layer");
    }
    for (const std::size_t size : layer_sizes) {
        if (size < 1) {
            throw UsageError("init_network: layer sizes must be >= 1");
        }
    }
    if (!(dropout_rate >= 0.0) || !(dropout_rate < 1.0)) {
        throw UsageError("init_network: dropout_rate must be in [0, 1)");
    }

    Rng rng(seed);
    auto glorot = [&rng](Matrix& m, std::size_t fan_in, std::size_t fan_out) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& w : m.flat()) {
            w = rng.uniform(-bound, bound);
        }
    };

    StackedLstm net;
    net.dropout_rate = dropout_rate;
    std::size_t in_size = 1;
    for (const std::size_t hidden : layer_sizes) {
        LstmLayerParams layer;
        layer.in_size = in_size;
        layer.hidden_size = hidden;
        for (Matrix* w : {&layer.w_forget, &layer.w_input, &layer.w_candidate, &layer.w_output}) {
            *w = Matrix(hidden, in_size);
            glorot(*w, in_size, hidden);
        }
        for (Matrix* u : {&layer.u_forget, &layer.u_input, &layer.u_candidate, &layer.u_output}) {
            *u = Matrix(hidden, hidden);
            glorot(*u, hidden, hidden);
        }
        // Forget bias starts at 1 so early cell state survives.
        layer.b_forget.assign(hidden, 1.0);
        layer.b_input.assign(hidden, 0.0);
        layer.b_candidate.assign(hidden, 0.0);
        layer.b_output.assign(hidden, 0.0);
        net.layers.push_back(std::move(layer));
        in_size = hidden;
    }

    net.head_weights.assign(in_size, 0.0);
    {
        const double bound = std::sqrt(6.0 / static_cast<double>(in_size + 1));
        for (double& w : net.head_weights) {
            w = rng.uniform(-bound, bound);
        }
    }
    net.head_bias = 0.0;
    return net;
}

LstmState zero_state(const StackedLstm& net) {
    LstmState state;
    for (const auto& layer : net.layers) {
        state.hidden.emplace_back(layer.hidden_size, 0.0);
        state.cell.emplace_back(layer.hidden_size, 0.0);
    }
    return state;
}

CellStep cell_step(std::span<const double> x, std::span<const double> h_prev,
                   std::span<const double> c_prev, const LstmLayerParams& params) {
    if (x.size() != params.in_size) {
        throw ShapeError("cell_step: input size " + std::to_string(x.size()) + " != in_size " +
                         std::to_string(params.in_size));
    }
    if (h_prev.size() != params.hidden_size || c_prev.size() != params.hidden_size) {
        throw ShapeError("cell_step: state size mismatch with hidden_size " +
                         std::to_string(params.hidden_size));
    }

    CellStep step;
    step.forget = gate_preact(params.w_forget, params.u_forget, params.b_forget, x, h_prev);
    step.input = gate_preact(params.w_input, params.u_input, params.b_input, x, h_prev);
    step.candidate =
        gate_preact(params.w_candidate, params.u_candidate, params.b_candidate, x, h_prev);
    step.output = gate_preact(params.w_output, params.u_output, params.b_output, x, h_prev);

    const std::size_t n = params.hidden_size;
    step.cell.resize(n);
    step.cell_tanh.resize(n);
    step.hidden.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        step.forget[i] = sigmoid(step.forget[i]);
        step.input[i] = sigmoid(step.input[i]);
        step.candidate[i] = std::tanh(step.candidate[i]);
        step.output[i] = sigmoid(step.output[i]);
        step.cell[i] = step.forget[i] * c_prev[i] + step.input[i] * step.candidate[i];
        step.cell_tanh[i] = std::tanh(step.cell[i]);
        step.hidden[i] = step.output[i] * step.cell_tanh[i];
    }
    return step;
}

namespace {

double run_forward(std::span<const double> window, const StackedLstm& net, bool training,
                   std::uint64_t dropout_seed, ForwardCache* cache) {
    if (window.empty()) {
        throw ShapeError("forward: empty window");
    }
    const std::size_t num_layers = net.layers.size();
    const std::size_t steps = window.size();
    const double keep = 1.0 - net.dropout_rate;
    const double inv_keep = 1.0 / keep;

    std::vector<Rng> mask_streams;
    if (training) {
        mask_streams.reserve(num_layers);
        for (std::size_t l = 0; l < num_layers; ++l) {
            mask_streams.push_back(Rng::substream(dropout_seed, l));
        }
        cache->steps = steps;
        cache->layer_input.assign(num_layers, {});
        cache->cell.assign(num_layers, {});
        cache->mask.assign(num_layers, {});
        for (std::size_t l = 0; l < num_layers; ++l) {
            cache->layer_input[l].resize(steps);
            cache->cell[l].resize(steps);
            cache->mask[l].resize(steps);
        }
    }

    auto state = zero_state(net);
    std::vector<double> x;
    for (std::size_t t = 0; t < steps; ++t) {
        x.assign(1, window[t]);
        for (std::size_t l = 0; l < num_layers; ++l) {
            auto step = cell_step(x, state.hidden[l], state.cell[l], net.layers[l]);
            state.hidden[l] = step.hidden;
            state.cell[l] = step.cell;
            if (training) {
                const std::size_t n = net.layers[l].hidden_size;
                std::vector<double> mask(n);
                std::vector<double> dropped(n);
                for (std::size_t i = 0; i < n; ++i) {
                    mask[i] = mask_streams[l].next_double() >= net.dropout_rate ? 1.0 : 0.0;
                    dropped[i] = step.hidden[i] * mask[i] * inv_keep;
                }
                cache->layer_input[l][t] = std::move(x);
                cache->cell[l][t] = std::move(step);
                cache->mask[l][t] = std::move(mask);
                x = std::move(dropped);
            } else {
                x = std::move(step.hidden);
            }
        }
    }

    double prediction = net.head_bias;
    for (std::size_t i = 0; i < net.head_weights.size(); ++i) {
        prediction += net.head_weights[i] * x[i];
    }
    if (training) {
        cache->head_input = std::move(x);
        cache->prediction = prediction;
    }
    return prediction;
}

} // namespace

double forward_infer(std::span<const double> window, const StackedLstm& net) {
    return run_forward(window, net, false, 0, nullptr);
}

double forward_train(std::span<const double> window, const StackedLstm& net,
                     std::uint64_t dropout_seed, ForwardCache& cache) {
    return run_forward(window, net, true, dropout_seed, &cache);
}

Gradients backward_sequence(const ForwardCache& cache, const StackedLstm& net, double upstream) {
    if (cache.steps == 0) {
        throw UsageError("backward_sequence: cache is empty; run a train-mode forward first");
    }
    const std::size_t num_layers = net.layers.size();
    const std::size_t steps = cache.steps;
    const double inv_keep = 1.0 / (1.0 - net.dropout_rate);

    Gradients grads = zero_gradients(net);

    // Head sees the dropped top hidden state of the final step.
    grads.head_bias = upstream;
    for (std::size_t i = 0; i < net.head_weights.size(); ++i) {
        grads.head_weights[i] = upstream * cache.head_input[i];
    }

    // d(loss)/d(dropped output of layer l at step t); starts as the
    // head's pull on the top layer and becomes each layer's pull on the
    // one below it as the loop descends.
    std::vector<std::vector<double>> dx_above(steps);
    const std::size_t top = num_layers - 1;
    for (std::size_t t = 0; t + 1 < steps; ++t) {
        dx_above[t].assign(net.layers[top].hidden_size, 0.0);
    }
    dx_above[steps - 1].resize(net.layers[top].hidden_size);
    for (std::size_t i = 0; i < net.layers[top].hidden_size; ++i) {
        dx_above[steps - 1][i] = upstream * net.head_weights[i];
    }

    for (std::size_t l = num_layers; l-- > 0;) {
        const auto& params = net.layers[l];
        auto& layer_grads = grads.layers[l];
        const std::size_t hid = params.hidden_size;
        const std::vector<double> zeros(hid, 0.0);

        std::vector<double> dh_next(hid, 0.0);
        std::vector<double> dc_next(hid, 0.0);
        std::vector<std::vector<double>> dx_below(steps);

        std::vector<double> da_f(hid), da_i(hid), da_g(hid), da_o(hid);
        for (std::size_t t = steps; t-- > 0;) {
            const auto& step = cache.cell[l][t];
            const auto& c_prev = t > 0 ? cache.cell[l][t - 1].cell : zeros;
            const auto& h_prev = t > 0 ? cache.cell[l][t - 1].hidden : zeros;
            const auto& mask = cache.mask[l][t];

            for (std::size_t i = 0; i < hid; ++i) {
                // Dropout feeds the layer above; recurrence does not.
                const double dh = dx_above[t][i] * mask[i] * inv_keep + dh_next[i];
                const double d_out = dh * step.cell_tanh[i];
                const double dc = dh * step.output[i] *
                                      (1.0 - step.cell_tanh[i] * step.cell_tanh[i]) +
                                  dc_next[i];
                const double d_forget = dc * c_prev[i];
                const double d_input = dc * step.candidate[i];
                const double d_cand = dc * step.input[i];
                dc_next[i] = dc * step.forget[i];

                da_f[i] = d_forget * step.forget[i] * (1.0 - step.forget[i]);
                da_i[i] = d_input * step.input[i] * (1.0 - step.input[i]);
                da_g[i] = d_cand * (1.0 - step.candidate[i] * step.candidate[i]);
                da_o[i] = d_out * step.output[i] * (1.0 - step.output[i]);
            }

            const auto& x = cache.layer_input[l][t];
            outer_add(da_f, x, layer_grads.w_forget);
            outer_add(da_i, x, layer_grads.w_input);
            outer_add(da_g, x, layer_grads.w_candidate);
            outer_add(da_o, x, layer_grads.w_output);
            outer_add(da_f, h_prev, layer_grads.u_forget);
            outer_add(da_i, h_prev, layer_grads.u_input);
            outer_add(da_g, h_prev, layer_grads.u_candidate);
            outer_add(da_o, h_prev, layer_grads.u_output);
            for (std::size_t i = 0; i < hid; ++i) {
                layer_grads.b_forget[i] += da_f[i];
                layer_grads.b_input[i] += da_i[i];
                layer_grads.b_candidate[i] += da_g[i];
                layer_grads.b_output[i] += da_o[i];
            }

            dh_next.assign(hid, 0.0);
            matvec_transpose_add(params.u_forget, da_f, dh_next);
            matvec_transpose_add(params.u_input, da_i, dh_next);
            matvec_transpose_add(params.u_candidate, da_g, dh_next);
            matvec_transpose_add(params.u_output, da_o, dh_next);

            dx_below[t].assign(params.in_size, 0.0);
            matvec_transpose_add(params.w_forget, da_f, dx_below[t]);
            matvec_transpose_add(params.w_input, da_i, dx_below[t]);
            matvec_transpose_add(params.w_candidate, da_g, dx_below[t]);
            matvec_transpose_add(params.w_output, da_o, dx_below[t]);
        }
        dx_above = std::move(dx_below);
    }
    return grads;
}

double gradient_check(const StackedLstm& net, std::span<const double> window, double target,
                      double fd_step) {
    if (net.dropout_rate != 0.0) {
        throw UsageError("gradient_check: dropout must be 0");
    }
    if (!(fd_step > 0.0)) {
        throw UsageError("gradient_check: fd_step must be > 0");
    }

    ForwardCache cache;
    const double pred = forward_train(window, net, 0, cache);
    const Gradients analytic = backward_sequence(cache, net, 2.0 * (pred - target));

    StackedLstm probe = net;
    auto probe_spans = param_spans(probe);
    auto analytic_spans = param_spans(analytic);

    auto loss = [&](const StackedLstm& n) {
        const double p = forward_infer(window, n);
        return (p - target) * (p - target);
    };

    double max_rel = 0.0;
    for (std::size_t s = 0; s < probe_spans.size(); ++s) {
        for (std::size_t i = 0; i < probe_spans[s].size(); ++i) {
            double& theta = probe_spans[s][i];
            const double saved = theta;
            theta = saved + fd_step;
            const double up = loss(probe);
            theta = saved - fd_step;
            const double down = loss(probe);
            theta = saved;

            const double numeric = (up - down) / (2.0 * fd_step);
            const double exact = analytic_spans[s][i];
            const double rel = std::abs(exact - numeric) /
                               std::max({std::abs(exact), std::abs(numeric), 1e-8});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

} // namespace oilcast
