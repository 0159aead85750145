#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oilcast/matrix.hpp"

namespace oilcast {

// One LSTM layer. Gate order everywhere is forget, input, candidate,
// output; W maps the layer input, U the previous hidden state.
struct LstmLayerParams {
    std::size_t in_size = 0;
    std::size_t hidden_size = 0;

    Matrix w_forget, w_input, w_candidate, w_output; // hidden_size x in_size
    Matrix u_forget, u_input, u_candidate, u_output; // hidden_size x hidden_size
    std::vector<double> b_forget, b_input, b_candidate, b_output;

    bool operator==(const LstmLayerParams&) const = default;
};

// Stack of LSTM layers plus a scalar dense head. Layer 0 consumes one
// scalar input per step; layer k consumes layer k-1's hidden output.
struct StackedLstm {
    std::vector<LstmLayerParams> layers;
    std::vector<double> head_weights; // hidden_size of last layer
    double head_bias = 0.0;
    double dropout_rate = 0.0;

    std::size_t param_count() const;
    bool operator==(const StackedLstm&) const = default;
};

// Gradient container; shapes mirror StackedLstm exactly.
using Gradients = StackedLstm;

Gradients zero_gradients(const StackedLstm& net);

// All parameter blocks of a network in one fixed enumeration order
// (per layer: W then U then b, gates in forget/input/candidate/output
// order; head weights, then head bias). Adam state, checkpointing, and
// the finite-difference harness all walk this order.
std::vector<std::span<double>> param_spans(StackedLstm& net);
std::vector<std::span<const double>> param_spans(const StackedLstm& net);

// Glorot-uniform weights with bound sqrt(6 / (fan_in + fan_out)) per
// matrix, zero biases except the forget-gate bias at 1. Deterministic
// for a fixed seed.
StackedLstm init_network(const std::vector<std::size_t>& layer_sizes, double dropout_rate,
                         std::uint64_t seed);

// Per-layer hidden/cell state.
struct LstmState {
    std::vector<std::vector<double>> hidden;
    std::vector<std::vector<double>> cell;
};

LstmState zero_state(const StackedLstm& net);

// Activations of one cell update; kept because backward needs them.
struct CellStep {
    std::vector<double> forget, input, candidate, output; // gate activations
    std::vector<double> cell;                             // c_t
    std::vector<double> cell_tanh;                        // tanh(c_t)
    std::vector<double> hidden;                           // h_t = output . tanh(c_t)
};

// f = sigmoid(W_f x + U_f h + b_f)        i = sigmoid(W_i x + U_i h + b_i)
// g = tanh(W_c x + U_c h + b_c)           o = sigmoid(W_o x + U_o h + b_o)
// c_t = f . c_prev + i . g                h_t = o . tanh(c_t)
CellStep cell_step(std::span<const double> x, std::span<const double> h_prev,
                   std::span<const double> c_prev, const LstmLayerParams& params);

// Everything backward_sequence needs, per layer and time step.
struct ForwardCache {
    std::size_t steps = 0;
    // [layer][t]
    std::vector<std::vector<std::vector<double>>> layer_input; // x fed to the layer (post-dropout of the layer below)
    std::vector<std::vector<CellStep>> cell;
    std::vector<std::vector<std::vector<double>>> mask; // dropout keep mask, 0/1
    std::vector<double> head_input;                     // dropped final hidden of the top layer
    double prediction = 0.0;
};

// Inference: zero initial state, no dropout, returns the head output.
double forward_infer(std::span<const double> window, const StackedLstm& net);

// Training: inverted dropout on each layer's hidden output (the feed to
// the next layer and to the head; recurrent connections are never
// dropped). Masks come from per-layer substreams of dropout_seed.
double forward_train(std::span<const double> window, const StackedLstm& net,
                     std::uint64_t dropout_seed, ForwardCache& cache);

// Exact BPTT gradients of (upstream * prediction) for every parameter,
// reusing the cached dropout masks.
Gradients backward_sequence(const ForwardCache& cache, const StackedLstm& net, double upstream);

// Max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
// for the squared-error loss (prediction - target)^2, numeric side by
// central differences of width fd_step. Requires dropout_rate == 0.
double gradient_check(const StackedLstm& net, std::span<const double> window, double target,
                      double fd_step);

} // namespace oilcast
