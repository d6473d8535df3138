#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace maps {

// Row-major dense matrix of doubles. All network math is 64-bit.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> d;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), d(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return d[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return d[r * cols + c]; }

    bool operator==(const Matrix&) const = default;
};

struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> w;  // in x out, row-major
    std::vector<double> b;  // out

    bool operator==(const DenseLayer&) const = default;
};

struct BatchNorm {
    std::vector<double> gamma, beta;
    std::vector<double> running_mean, running_var;

    bool operator==(const BatchNorm&) const = default;
};

// MLP parameters: affine layers chained by dimension, with batch norm on
// every hidden layer (none on the output head).
struct MlpParams {
    std::vector<DenseLayer> layers;
    std::vector<BatchNorm> bn;  // one per hidden layer, layers.size() - 1

    std::size_t input_dim() const { return layers.front().in; }
    std::size_t output_dim() const { return layers.back().out; }

    void validate() const;

    bool operator==(const MlpParams&) const = default;
};

// He-uniform weights, zero biases, identity batch norm. Deterministic for a
// given rng state.
MlpParams init_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden_sizes,
                   std::size_t output_dim, std::mt19937_64& rng);

enum class Mode { Train, Eval };

struct BnHyper {
    double momentum = 0.9;
    double eps = 1e-5;
};

// Per-hidden-layer records needed to run the exact backward pass.
struct LayerTrace {
    Matrix input;     // into the affine
    Matrix xhat;      // normalized pre-gamma/beta activations
    Matrix post_act;  // after ReLU
    std::vector<double> mean, var;  // batch statistics (population)
};

struct ForwardTrace {
    Mode mode = Mode::Eval;
    std::size_t batch = 0;
    std::vector<LayerTrace> hidden;
    Matrix head_input;  // into the final affine
};

// Hidden layers: affine -> batch norm -> ReLU; head: affine only. Train mode
// uses batch statistics and updates running stats in place; eval mode reads
// running stats and leaves params untouched.
Matrix mlp_forward(MlpParams& params, const Matrix& batch, Mode mode,
                   ForwardTrace* trace = nullptr, const BnHyper& bn = {});

// Eval-only forward on const params.
Matrix mlp_forward_eval(const MlpParams& params, const Matrix& batch, const BnHyper& bn = {});

// Gradients for the trainable tensors (running stats excluded).
struct MlpGrads {
    struct LayerGrad {
        std::vector<double> w, b;
    };
    struct BnGrad {
        std::vector<double> gamma, beta;
    };
    std::vector<LayerGrad> layers;
    std::vector<BnGrad> bn;

    static MlpGrads zeros_like(const MlpParams& params);
    void accumulate(const MlpGrads& other);
    void scale(double k);
};

// Exact gradients of the traced train-mode computation for an arbitrary
// upstream gradient on the outputs, including the batch-statistics terms.
MlpGrads mlp_backward(const MlpParams& params, const ForwardTrace& trace,
                      const Matrix& upstream_grad, const BnHyper& bn = {});

struct AdamState {
    MlpGrads m, v;
    std::uint64_t step_count = 0;

    static AdamState zeros_like(const MlpParams& params);
};

struct AdamHyper {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Standard Adam with bias correction. Throws naming the layer on a
// non-finite gradient.
void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state, const AdamHyper& h);

inline MlpParams snapshot(const MlpParams& params) { return params; }

}  // namespace maps
