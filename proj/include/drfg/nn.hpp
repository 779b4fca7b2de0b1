#pragma once

#include "drfg/errors.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace drfg {

using Vec = std::vector<double>;

// Dense row-major matrix. Doubles throughout; checkpoints store f32.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
};

enum class Activation { relu, softmax, linear };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct DenseLayer {
    Matrix weights; // out x in
    Vec biases;     // out
    Activation activation = Activation::linear;

    std::size_t in_dim() const { return weights.cols; }
    std::size_t out_dim() const { return weights.rows; }
};

struct LayerSpec {
    std::size_t out = 0;
    Activation activation = Activation::linear;
};

struct DenseNet {
    std::vector<DenseLayer> layers;
    std::uint64_t seed = 0;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }
    std::size_t parameter_count() const;
};

// Builds a net with Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))) and
// zero biases. Softmax is accepted only as the final activation.
DenseNet make_dense_net(std::size_t input_dim, std::span<const LayerSpec> layers, std::uint64_t seed);

Vec relu(std::span<const double> x);
// Numerically stable (max-subtracted); output sums to 1.
Vec softmax(std::span<const double> x);

// out = W*in + b. The shared pre-activation kernel for forward() and the
// encoder path; `out` is resized to the layer width and must not alias `in`.
void affine(const DenseLayer& layer, std::span<const double> in, Vec& out);

double mse_loss(std::span<const double> x, std::span<const double> x_hat);
double cce_loss(std::span<const double> predicted, std::span<const double> one_hot_target);

enum class Loss { mse, categorical_cross_entropy };

struct ForwardCache {
    Vec input;
    std::vector<Vec> pre;  // z per layer
    std::vector<Vec> post; // activation(z) per layer
    const Vec& output() const { return post.back(); }
};

ForwardCache forward(const DenseNet& net, std::span<const double> x);

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vec> biases;

    void add_scaled(const Gradients& other, double scale);
    void scale(double s);
};

// output_grad is dL/da at the output for linear/relu final activations. When
// the final activation is softmax, pass the fused softmax+CCE gradient
// (p - y) instead; the softmax Jacobian is never materialized.
Gradients backward(const DenseNet& net, const ForwardCache& cache, std::span<const double> output_grad);

// Adds this sample's gradients into `acc` (shaped like make_gradients(net));
// the allocation-free form fit() uses for minibatch accumulation.
void backward_accumulate(const DenseNet& net, const ForwardCache& cache, std::span<const double> output_grad,
                         Gradients& acc);

Gradients make_gradients(const DenseNet& net);

// Produces the gradient convention backward() expects for the given loss:
// mse -> (2/n)(output - target); categorical cross-entropy -> (p - y).
Vec loss_gradient(Loss loss, std::span<const double> output, std::span<const double> target);
double loss_value(Loss loss, std::span<const double> output, std::span<const double> target);

struct AdamState {
    std::vector<Matrix> m_weights, v_weights;
    std::vector<Vec> m_biases, v_biases;
    std::uint64_t step_count = 0;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-7;
};

AdamState make_adam_state(const DenseNet& net, double learning_rate = 1e-3);
void adam_update(DenseNet& net, const Gradients& grads, AdamState& state);

struct TrainConfig {
    std::size_t batch_size = 32;
    std::size_t epochs = 40;
    Loss loss = Loss::mse;
    std::uint64_t shuffle_seed = 0;
    double learning_rate = 1e-3;
};

// Minibatch Adam over (inputs, targets) row pairs. Returns the per-epoch
// mean training loss. Single-threaded and fully determined by
// (net.seed via make_dense_net, data, config).
std::vector<double> fit(DenseNet& net, const Matrix& inputs, const Matrix& targets, const TrainConfig& cfg);

// Checkpoint: u32 header length, JSON header (dims, activations, seed),
// then per layer the row-major weight blob and bias blob as little-endian f32.
void save_checkpoint(const DenseNet& net, const std::filesystem::path& path);
DenseNet load_checkpoint(const std::filesystem::path& path);

} // namespace drfg
