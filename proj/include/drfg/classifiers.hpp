#pragma once

#include "drfg/feature_store.hpp"
#include "drfg/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace drfg {

// ---------------------------------------------------------------------------
// Perceptron heads (SLP / shallow MLP) on top of nn-core.
// ---------------------------------------------------------------------------

enum class PerceptronVariant { slp, mlp };

struct PerceptronConfig {
    PerceptronVariant variant = PerceptronVariant::slp;
    std::size_t hidden_dim = 128; // mlp only
    std::size_t n_classes = 2;
};

// slp: latent_dim -> n_classes softmax. mlp: latent_dim -> hidden relu ->
// n_classes softmax. Trained with categorical cross-entropy + Adam.
DenseNet train_perceptron(const PerceptronConfig& cfg, const FeatureSet& train_latents, const TrainConfig& train_cfg,
                          std::uint64_t seed);

struct Prediction {
    int class_index = 0;
    Vec probabilities;
};

// Argmax of the softmax output; ties break toward the lowest class index.
Prediction predict_perceptron(const DenseNet& net, std::span<const float> latent);

// ---------------------------------------------------------------------------
// SVM trained by simplified sequential minimal optimization.
// ---------------------------------------------------------------------------

enum class SvmKernel { linear, rbf };

struct SvmConfig {
    SvmKernel kernel = SvmKernel::rbf;
    double C = 1.0;
    double gamma = -1.0; // <= 0 means "scale": 1/(d * var(X))
    double tol = 1e-3;
    std::size_t max_passes = 10;
    std::uint64_t seed = 0;
};

struct SvmHead {
    int positive_class = 0;
    std::vector<float> support_vectors; // n_sv x dim, row-major
    std::vector<double> coefficients;   // alpha_i * y_i per support vector
    double bias = 0.0;
};

struct SvmModel {
    SvmKernel kernel = SvmKernel::rbf;
    double gamma = 1.0; // resolved value
    double C = 1.0;
    std::size_t dim = 0;
    std::vector<int> classes; // class indices present in training order
    std::vector<SvmHead> heads;

    double head_score(const SvmHead& head, std::span<const float> x) const;
};

// One-vs-rest heads, each solved on the shared kernel matrix. The binary
// case trains a single head (positive = higher class index).
SvmModel svm_train(const SvmConfig& cfg, const FeatureSet& train);
SvmModel svm_train(const SvmConfig& cfg, const Matrix& X, std::span<const int> y);

// argmax of head scores; binary models use the sign of their single head.
int svm_predict(const SvmModel& model, std::span<const float> x);

// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij of one
// head (diagnostics / tests). The zero-alpha solution scores 0.
double svm_dual_objective(const SvmModel& model, const SvmHead& head);

// Checkpoint: u32 header length + JSON (kernel, C, gamma, classes, per-head
// bias/class/n_sv) + per-head f32 blocks (support vectors, coefficients).
void save_svm(const SvmModel& model, const std::filesystem::path& path);
SvmModel load_svm(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

// Per-sample one-hot targets for perceptron training.
Matrix one_hot(std::span<const int> labels, std::size_t n_classes);

} // namespace drfg
