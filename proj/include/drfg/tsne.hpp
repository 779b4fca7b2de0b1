#pragma once

#include "drfg/feature_store.hpp"
#include "drfg/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace drfg {

struct TsneConfig {
    double perplexity = 30.0;
    std::size_t output_dim = 2;
    std::size_t iterations = 1000;
    double learning_rate = 200.0;
    double momentum_early = 0.5;
    double momentum_late = 0.8;
    std::size_t momentum_switch_iter = 250;
    double early_exaggeration = 12.0;
    std::size_t exaggeration_iters = 250;
    std::uint64_t seed = 0;
};

struct PMatrixResult {
    Matrix p;                       // n x n symmetric joint probabilities, zero diagonal
    std::vector<double> bandwidths; // per-row precision beta = 1/(2 sigma^2)
    std::size_t fallback_rows = 0;  // rows where bisection hit its iteration bound
};

// Per-row bandwidths by bisection so that 2^H(row) matches the perplexity
// within 0.1%; rows where that is unattainable (e.g. duplicate-only input)
// fall back to the best bandwidth seen and are counted in fallback_rows.
// P is symmetrized to (P_cond + P_cond^T)/(2n).
PMatrixResult compute_p_matrix(const Matrix& X, double perplexity);

struct Embedding {
    Matrix points; // n x 2, row order matches the input
    std::vector<std::string> sample_ids;
    std::vector<int> labels;
};

struct TsneResult {
    Embedding embedding;
    std::vector<double> kl_history; // KL(P||Q) per iteration against the un-exaggerated P
    std::size_t fallback_rows = 0;
};

// Exact O(n^2) gradient descent on KL(P||Q) with the Student-t kernel,
// early exaggeration, the two-phase momentum schedule, and per-coordinate
// gains. Points are recentered every iteration. Deterministic under seed.
TsneResult tsne_embed(const Matrix& X, const TsneConfig& cfg);
TsneResult tsne_embed(const FeatureSet& set, const TsneConfig& cfg);

// CSV with header sample_id,label,x,y; labels resolve through class_names
// when available.
void write_embedding_csv(const Embedding& embedding, std::span<const std::string> class_names,
                         const std::filesystem::path& path);

} // namespace drfg
