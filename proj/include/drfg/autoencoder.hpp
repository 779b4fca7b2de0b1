#pragma once

#include "drfg/feature_store.hpp"
#include "drfg/nn.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace drfg {

struct AutoencoderConfig {
    std::size_t input_dim = 9984;
    std::size_t hidden_dim = 1024;
    std::size_t latent_dim = 256;
};

// Layer chain input -> hidden -> latent -> hidden -> input: three hidden
// layers with the bottleneck in the middle. Hidden activations relu, output
// linear (inputs are z-scored, so unbounded).
DenseNet build_autoencoder(const AutoencoderConfig& cfg, std::uint64_t seed);

// The encoder is the first two layers, up to and including the bottleneck
// activation.
inline constexpr std::size_t kEncoderDepth = 2;

// Trains on standardized training-split features with the vectors as their
// own targets (MSE + Adam). Returns the per-epoch loss history.
std::vector<double> train_autoencoder(DenseNet& net, const FeatureSet& train_features, const TrainConfig& train_cfg);

Vec encode(const DenseNet& net, std::span<const double> v);
std::vector<float> encode(const DenseNet& net, std::span<const float> v);

// Encodes every sample; the result is a latent set with dim = latent_dim.
FeatureSet encode_set(const DenseNet& net, const FeatureSet& features);

} // namespace drfg
