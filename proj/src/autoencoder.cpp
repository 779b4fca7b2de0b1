#include "drfg/autoencoder.hpp"

#include <array>

namespace drfg {

DenseNet build_autoencoder(const AutoencoderConfig& cfg, std::uint64_t seed) {
    if (!(cfg.latent_dim < cfg.hidden_dim && cfg.hidden_dim < cfg.input_dim))
        throw ConfigError("autoencoder dims must satisfy latent < hidden < input, got latent=" +
                          std::to_string(cfg.latent_dim) + " hidden=" + std::to_string(cfg.hidden_dim) +
                          " input=" + std::to_string(cfg.input_dim));

    const std::array<LayerSpec, 4> layers{{
        {cfg.hidden_dim, Activation::relu},
        {cfg.latent_dim, Activation::relu},
        {cfg.hidden_dim, Activation::relu},
        {cfg.input_dim, Activation::linear},
    }};
    return make_dense_net(cfg.input_dim, layers, seed);
}

std::vector<double> train_autoencoder(DenseNet& net, const FeatureSet& train_features, const TrainConfig& train_cfg) {
    if (train_features.size() == 0) throw InvalidInput("train_autoencoder: empty training set");
    if (train_features.dim != net.input_dim())
        throw ShapeError("train_autoencoder: feature dim " + std::to_string(train_features.dim) +
                         " does not match autoencoder input dim " + std::to_string(net.input_dim()));

    Matrix inputs(train_features.size(), train_features.dim);
    for (std::size_t i = 0; i < train_features.size(); ++i) {
        const auto row = train_features.sample(i);
        for (std::size_t d = 0; d < train_features.dim; ++d) inputs(i, d) = row[d];
    }

    TrainConfig cfg = train_cfg;
    cfg.loss = Loss::mse;
    return fit(net, inputs, inputs, cfg);
}

Vec encode(const DenseNet& net, std::span<const double> v) {
    if (net.layers.size() < kEncoderDepth) throw ConfigError("encode: net is shallower than the encoder");
    if (v.size() != net.input_dim())
        throw ShapeError("encode: input length " + std::to_string(v.size()) + " does not match input dim " +
                         std::to_string(net.input_dim()));

    Vec h(v.begin(), v.end());
    Vec z;
    for (std::size_t k = 0; k < kEncoderDepth; ++k) {
        const auto& layer = net.layers[k];
        affine(layer, h, z);
        switch (layer.activation) {
            case Activation::relu: h = relu(z); break;
            case Activation::linear: h = std::move(z); break;
            case Activation::softmax: throw ConfigError("encode: softmax inside an encoder");
        }
    }
    return h;
}

std::vector<float> encode(const DenseNet& net, std::span<const float> v) {
    Vec x(v.begin(), v.end());
    const Vec latent = encode(net, x);
    return {latent.begin(), latent.end()};
}

FeatureSet encode_set(const DenseNet& net, const FeatureSet& features) {
    FeatureSet out;
    out.dim = net.layers[kEncoderDepth - 1].out_dim();
    out.class_names = features.class_names;
    out.sample_ids = features.sample_ids;
    out.labels = features.labels;
    out.values.reserve(features.size() * out.dim);
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto latent = encode(net, features.sample(i));
        out.values.insert(out.values.end(), latent.begin(), latent.end());
    }
    return out;
}

} // namespace drfg
