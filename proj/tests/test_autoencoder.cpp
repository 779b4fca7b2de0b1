#include "drfg/autoencoder.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace drfg;

namespace {

// n samples on a k-dim linear subspace of a d-dim space, plus isotropic
// noise; exactly the setting where the PCA oracle is meaningful.
FeatureSet subspace_features(std::size_t n, std::size_t d, std::size_t k, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<double> basis(d * k);
    for (double& b : basis) b = gauss(rng) / std::sqrt(static_cast<double>(k));

    FeatureSet set;
    set.dim = d;
    set.class_names = {"only"};
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> z(k);
        for (double& v : z) v = gauss(rng);
        std::vector<float> x(d);
        for (std::size_t a = 0; a < d; ++a) {
            double acc = 0.0;
            for (std::size_t b = 0; b < k; ++b) acc += basis[a * k + b] * z[b];
            x[a] = static_cast<float>(acc + noise * gauss(rng));
        }
        set.append("s" + std::to_string(i), 0, x);
    }
    return set;
}

double reconstruction_mse(const DenseNet& net, const FeatureSet& set) {
    double total = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto row = set.sample(i);
        Vec x(row.begin(), row.end());
        const Vec out = forward(net, x).output();
        total += mse_loss(x, out);
    }
    return total / static_cast<double>(set.size());
}

double mean_variance(const FeatureSet& set) {
    double total = 0.0;
    for (std::size_t d = 0; d < set.dim; ++d) {
        double mean = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < set.size(); ++i) {
            const double v = set.sample(i)[d];
            mean += v;
            sq += v * v;
        }
        mean /= static_cast<double>(set.size());
        total += sq / static_cast<double>(set.size()) - mean * mean;
    }
    return total / static_cast<double>(set.dim);
}

} // namespace

TEST_CASE("autoencoder layer chain under the defaults") {
    const DenseNet net = build_autoencoder(AutoencoderConfig{}, 0);
    REQUIRE(net.layers.size() == 4);
    CHECK(net.input_dim() == 9984);
    CHECK(net.layers[0].out_dim() == 1024);
    CHECK(net.layers[1].out_dim() == 256);
    CHECK(net.layers[2].out_dim() == 1024);
    CHECK(net.layers[3].out_dim() == 9984);
    CHECK(net.layers[0].activation == Activation::relu);
    CHECK(net.layers[1].activation == Activation::relu);
    CHECK(net.layers[2].activation == Activation::relu);
    CHECK(net.layers[3].activation == Activation::linear);
}

TEST_CASE("autoencoder parameter count for cfg(4,3,2)") {
    const DenseNet net = build_autoencoder({4, 3, 2}, 0);
    CHECK(net.parameter_count() == 48);
    // encoder depth == decoder depth == 2
    CHECK(net.layers.size() == 2 * kEncoderDepth);
}

TEST_CASE("autoencoder rejects non-contracting dims") {
    CHECK_THROWS_AS(build_autoencoder({4, 4, 2}, 0), ConfigError);
    CHECK_THROWS_AS(build_autoencoder({4, 3, 3}, 0), ConfigError);
    CHECK_THROWS_AS(build_autoencoder({4, 5, 6}, 0), ConfigError);
}

TEST_CASE("zero-weight encoder maps everything to zero") {
    DenseNet net = build_autoencoder({6, 4, 2}, 1);
    for (std::size_t k = 0; k < kEncoderDepth; ++k) {
        for (double& w : net.layers[k].weights.data) w = 0.0;
        for (double& b : net.layers[k].biases) b = 0.0;
    }
    const Vec latent = encode(net, Vec{1.0, -2.0, 3.0, 0.5, 4.0, -1.0});
    CHECK(latent == Vec{0.0, 0.0});
}

TEST_CASE("encode output length equals latent_dim") {
    const DenseNet net = build_autoencoder({16, 8, 5}, 2);
    const Vec latent = encode(net, testutil::random_vector(16, 3));
    CHECK(latent.size() == 5);
    CHECK_THROWS_AS(encode(net, testutil::random_vector(4, 3)), ShapeError);
}

TEST_CASE("decoder applied to the encoding reproduces the full forward pass bitwise") {
    const DenseNet net = build_autoencoder({12, 7, 3}, 9);
    const Vec x = testutil::random_vector(12, 10);

    const Vec full = forward(net, x).output();

    // Split the net into its encoder and decoder halves and chain them.
    DenseNet decoder;
    decoder.layers.assign(net.layers.begin() + kEncoderDepth, net.layers.end());
    const Vec latent = encode(net, x);
    const Vec decoded = forward(decoder, latent).output();
    CHECK(decoded == full);
}

TEST_CASE("training loss history length equals epochs") {
    FeatureSet data = subspace_features(32, 10, 3, 0.05, 4);
    DenseNet net = build_autoencoder({10, 6, 3}, 5);
    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.epochs = 7;
    const auto history = train_autoencoder(net, data, cfg);
    CHECK(history.size() == 7);
}

TEST_CASE("latent vectors are reproducible bit for bit under fixed seeds") {
    const FeatureSet data = subspace_features(24, 12, 4, 0.05, 6);
    auto run = [&]() {
        DenseNet net = build_autoencoder({12, 8, 4}, 77);
        TrainConfig cfg;
        cfg.batch_size = 8;
        cfg.epochs = 5;
        cfg.shuffle_seed = 13;
        train_autoencoder(net, data, cfg);
        return encode_set(net, data);
    };
    const FeatureSet a = run();
    const FeatureSet b = run();
    CHECK(a.values == b.values);
    CHECK(a.dim == 4);
}

TEST_CASE("relaxed same-width net memorizes tiny data") {
    // The autoencoder builder enforces contraction; the capacity sanity
    // check uses a same-width chain straight from nn-core.
    const std::size_t d = 6;
    std::vector<LayerSpec> specs{{d, Activation::relu}, {d, Activation::relu}, {d, Activation::relu},
                                 {d, Activation::linear}};
    DenseNet net = make_dense_net(d, specs, 1);

    Matrix X(4, d);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& v : X.data) v = dist(rng);

    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.epochs = 5000;
    cfg.loss = Loss::mse;
    cfg.learning_rate = 0.005;
    const auto history = fit(net, X, X, cfg);
    CHECK(history.back() < 0.01);
    CHECK(history.back() < history.front());
}

TEST_CASE("autoencoder reaches the subspace floor tracked by the PCA oracle") {
    const std::size_t n = 192, d = 40, k = 6;
    FeatureSet raw = subspace_features(n, d, k, 0.15, 11);

    // Standardize like the pipeline does before training.
    std::vector<double> mean(d, 0.0), dev(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += raw.sample(i)[j];
    for (double& m : mean) m /= n;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double delta = raw.sample(i)[j] - mean[j];
            dev[j] += delta * delta;
        }
    for (double& v : dev) v = std::sqrt(v / n);
    FeatureSet data = raw;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            data.sample(i)[j] = static_cast<float>((raw.sample(i)[j] - mean[j]) / (dev[j] + 1e-6));

    DenseNet net = build_autoencoder({d, 24, k}, 21);
    TrainConfig cfg;
    cfg.batch_size = 32;
    cfg.epochs = 200;
    cfg.shuffle_seed = 22;
    train_autoencoder(net, data, cfg);

    const double mse = reconstruction_mse(net, data);
    const double variance = mean_variance(data);

    std::vector<double> X(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) X[i * d + j] = data.sample(i)[j];
    const double pca_floor = testutil::pca_reconstruction_mse(X, n, d, k);

    CHECK(pca_floor < 0.05 * variance); // the oracle confirms the threshold is attainable
    CHECK(mse <= 0.05 * variance);
    CHECK(mse <= 2.0 * pca_floor);
}

TEST_CASE("train_autoencoder validates dims and emptiness") {
    DenseNet net = build_autoencoder({10, 6, 3}, 0);
    FeatureSet wrong = subspace_features(8, 9, 3, 0.01, 2);
    TrainConfig cfg;
    CHECK_THROWS_AS(train_autoencoder(net, wrong, cfg), ShapeError);

    FeatureSet empty;
    empty.dim = 10;
    empty.class_names = {"only"};
    CHECK_THROWS_AS(train_autoencoder(net, empty, cfg), InvalidInput);
}
