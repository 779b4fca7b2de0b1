#include "drfg/nn.hpp"

#include "drfg/serialize.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace drfg {

namespace {

std::string dim_mismatch(const char* what, std::size_t got, std::size_t want) {
    std::ostringstream os;
    os << what << ": got " << got << ", expected " << want;
    return os.str();
}

} // namespace

const char* to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::softmax: return "softmax";
        case Activation::linear: return "linear";
    }
    return "unknown";
}

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "softmax") return Activation::softmax;
    if (s == "linear") return Activation::linear;
    throw ConfigError("unknown activation: " + s);
}

std::size_t DenseNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.rows * l.weights.cols + l.biases.size();
    return n;
}

DenseNet make_dense_net(std::size_t input_dim, std::span<const LayerSpec> specs, std::uint64_t seed) {
    if (input_dim == 0) throw ConfigError("input_dim must be positive");
    if (specs.empty()) throw ConfigError("a dense net needs at least one layer");
    for (std::size_t k = 0; k < specs.size(); ++k) {
        if (specs[k].out == 0) throw ConfigError("layer " + std::to_string(k) + " has zero width");
        if (specs[k].activation == Activation::softmax && k + 1 != specs.size())
            throw ConfigError("softmax is only valid as the final activation");
    }

    DenseNet net;
    net.seed = seed;
    std::mt19937_64 rng(seed);

    std::size_t fan_in = input_dim;
    for (const auto& spec : specs) {
        DenseLayer layer;
        layer.weights = Matrix(spec.out, fan_in);
        layer.biases.assign(spec.out, 0.0);
        layer.activation = spec.activation;

        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + spec.out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& w : layer.weights.data) w = dist(rng);

        fan_in = spec.out;
        net.layers.push_back(std::move(layer));
    }
    return net;
}

Vec relu(std::span<const double> x) {
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
    return out;
}

Vec softmax(std::span<const double> x) {
    Vec out(x.size());
    if (x.empty()) return out;
    const double m = *std::max_element(x.begin(), x.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(x[i] - m);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

double mse_loss(std::span<const double> x, std::span<const double> x_hat) {
    if (x.size() != x_hat.size())
        throw ShapeError(dim_mismatch("mse_loss operand length", x_hat.size(), x.size()));
    if (x.empty()) throw InvalidInput("mse_loss on empty vectors");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - x_hat[i];
        acc += d * d;
    }
    return acc / static_cast<double>(x.size());
}

double cce_loss(std::span<const double> predicted, std::span<const double> one_hot_target) {
    if (predicted.size() != one_hot_target.size())
        throw ShapeError(dim_mismatch("cce_loss operand length", predicted.size(), one_hot_target.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double p = std::clamp(predicted[i], 1e-12, 1.0);
        acc -= one_hot_target[i] * std::log(p);
    }
    return acc;
}

void affine(const DenseLayer& layer, std::span<const double> in, Vec& out) {
    if (in.size() != layer.in_dim())
        throw ShapeError(dim_mismatch("affine input length", in.size(), layer.in_dim()));
    const std::size_t n = layer.in_dim();
    const double* h = in.data();
    out.resize(layer.out_dim());
    for (std::size_t r = 0; r < layer.out_dim(); ++r) {
        const double* w = layer.weights.data.data() + r * n;
        double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
        std::size_t c = 0;
        for (; c + 4 <= n; c += 4) {
            a0 += w[c] * h[c];
            a1 += w[c + 1] * h[c + 1];
            a2 += w[c + 2] * h[c + 2];
            a3 += w[c + 3] * h[c + 3];
        }
        double acc = layer.biases[r] + (a0 + a1) + (a2 + a3);
        for (; c < n; ++c) acc += w[c] * h[c];
        out[r] = acc;
    }
}

ForwardCache forward(const DenseNet& net, std::span<const double> x) {
    if (net.layers.empty()) throw ConfigError("forward on empty net");
    if (x.size() != net.input_dim())
        throw ShapeError(dim_mismatch("forward input length", x.size(), net.input_dim()));

    ForwardCache cache;
    cache.input.assign(x.begin(), x.end());
    cache.pre.reserve(net.layers.size());
    cache.post.reserve(net.layers.size());

    const Vec* h = &cache.input;
    for (const auto& layer : net.layers) {
        Vec z;
        affine(layer, *h, z);
        switch (layer.activation) {
            case Activation::relu: cache.post.push_back(relu(z)); break;
            case Activation::softmax: cache.post.push_back(softmax(z)); break;
            case Activation::linear: cache.post.push_back(z); break;
        }
        cache.pre.push_back(std::move(z));
        h = &cache.post.back();
    }
    return cache;
}

void Gradients::add_scaled(const Gradients& other, double scale) {
    for (std::size_t k = 0; k < weights.size(); ++k) {
        for (std::size_t i = 0; i < weights[k].data.size(); ++i)
            weights[k].data[i] += scale * other.weights[k].data[i];
        for (std::size_t i = 0; i < biases[k].size(); ++i) biases[k][i] += scale * other.biases[k][i];
    }
}

void Gradients::scale(double s) {
    for (auto& w : weights)
        for (double& v : w.data) v *= s;
    for (auto& b : biases)
        for (double& v : b) v *= s;
}

namespace {

void check_cache(const DenseNet& net, const ForwardCache& cache) {
    if (cache.pre.size() != net.layers.size() || cache.post.size() != net.layers.size())
        throw ContractViolation("forward cache does not match this net (layer count differs)");
    if (cache.input.size() != net.input_dim())
        throw ContractViolation("forward cache does not match this net (input dim differs)");
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        if (cache.pre[k].size() != net.layers[k].out_dim() || cache.post[k].size() != net.layers[k].out_dim())
            throw ContractViolation("forward cache does not match this net (layer " + std::to_string(k) +
                                    " width differs)");
    }
}

} // namespace

Gradients make_gradients(const DenseNet& net) {
    Gradients grads;
    grads.weights.reserve(net.layers.size());
    grads.biases.reserve(net.layers.size());
    for (const auto& layer : net.layers) {
        grads.weights.emplace_back(layer.out_dim(), layer.in_dim());
        grads.biases.emplace_back(layer.out_dim(), 0.0);
    }
    return grads;
}

void backward_accumulate(const DenseNet& net, const ForwardCache& cache, std::span<const double> output_grad,
                         Gradients& acc) {
    check_cache(net, cache);
    if (output_grad.size() != net.output_dim())
        throw ShapeError(dim_mismatch("backward output gradient length", output_grad.size(), net.output_dim()));
    if (acc.weights.size() != net.layers.size())
        throw ContractViolation("backward_accumulate: gradient buffer shaped for a different net");

    // delta = dL/dz of the current layer.
    Vec delta(output_grad.begin(), output_grad.end());
    if (net.layers.back().activation == Activation::relu) {
        const Vec& z = cache.pre.back();
        for (std::size_t i = 0; i < delta.size(); ++i)
            if (z[i] <= 0.0) delta[i] = 0.0;
    }
    // linear: delta = output_grad; softmax: caller already fused (p - y).

    for (std::size_t k = net.layers.size(); k-- > 0;) {
        const auto& layer = net.layers[k];
        const Vec& below = (k == 0) ? cache.input : cache.post[k - 1];

        Matrix& gw = acc.weights[k];
        for (std::size_t r = 0; r < layer.out_dim(); ++r) {
            double* grow = gw.data.data() + r * layer.in_dim();
            const double d = delta[r];
            for (std::size_t c = 0; c < layer.in_dim(); ++c) grow[c] += d * below[c];
            acc.biases[k][r] += d;
        }

        if (k == 0) break;
        Vec next(layer.in_dim(), 0.0);
        for (std::size_t r = 0; r < layer.out_dim(); ++r) {
            const double* w = layer.weights.data.data() + r * layer.in_dim();
            const double d = delta[r];
            for (std::size_t c = 0; c < layer.in_dim(); ++c) next[c] += w[c] * d;
        }
        if (net.layers[k - 1].activation == Activation::relu) {
            const Vec& z = cache.pre[k - 1];
            for (std::size_t i = 0; i < next.size(); ++i)
                if (z[i] <= 0.0) next[i] = 0.0;
        }
        delta = std::move(next);
    }
}

Gradients backward(const DenseNet& net, const ForwardCache& cache, std::span<const double> output_grad) {
    Gradients grads = make_gradients(net);
    backward_accumulate(net, cache, output_grad, grads);
    return grads;
}

Vec loss_gradient(Loss loss, std::span<const double> output, std::span<const double> target) {
    if (output.size() != target.size())
        throw ShapeError(dim_mismatch("loss_gradient target length", target.size(), output.size()));
    Vec g(output.size());
    switch (loss) {
        case Loss::mse: {
            const double inv_n = 2.0 / static_cast<double>(output.size());
            for (std::size_t i = 0; i < output.size(); ++i) g[i] = inv_n * (output[i] - target[i]);
            break;
        }
        case Loss::categorical_cross_entropy: {
            for (std::size_t i = 0; i < output.size(); ++i) g[i] = output[i] - target[i];
            break;
        }
    }
    return g;
}

double loss_value(Loss loss, std::span<const double> output, std::span<const double> target) {
    switch (loss) {
        case Loss::mse: return mse_loss(target, output);
        case Loss::categorical_cross_entropy: return cce_loss(output, target);
    }
    throw ConfigError("unknown loss");
}

AdamState make_adam_state(const DenseNet& net, double learning_rate) {
    AdamState st;
    st.learning_rate = learning_rate;
    for (const auto& layer : net.layers) {
        st.m_weights.emplace_back(layer.out_dim(), layer.in_dim());
        st.v_weights.emplace_back(layer.out_dim(), layer.in_dim());
        st.m_biases.emplace_back(layer.out_dim(), 0.0);
        st.v_biases.emplace_back(layer.out_dim(), 0.0);
    }
    return st;
}

namespace {

void adam_apply(double* theta, double* m, double* v, const double* g, std::size_t n, const AdamState& st,
                double bias1, double bias2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * g[i];
        v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * g[i] * g[i];
        const double m_hat = m[i] / bias1;
        const double v_hat = v[i] / bias2;
        theta[i] -= st.learning_rate * m_hat / (std::sqrt(v_hat) + st.eps);
    }
}

} // namespace

void adam_update(DenseNet& net, const Gradients& grads, AdamState& state) {
    if (grads.weights.size() != net.layers.size() || state.m_weights.size() != net.layers.size())
        throw ContractViolation("adam_update: gradients or state shaped for a different net");

    state.step_count += 1;
    const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));

    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        auto& layer = net.layers[k];
        adam_apply(layer.weights.data.data(), state.m_weights[k].data.data(), state.v_weights[k].data.data(),
                   grads.weights[k].data.data(), layer.weights.data.size(), state, bias1, bias2);
        adam_apply(layer.biases.data(), state.m_biases[k].data(), state.v_biases[k].data(),
                   grads.biases[k].data(), layer.biases.size(), state, bias1, bias2);
    }
}

std::vector<double> fit(DenseNet& net, const Matrix& inputs, const Matrix& targets, const TrainConfig& cfg) {
    if (inputs.rows == 0) throw InvalidInput("fit: empty dataset");
    if (inputs.rows != targets.rows)
        throw ShapeError(dim_mismatch("fit target rows", targets.rows, inputs.rows));
    if (inputs.cols != net.input_dim())
        throw ShapeError(dim_mismatch("fit input dim", inputs.cols, net.input_dim()));
    if (targets.cols != net.output_dim())
        throw ShapeError(dim_mismatch("fit target dim", targets.cols, net.output_dim()));
    if (cfg.batch_size == 0 || cfg.epochs == 0) throw ConfigError("batch_size and epochs must be >= 1");

    AdamState adam = make_adam_state(net, cfg.learning_rate);
    std::mt19937_64 rng(cfg.shuffle_seed);
    std::vector<std::size_t> order(inputs.rows);
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> history;
    history.reserve(cfg.epochs);
    Gradients batch = make_gradients(net);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            for (auto& w : batch.weights) std::fill(w.data.begin(), w.data.end(), 0.0);
            for (auto& b : batch.biases) std::fill(b.begin(), b.end(), 0.0);
            for (std::size_t i = start; i < end; ++i) {
                const std::size_t row = order[i];
                const ForwardCache cache = forward(net, inputs.row(row));
                epoch_loss += loss_value(cfg.loss, cache.output(), targets.row(row));
                backward_accumulate(net, cache, loss_gradient(cfg.loss, cache.output(), targets.row(row)), batch);
            }
            batch.scale(1.0 / static_cast<double>(end - start));
            adam_update(net, batch, adam);
        }
        history.push_back(epoch_loss / static_cast<double>(inputs.rows));
    }
    return history;
}

void save_checkpoint(const DenseNet& net, const std::filesystem::path& path) {
    nlohmann::json header;
    header["format"] = "drfg-net";
    header["version"] = 1;
    header["input_dim"] = net.input_dim();
    header["seed"] = net.seed;
    auto layers = nlohmann::json::array();
    for (const auto& l : net.layers)
        layers.push_back({{"out", l.out_dim()}, {"activation", to_string(l.activation)}});
    header["layers"] = layers;

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path.string());
    const std::string head = header.dump();
    write_u32(os, static_cast<std::uint32_t>(head.size()));
    os.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const auto& l : net.layers) {
        for (double w : l.weights.data) write_f32(os, static_cast<float>(w));
        for (double b : l.biases) write_f32(os, static_cast<float>(b));
    }
    if (!os) throw IoError("short write on checkpoint: " + path.string());
}

DenseNet load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path.string());
    const std::uint32_t head_len = read_u32(is);
    std::string head(head_len, '\0');
    is.read(head.data(), head_len);
    if (!is) throw IoError("truncated checkpoint header: " + path.string());

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(head);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad checkpoint header in " + path.string() + ": " + e.what());
    }
    if (header.value("format", "") != "drfg-net")
        throw IoError("not a drfg-net checkpoint: " + path.string());

    DenseNet net;
    net.seed = header.value("seed", std::uint64_t{0});
    std::size_t in_dim = header.at("input_dim").get<std::size_t>();
    for (const auto& lj : header.at("layers")) {
        DenseLayer layer;
        const std::size_t out = lj.at("out").get<std::size_t>();
        layer.activation = activation_from_string(lj.at("activation").get<std::string>());
        layer.weights = Matrix(out, in_dim);
        for (double& w : layer.weights.data) w = read_f32(is);
        layer.biases.resize(out);
        for (double& b : layer.biases) b = read_f32(is);
        in_dim = out;
        net.layers.push_back(std::move(layer));
    }
    return net;
}

} // namespace drfg
