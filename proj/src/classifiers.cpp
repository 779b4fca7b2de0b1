#include "drfg/classifiers.hpp"

#include "drfg/serialize.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

namespace drfg {

Matrix one_hot(std::span<const int> labels, std::size_t n_classes) {
    Matrix out(labels.size(), n_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int l = labels[i];
        if (l < 0 || static_cast<std::size_t>(l) >= n_classes)
            throw InvalidInput("label " + std::to_string(l) + " not encodable to " + std::to_string(n_classes) +
                               " classes");
        out(i, static_cast<std::size_t>(l)) = 1.0;
    }
    return out;
}

DenseNet train_perceptron(const PerceptronConfig& cfg, const FeatureSet& train_latents, const TrainConfig& train_cfg,
                          std::uint64_t seed) {
    if (train_latents.size() == 0) throw InvalidInput("train_perceptron: empty training set");
    if (cfg.n_classes < 2) throw ConfigError("train_perceptron: need at least 2 classes");

    std::vector<LayerSpec> layers;
    if (cfg.variant == PerceptronVariant::mlp) layers.push_back({cfg.hidden_dim, Activation::relu});
    layers.push_back({cfg.n_classes, Activation::softmax});
    DenseNet net = make_dense_net(train_latents.dim, layers, seed);

    Matrix inputs(train_latents.size(), train_latents.dim);
    for (std::size_t i = 0; i < train_latents.size(); ++i) {
        const auto row = train_latents.sample(i);
        for (std::size_t d = 0; d < train_latents.dim; ++d) inputs(i, d) = row[d];
    }
    const Matrix targets = one_hot(train_latents.labels, cfg.n_classes);

    TrainConfig tc = train_cfg;
    tc.loss = Loss::categorical_cross_entropy;
    fit(net, inputs, targets, tc);
    return net;
}

Prediction predict_perceptron(const DenseNet& net, std::span<const float> latent) {
    if (latent.size() != net.input_dim())
        throw ShapeError("predict_perceptron: latent length " + std::to_string(latent.size()) +
                         " does not match net input dim " + std::to_string(net.input_dim()));
    Vec x(latent.begin(), latent.end());
    const ForwardCache cache = forward(net, x);

    Prediction p;
    p.probabilities = cache.output();
    p.class_index = 0;
    for (std::size_t i = 1; i < p.probabilities.size(); ++i)
        if (p.probabilities[i] > p.probabilities[p.class_index]) p.class_index = static_cast<int>(i);
    return p;
}

// ---------------------------------------------------------------------------
// SMO
// ---------------------------------------------------------------------------

namespace {

double kernel_eval(SvmKernel kernel, double gamma, std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    switch (kernel) {
        case SvmKernel::linear:
            for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
            return acc;
        case SvmKernel::rbf:
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double d = a[i] - b[i];
                acc += d * d;
            }
            return std::exp(-gamma * acc);
    }
    return 0.0;
}

struct BinarySolution {
    std::vector<double> alphas;
    double bias = 0.0;
};

// Simplified SMO: sweep all indices, pick the second multiplier at random,
// stop after max_passes sweeps with no change. Deterministic under seed.
BinarySolution smo_solve(const Matrix& K, std::span<const double> y, const SvmConfig& cfg, std::uint64_t seed) {
    const std::size_t n = y.size();
    BinarySolution sol;
    sol.alphas.assign(n, 0.0);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 2);

    auto f = [&](std::size_t i) {
        double acc = sol.bias;
        for (std::size_t j = 0; j < n; ++j)
            if (sol.alphas[j] != 0.0) acc += sol.alphas[j] * y[j] * K(j, i);
        return acc;
    };

    constexpr std::size_t kMaxSweeps = 10000; // safety stop, never hit at desk scale
    std::size_t passes = 0;
    for (std::size_t sweep = 0; passes < cfg.max_passes && sweep < kMaxSweeps; ++sweep) {
        std::size_t num_changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e_i = f(i) - y[i];
            const double r_i = y[i] * e_i;
            if (!((r_i < -cfg.tol && sol.alphas[i] < cfg.C) || (r_i > cfg.tol && sol.alphas[i] > 0.0))) continue;

            std::size_t j = pick(rng);
            if (j >= i) ++j;
            const double e_j = f(j) - y[j];

            const double ai_old = sol.alphas[i];
            const double aj_old = sol.alphas[j];
            double lo, hi;
            if (y[i] != y[j]) {
                lo = std::max(0.0, aj_old - ai_old);
                hi = std::min(cfg.C, cfg.C + aj_old - ai_old);
            } else {
                lo = std::max(0.0, ai_old + aj_old - cfg.C);
                hi = std::min(cfg.C, ai_old + aj_old);
            }
            if (lo >= hi) continue;

            const double eta = 2.0 * K(i, j) - K(i, i) - K(j, j);
            if (eta >= 0.0) continue;

            double aj = aj_old - y[j] * (e_i - e_j) / eta;
            aj = std::clamp(aj, lo, hi);
            if (std::abs(aj - aj_old) < 1e-5) continue;

            const double ai = ai_old + y[i] * y[j] * (aj_old - aj);
            sol.alphas[i] = ai;
            sol.alphas[j] = aj;

            const double b1 = sol.bias - e_i - y[i] * (ai - ai_old) * K(i, i) - y[j] * (aj - aj_old) * K(i, j);
            const double b2 = sol.bias - e_j - y[i] * (ai - ai_old) * K(i, j) - y[j] * (aj - aj_old) * K(j, j);
            if (ai > 0.0 && ai < cfg.C)
                sol.bias = b1;
            else if (aj > 0.0 && aj < cfg.C)
                sol.bias = b2;
            else
                sol.bias = 0.5 * (b1 + b2);
            ++num_changed;
        }
        passes = (num_changed == 0) ? passes + 1 : 0;
    }
    return sol;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

double SvmModel::head_score(const SvmHead& head, std::span<const float> x) const {
    if (x.size() != dim)
        throw ShapeError("svm head score: input length " + std::to_string(x.size()) + " does not match model dim " +
                         std::to_string(dim));
    std::vector<double> xd(x.begin(), x.end());
    std::vector<double> sv(dim);
    double acc = head.bias;
    const std::size_t n_sv = head.coefficients.size();
    for (std::size_t s = 0; s < n_sv; ++s) {
        for (std::size_t d = 0; d < dim; ++d) sv[d] = head.support_vectors[s * dim + d];
        acc += head.coefficients[s] * kernel_eval(kernel, gamma, sv, xd);
    }
    return acc;
}

SvmModel svm_train(const SvmConfig& cfg, const Matrix& X, std::span<const int> y) {
    const std::size_t n = X.rows;
    const std::size_t d = X.cols;
    if (n == 0 || d == 0) throw InvalidInput("svm_train: empty training set");
    if (y.size() != n) throw ShapeError("svm_train: label count does not match sample count");
    if (cfg.C <= 0.0) throw ConfigError("svm_train: C must be positive");

    std::set<int> class_set(y.begin(), y.end());
    if (class_set.size() < 2) throw InvalidInput("svm_train: need at least 2 classes, got " +
                                                 std::to_string(class_set.size()));

    SvmModel model;
    model.kernel = cfg.kernel;
    model.C = cfg.C;
    model.dim = d;
    model.classes.assign(class_set.begin(), class_set.end());

    if (cfg.gamma > 0.0) {
        model.gamma = cfg.gamma;
    } else {
        // "scale": 1/(d * var(X)) with the variance over all matrix entries.
        double mean = 0.0;
        for (double v : X.data) mean += v;
        mean /= static_cast<double>(X.data.size());
        double var = 0.0;
        for (double v : X.data) var += (v - mean) * (v - mean);
        var /= static_cast<double>(X.data.size());
        model.gamma = var > 0.0 ? 1.0 / (static_cast<double>(d) * var) : 1.0;
    }

    Matrix K(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double k = kernel_eval(model.kernel, model.gamma, X.row(i), X.row(j));
            K(i, j) = k;
            K(j, i) = k;
        }
    }

    // Binary problems get a single head (positive = higher class index);
    // multiclass trains one one-vs-rest head per class.
    std::vector<int> positives;
    if (model.classes.size() == 2)
        positives = {model.classes[1]};
    else
        positives = model.classes;

    for (std::size_t h = 0; h < positives.size(); ++h) {
        std::vector<double> signs(n);
        for (std::size_t i = 0; i < n; ++i) signs[i] = (y[i] == positives[h]) ? 1.0 : -1.0;

        const BinarySolution sol = smo_solve(K, signs, cfg, mix_seed(cfg.seed, h));

        SvmHead head;
        head.positive_class = positives[h];
        head.bias = sol.bias;
        for (std::size_t i = 0; i < n; ++i) {
            if (sol.alphas[i] <= 1e-12) continue;
            head.coefficients.push_back(sol.alphas[i] * signs[i]);
            for (std::size_t dd = 0; dd < d; ++dd)
                head.support_vectors.push_back(static_cast<float>(X(i, dd)));
        }
        model.heads.push_back(std::move(head));
    }
    return model;
}

SvmModel svm_train(const SvmConfig& cfg, const FeatureSet& train) {
    Matrix X(train.size(), train.dim);
    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto row = train.sample(i);
        for (std::size_t dd = 0; dd < train.dim; ++dd) X(i, dd) = row[dd];
    }
    return svm_train(cfg, X, train.labels);
}

int svm_predict(const SvmModel& model, std::span<const float> x) {
    if (model.heads.empty()) throw InvalidInput("svm_predict: untrained model");

    if (model.classes.size() == 2) {
        const double score = model.head_score(model.heads.front(), x);
        return score > 0.0 ? model.heads.front().positive_class : model.classes.front();
    }

    int best_class = model.heads.front().positive_class;
    double best_score = model.head_score(model.heads.front(), x);
    for (std::size_t h = 1; h < model.heads.size(); ++h) {
        const double score = model.head_score(model.heads[h], x);
        if (score > best_score) {
            best_score = score;
            best_class = model.heads[h].positive_class;
        }
    }
    return best_class;
}

double svm_dual_objective(const SvmModel& model, const SvmHead& head) {
    // Rows with alpha = 0 contribute nothing, so the head's support vectors
    // carry the whole objective: alpha_i = |coef_i| and
    // alpha_i alpha_j y_i y_j = coef_i coef_j.
    const std::size_t n_sv = head.coefficients.size();
    const std::size_t d = model.dim;
    std::vector<double> a(d), b(d);

    double obj = 0.0;
    for (std::size_t i = 0; i < n_sv; ++i) {
        obj += std::abs(head.coefficients[i]);
        for (std::size_t dd = 0; dd < d; ++dd) a[dd] = head.support_vectors[i * d + dd];
        for (std::size_t j = 0; j < n_sv; ++j) {
            for (std::size_t dd = 0; dd < d; ++dd) b[dd] = head.support_vectors[j * d + dd];
            obj -= 0.5 * head.coefficients[i] * head.coefficients[j] * kernel_eval(model.kernel, model.gamma, a, b);
        }
    }
    return obj;
}

void save_svm(const SvmModel& model, const std::filesystem::path& path) {
    nlohmann::json header;
    header["format"] = "drfg-svm";
    header["version"] = 1;
    header["kernel"] = model.kernel == SvmKernel::rbf ? "rbf" : "linear";
    header["C"] = model.C;
    header["gamma"] = model.gamma;
    header["dim"] = model.dim;
    header["classes"] = model.classes;
    auto heads = nlohmann::json::array();
    for (const auto& h : model.heads)
        heads.push_back({{"positive_class", h.positive_class}, {"bias", h.bias}, {"n_sv", h.coefficients.size()}});
    header["heads"] = heads;

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open svm checkpoint for writing: " + path.string());
    const std::string head = header.dump();
    write_u32(os, static_cast<std::uint32_t>(head.size()));
    os.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const auto& h : model.heads) {
        write_f32_block(os, h.support_vectors);
        for (double c : h.coefficients) write_f32(os, static_cast<float>(c));
    }
    if (!os) throw IoError("short write on svm checkpoint: " + path.string());
}

SvmModel load_svm(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open svm checkpoint: " + path.string());
    const std::uint32_t head_len = read_u32(is);
    std::string head(head_len, '\0');
    is.read(head.data(), head_len);
    if (!is) throw IoError("truncated svm checkpoint header: " + path.string());

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(head);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad svm checkpoint header in " + path.string() + ": " + e.what());
    }
    if (header.value("format", "") != "drfg-svm") throw IoError("not a drfg-svm checkpoint: " + path.string());

    SvmModel model;
    model.kernel = header.at("kernel").get<std::string>() == "rbf" ? SvmKernel::rbf : SvmKernel::linear;
    model.C = header.at("C").get<double>();
    model.gamma = header.at("gamma").get<double>();
    model.dim = header.at("dim").get<std::size_t>();
    model.classes = header.at("classes").get<std::vector<int>>();
    for (const auto& hj : header.at("heads")) {
        SvmHead h;
        h.positive_class = hj.at("positive_class").get<int>();
        h.bias = hj.at("bias").get<double>();
        const auto n_sv = hj.at("n_sv").get<std::size_t>();
        h.support_vectors = read_f32_block(is, n_sv * model.dim);
        const auto coefs = read_f32_block(is, n_sv);
        h.coefficients.assign(coefs.begin(), coefs.end());
        model.heads.push_back(std::move(h));
    }
    return model;
}

} // namespace drfg
