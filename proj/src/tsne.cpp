#include "drfg/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>

namespace drfg {

namespace {

Matrix squared_distances(const Matrix& X) {
    const std::size_t n = X.rows;
    Matrix d2(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < X.cols; ++k) {
                const double d = X(i, k) - X(j, k);
                acc += d * d;
            }
            d2(i, j) = acc;
            d2(j, i) = acc;
        }
    }
    return d2;
}

// Shannon entropy (nats) and conditional probabilities of one row for a
// given precision beta. Distances are shifted by their minimum before
// exponentiation so large beta stays finite.
double row_entropy(std::span<const double> d2_row, std::size_t self, double beta, std::span<double> p_out) {
    double min_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d2_row.size(); ++j)
        if (j != self) min_d = std::min(min_d, d2_row[j]);

    double sum = 0.0;
    double weighted = 0.0;
    for (std::size_t j = 0; j < d2_row.size(); ++j) {
        if (j == self) {
            p_out[j] = 0.0;
            continue;
        }
        const double e = std::exp(-beta * (d2_row[j] - min_d));
        p_out[j] = e;
        sum += e;
        weighted += d2_row[j] * e;
    }
    for (std::size_t j = 0; j < d2_row.size(); ++j) p_out[j] /= sum;
    // H = ln(sum') + beta * (<d2> - min_d)  with sum' the shifted partition sum
    return std::log(sum) + beta * (weighted / sum - min_d);
}

} // namespace

PMatrixResult compute_p_matrix(const Matrix& X, double perplexity) {
    const std::size_t n = X.rows;
    if (n < 4) throw InvalidInput("compute_p_matrix: need at least 4 points, got " + std::to_string(n));
    if (!(perplexity > 0.0) || perplexity >= static_cast<double>(n))
        throw InvalidInput("compute_p_matrix: perplexity must lie in (0, n)");

    const Matrix d2 = squared_distances(X);
    const double tol = 1e-3 * perplexity;

    PMatrixResult result;
    result.p = Matrix(n, n);
    result.bandwidths.assign(n, 1.0);

    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
        double beta = 1.0;
        double beta_lo = 0.0;
        double beta_hi = std::numeric_limits<double>::infinity();
        double best_beta = beta;
        double best_diff = std::numeric_limits<double>::infinity();
        bool converged = false;

        for (int iter = 0; iter < 64; ++iter) {
            const double h = row_entropy(d2.row(i), i, beta, row);
            const double diff = std::exp(h) - perplexity; // 2^H_bits == e^H_nats
            if (std::abs(diff) < best_diff) {
                best_diff = std::abs(diff);
                best_beta = beta;
            }
            if (std::abs(diff) <= tol) {
                converged = true;
                break;
            }
            if (diff > 0.0) { // entropy too high -> narrow the kernel
                beta_lo = beta;
                beta = std::isinf(beta_hi) ? beta * 2.0 : 0.5 * (beta_lo + beta_hi);
            } else {
                beta_hi = beta;
                beta = 0.5 * (beta_lo + beta_hi);
            }
        }
        if (!converged) result.fallback_rows += 1;
        const double final_beta = converged ? beta : best_beta;
        row_entropy(d2.row(i), i, final_beta, row);
        result.bandwidths[i] = final_beta;
        for (std::size_t j = 0; j < n; ++j) result.p(i, j) = row[j];
    }

    // Symmetrize to the joint distribution.
    Matrix joint(n, n);
    const double scale = 1.0 / (2.0 * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            joint(i, j) = i == j ? 0.0 : (result.p(i, j) + result.p(j, i)) * scale;
    result.p = std::move(joint);
    return result;
}

TsneResult tsne_embed(const Matrix& X, const TsneConfig& cfg) {
    const std::size_t n = X.rows;
    if (cfg.output_dim != 2) throw ConfigError("tsne_embed supports output_dim == 2 only");
    if (cfg.iterations < 250) throw ConfigError("tsne_embed: iterations must be >= 250");
    if (!(cfg.perplexity < (static_cast<double>(n) - 1.0) / 3.0))
        throw InvalidInput("tsne_embed: perplexity " + std::to_string(cfg.perplexity) +
                           " too large for n=" + std::to_string(n) + " (needs perplexity < (n-1)/3)");

    PMatrixResult pm = compute_p_matrix(X, cfg.perplexity);
    const Matrix& P = pm.p;

    TsneResult result;
    result.fallback_rows = pm.fallback_rows;
    result.embedding.points = Matrix(n, 2);
    Matrix& Y = result.embedding.points;

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> init(0.0, 1e-4);
    for (double& v : Y.data) v = init(rng);

    Matrix velocity(n, 2);
    Matrix gains(n, 2);
    std::fill(gains.data.begin(), gains.data.end(), 1.0);

    Matrix num(n, n); // Student-t kernel values (1 + ||yi - yj||^2)^-1
    Matrix grad(n, 2);
    result.kl_history.reserve(cfg.iterations);

    for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
        const double exaggeration = iter < cfg.exaggeration_iters ? cfg.early_exaggeration : 1.0;
        const double momentum = iter < cfg.momentum_switch_iter ? cfg.momentum_early : cfg.momentum_late;

        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            num(i, i) = 0.0;
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dx = Y(i, 0) - Y(j, 0);
                const double dy = Y(i, 1) - Y(j, 1);
                const double t = 1.0 / (1.0 + dx * dx + dy * dy);
                num(i, j) = t;
                num(j, i) = t;
                z += 2.0 * t;
            }
        }

        std::fill(grad.data.begin(), grad.data.end(), 0.0);
        double kl = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double q = std::max(num(i, j) / z, 1e-12);
                const double p = P(i, j);
                const double mult = 4.0 * (exaggeration * p - q) * num(i, j);
                grad(i, 0) += mult * (Y(i, 0) - Y(j, 0));
                grad(i, 1) += mult * (Y(i, 1) - Y(j, 1));
                if (p > 0.0 && j > i) kl += 2.0 * p * std::log(p / q);
            }
        }
        result.kl_history.push_back(kl);

        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < 2; ++d) {
                const bool same_sign = (grad(i, d) > 0.0) == (velocity(i, d) > 0.0);
                gains(i, d) = same_sign ? gains(i, d) * 0.8 : gains(i, d) + 0.2;
                gains(i, d) = std::max(gains(i, d), 0.01);
                velocity(i, d) = momentum * velocity(i, d) - cfg.learning_rate * gains(i, d) * grad(i, d);
                Y(i, d) += velocity(i, d);
            }
        }

        double mean_x = 0.0, mean_y = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean_x += Y(i, 0);
            mean_y += Y(i, 1);
        }
        mean_x /= static_cast<double>(n);
        mean_y /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            Y(i, 0) -= mean_x;
            Y(i, 1) -= mean_y;
        }
    }
    return result;
}

TsneResult tsne_embed(const FeatureSet& set, const TsneConfig& cfg) {
    Matrix X(set.size(), set.dim);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto row = set.sample(i);
        for (std::size_t d = 0; d < set.dim; ++d) X(i, d) = row[d];
    }
    TsneResult result = tsne_embed(X, cfg);
    result.embedding.sample_ids = set.sample_ids;
    result.embedding.labels = set.labels;
    return result;
}

void write_embedding_csv(const Embedding& embedding, std::span<const std::string> class_names,
                         const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open embedding csv for writing: " + path.string());
    os << "sample_id,label,x,y\n";
    char buf[64];
    for (std::size_t i = 0; i < embedding.points.rows; ++i) {
        const std::string id = i < embedding.sample_ids.size() ? embedding.sample_ids[i] : std::to_string(i);
        std::string label = "?";
        if (i < embedding.labels.size()) {
            const int l = embedding.labels[i];
            label = (l >= 0 && static_cast<std::size_t>(l) < class_names.size()) ? class_names[l]
                                                                                 : std::to_string(l);
        }
        std::snprintf(buf, sizeof buf, "%.6f,%.6f", embedding.points(i, 0), embedding.points(i, 1));
        os << id << ',' << label << ',' << buf << '\n';
    }
}

} // namespace drfg
