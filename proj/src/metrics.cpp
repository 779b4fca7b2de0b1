#include "drfg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

namespace drfg {

std::uint64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, std::size_t k) {
    if (y_true.size() != y_pred.size())
        throw InvalidInput("confusion_matrix: label vectors differ in length (" + std::to_string(y_true.size()) +
                           " vs " + std::to_string(y_pred.size()) + ")");
    if (k == 0) throw InvalidInput("confusion_matrix: k must be >= 1");

    ConfusionMatrix cm(k);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= k || static_cast<std::size_t>(p) >= k)
            throw InvalidInput("confusion_matrix: label out of range at sample " + std::to_string(i));
        cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p)) += 1;
    }
    return cm;
}

MetricsRecord classification_metrics(const ConfusionMatrix& cm) {
    const std::uint64_t total = cm.total();
    if (total == 0) throw InvalidInput("classification_metrics: empty confusion matrix");

    const std::size_t k = cm.n_classes;
    std::uint64_t trace = 0;
    double prec_sum = 0.0, rec_sum = 0.0, f1_sum = 0.0;

    for (std::size_t c = 0; c < k; ++c) {
        trace += cm.at(c, c);
        std::uint64_t col = 0, row = 0;
        for (std::size_t i = 0; i < k; ++i) {
            col += cm.at(i, c);
            row += cm.at(c, i);
        }
        // Zero denominators (class never predicted / never present) count
        // as 0 so degenerate trials aggregate instead of aborting.
        if (col == 0 || row == 0)
            std::cerr << "warning: class " << c << " has an empty "
                      << (col == 0 ? "prediction column" : "truth row") << "; precision/recall set to 0\n";
        const double diag = static_cast<double>(cm.at(c, c));
        const double prec = col == 0 ? 0.0 : diag / static_cast<double>(col);
        const double rec = row == 0 ? 0.0 : diag / static_cast<double>(row);
        const double f1 = (prec + rec) == 0.0 ? 0.0 : 2.0 * prec * rec / (prec + rec);
        prec_sum += prec;
        rec_sum += rec;
        f1_sum += f1;
    }

    MetricsRecord r;
    r.accuracy = static_cast<double>(trace) / static_cast<double>(total);
    r.precision = prec_sum / static_cast<double>(k);
    r.recall = rec_sum / static_cast<double>(k);
    r.f1 = f1_sum / static_cast<double>(k);
    return r;
}

FiveNumber five_number_summary(std::span<const double> values) {
    if (values.empty()) throw InvalidInput("five_number_summary: empty sample");

    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());

    auto quantile = [&](double q) {
        const double h = q * static_cast<double>(sorted.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        const double frac = h - static_cast<double>(lo);
        return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    };

    FiveNumber f;
    f.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
    f.min = sorted.front();
    f.q1 = quantile(0.25);
    f.median = quantile(0.5);
    f.q3 = quantile(0.75);
    f.max = sorted.back();
    return f;
}

TrialAggregate aggregate_trials(std::span<const MetricsRecord> records) {
    if (records.empty()) throw InvalidInput("aggregate_trials: no records");

    auto collect = [&](auto member) {
        std::vector<double> v;
        v.reserve(records.size());
        for (const auto& r : records) v.push_back(r.*member);
        return five_number_summary(v);
    };

    TrialAggregate agg;
    agg.accuracy = collect(&MetricsRecord::accuracy);
    agg.precision = collect(&MetricsRecord::precision);
    agg.recall = collect(&MetricsRecord::recall);
    agg.f1 = collect(&MetricsRecord::f1);
    agg.n_trials = records.size();
    return agg;
}

} // namespace drfg
