#pragma once

#include "drfg/errors.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace drfg {

struct ConfusionMatrix {
    std::size_t n_classes = 0;
    std::vector<std::uint64_t> counts; // row-major, rows = true class, cols = predicted

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t k) : n_classes(k), counts(k * k, 0) {}

    std::uint64_t& at(std::size_t t, std::size_t p) { return counts[t * n_classes + p]; }
    std::uint64_t at(std::size_t t, std::size_t p) const { return counts[t * n_classes + p]; }
    std::uint64_t total() const;
    bool empty() const { return total() == 0; }
};

struct MetricsRecord {
    double accuracy = 0.0;
    double precision = 0.0; // macro-averaged
    double recall = 0.0;    // macro-averaged
    double f1 = 0.0;        // macro average of per-class harmonic means
};

struct FiveNumber {
    double mean = 0.0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

struct TrialAggregate {
    FiveNumber accuracy, precision, recall, f1;
    std::size_t n_trials = 0;
};

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, std::size_t k);

// accuracy = trace/total; per-class precision = diag/col-sum, recall =
// diag/row-sum (0 when the denominator is 0); macro averages across classes.
MetricsRecord classification_metrics(const ConfusionMatrix& cm);

// Mean and five-number summary per metric; quartiles by linear interpolation
// between order statistics.
TrialAggregate aggregate_trials(std::span<const MetricsRecord> records);

// Five-number summary of an arbitrary sample (used for box-plot exports).
FiveNumber five_number_summary(std::span<const double> values);

} // namespace drfg
