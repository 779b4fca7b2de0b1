#include "drfg/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <vector>

using namespace drfg;

TEST_CASE("confusion matrix hand tally") {
    const std::vector<int> y_true{0, 0, 1, 1};
    const std::vector<int> y_pred{0, 1, 1, 1};
    const ConfusionMatrix cm = confusion_matrix(y_true, y_pred, 2);
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(0, 1) == 1);
    CHECK(cm.at(1, 0) == 0);
    CHECK(cm.at(1, 1) == 2);
    CHECK(cm.total() == 4);
}

TEST_CASE("perfect predictions give a diagonal matrix") {
    const std::vector<int> y{0, 1, 2, 1, 0, 2};
    const ConfusionMatrix cm = confusion_matrix(y, y, 3);
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t p = 0; p < 3; ++p) CHECK(cm.at(t, p) == (t == p ? 2u : 0u));
}

TEST_CASE("empty inputs give a zero matrix flagged empty") {
    const std::vector<int> none;
    const ConfusionMatrix cm = confusion_matrix(none, none, 2);
    CHECK(cm.empty());
    CHECK_THROWS_AS(classification_metrics(cm), InvalidInput);
}

TEST_CASE("out-of-range labels are rejected") {
    const std::vector<int> y_true{0, 2};
    const std::vector<int> y_pred{0, 1};
    CHECK_THROWS_AS(confusion_matrix(y_true, y_pred, 2), InvalidInput);
}

TEST_CASE("classification metrics oracle on [[1,1],[0,2]]") {
    ConfusionMatrix cm(2);
    cm.at(0, 0) = 1;
    cm.at(0, 1) = 1;
    cm.at(1, 1) = 2;
    const MetricsRecord r = classification_metrics(cm);
    CHECK(r.accuracy == doctest::Approx(0.75).epsilon(1e-4));
    CHECK(r.precision == doctest::Approx(0.8333).epsilon(1e-4));
    CHECK(r.recall == doctest::Approx(0.75).epsilon(1e-4));
    CHECK(r.f1 == doctest::Approx(0.7333).epsilon(1e-4));
}

TEST_CASE("diagonal matrix scores 1.0 everywhere") {
    ConfusionMatrix cm(3);
    cm.at(0, 0) = 5;
    cm.at(1, 1) = 2;
    cm.at(2, 2) = 9;
    const MetricsRecord r = classification_metrics(cm);
    CHECK(r.accuracy == 1.0);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.f1 == 1.0);
}

TEST_CASE("macro metrics are invariant to a consistent class permutation") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> label(0, 2);
    std::vector<int> y_true(60), y_pred(60);
    for (auto& v : y_true) v = label(rng);
    for (auto& v : y_pred) v = label(rng);

    const MetricsRecord base = classification_metrics(confusion_matrix(y_true, y_pred, 3));

    const int perm[3] = {2, 0, 1};
    std::vector<int> pt(60), pp(60);
    for (std::size_t i = 0; i < 60; ++i) {
        pt[i] = perm[y_true[i]];
        pp[i] = perm[y_pred[i]];
    }
    const MetricsRecord permuted = classification_metrics(confusion_matrix(pt, pp, 3));
    CHECK(permuted.accuracy == doctest::Approx(base.accuracy).epsilon(1e-12));
    CHECK(permuted.precision == doctest::Approx(base.precision).epsilon(1e-12));
    CHECK(permuted.recall == doctest::Approx(base.recall).epsilon(1e-12));
    CHECK(permuted.f1 == doctest::Approx(base.f1).epsilon(1e-12));
}

TEST_CASE("accuracy equals the direct match ratio") {
    std::mt19937_64 rng(22);
    std::uniform_int_distribution<int> label(0, 3);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<int> y_true(41), y_pred(41);
        for (auto& v : y_true) v = label(rng);
        for (auto& v : y_pred) v = label(rng);
        std::size_t matches = 0;
        for (std::size_t i = 0; i < y_true.size(); ++i) matches += y_true[i] == y_pred[i];

        const MetricsRecord r = classification_metrics(confusion_matrix(y_true, y_pred, 4));
        CHECK(r.accuracy == doctest::Approx(static_cast<double>(matches) / 41.0).epsilon(1e-12));
    }
}

TEST_CASE("macro f1 lies between the per-class extremes") {
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<std::uint64_t> count(0, 12);
    for (int rep = 0; rep < 20; ++rep) {
        ConfusionMatrix cm(3);
        for (auto& c : cm.counts) c = count(rng);
        if (cm.total() == 0) continue;

        std::vector<double> per_class_f1;
        for (std::size_t c = 0; c < 3; ++c) {
            std::uint64_t col = 0, row = 0;
            for (std::size_t i = 0; i < 3; ++i) {
                col += cm.at(i, c);
                row += cm.at(c, i);
            }
            const double diag = static_cast<double>(cm.at(c, c));
            const double prec = col == 0 ? 0.0 : diag / static_cast<double>(col);
            const double rec = row == 0 ? 0.0 : diag / static_cast<double>(row);
            per_class_f1.push_back((prec + rec) == 0.0 ? 0.0 : 2.0 * prec * rec / (prec + rec));
        }
        const MetricsRecord r = classification_metrics(cm);
        CHECK(r.f1 <= *std::max_element(per_class_f1.begin(), per_class_f1.end()) + 1e-12);
        CHECK(r.f1 >= *std::min_element(per_class_f1.begin(), per_class_f1.end()) - 1e-12);
    }
}

TEST_CASE("aggregate of identical records collapses the five-number summary") {
    const MetricsRecord r{0.9, 0.8, 0.7, 0.74};
    const std::vector<MetricsRecord> records(7, r);
    const TrialAggregate agg = aggregate_trials(records);
    CHECK(agg.n_trials == 7);
    CHECK(agg.accuracy.min == agg.accuracy.max);
    CHECK(agg.accuracy.q1 == 0.9);
    CHECK(agg.accuracy.median == 0.9);
    CHECK(agg.accuracy.q3 == 0.9);
    CHECK(agg.accuracy.mean == doctest::Approx(0.9));
}

TEST_CASE("aggregate median and mean by linear interpolation") {
    std::vector<MetricsRecord> records;
    for (double a : {0.90, 0.92, 0.94, 0.96}) records.push_back({a, a, a, a});
    const TrialAggregate agg = aggregate_trials(records);
    CHECK(agg.accuracy.median == doctest::Approx(0.93).epsilon(1e-12));
    CHECK(agg.accuracy.mean == doctest::Approx(0.93).epsilon(1e-12));
    CHECK(agg.accuracy.min == 0.90);
    CHECK(agg.accuracy.max == 0.96);
    CHECK(agg.n_trials == 4);
}

TEST_CASE("aggregate of 50 records reports n_trials == 50") {
    std::vector<MetricsRecord> records;
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dist(0.5, 1.0);
    for (int t = 0; t < 50; ++t) records.push_back({dist(rng), dist(rng), dist(rng), dist(rng)});
    const TrialAggregate agg = aggregate_trials(records);
    CHECK(agg.n_trials == 50);
    CHECK(agg.accuracy.min <= agg.accuracy.q1);
    CHECK(agg.accuracy.q1 <= agg.accuracy.median);
    CHECK(agg.accuracy.median <= agg.accuracy.q3);
    CHECK(agg.accuracy.q3 <= agg.accuracy.max);
}

TEST_CASE("aggregation is permutation invariant") {
    std::vector<MetricsRecord> records;
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int t = 0; t < 9; ++t) records.push_back({dist(rng), dist(rng), dist(rng), dist(rng)});

    auto shuffled = records;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const TrialAggregate a = aggregate_trials(records);
    const TrialAggregate b = aggregate_trials(shuffled);
    CHECK(a.accuracy.median == b.accuracy.median);
    CHECK(a.f1.q1 == b.f1.q1);
    CHECK(a.recall.q3 == b.recall.q3);
    CHECK(a.precision.mean == doctest::Approx(b.precision.mean).epsilon(1e-12));
}

TEST_CASE("empty aggregation is rejected") {
    CHECK_THROWS_AS(aggregate_trials(std::vector<MetricsRecord>{}), InvalidInput);
}
