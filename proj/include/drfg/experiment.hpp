#pragma once

#include "drfg/autoencoder.hpp"
#include "drfg/backbone.hpp"
#include "drfg/classifiers.hpp"
#include "drfg/feature_store.hpp"
#include "drfg/metrics.hpp"
#include "drfg/tsne.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace drfg {

// ---------------------------------------------------------------------------
// Dataset ingestion and splits
// ---------------------------------------------------------------------------

struct DatasetManifest {
    std::vector<std::string> class_names;                  // lexicographic
    std::vector<std::vector<std::filesystem::path>> files; // per class, sorted

    std::size_t total() const;
};

// One subdirectory per class under root; PNG/JPEG files, deterministic
// lexicographic ordering.
DatasetManifest ingest_dataset(const std::filesystem::path& root);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Stratified per class; partitions are disjoint and exhaustive, shuffling
// seeded by trial_seed.
SplitIndices split_dataset(std::span<const int> labels, std::size_t n_classes, double test_fraction,
                           std::uint64_t trial_seed);

// splitmix64-style mixing so each (master_seed, index) pair lands on an
// independent stream.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

// ---------------------------------------------------------------------------
// Experiment configuration (JSON document; paths relative to the file)
// ---------------------------------------------------------------------------

struct StageTrainConfig {
    std::size_t batch_size = 32;
    std::size_t epochs = 40;
    double learning_rate = 1e-3;
};

struct ExperimentConfig {
    enum class Task { binary, three_class };

    Task task = Task::three_class;
    std::size_t n_trials = 50;
    double test_fraction = 0.2;
    std::uint64_t master_seed = 0;
    std::vector<std::string> classifiers = {"slp", "mlp", "svm"};
    std::vector<std::string> include_classes; // empty: derive from task

    std::filesystem::path dataset_root; // optional when feature_store exists
    std::filesystem::path feature_store;
    std::vector<BackboneSpec> registry;
    QuadrantAssignment assignment;

    AutoencoderConfig autoencoder; // input_dim resolved from data at run time
    StageTrainConfig autoencoder_train;
    StageTrainConfig classifier_train;
    std::size_t mlp_hidden_dim = 128;
    SvmConfig svm;

    bool tsne_enabled = true;
    std::size_t tsne_trial = 0;
    TsneConfig tsne;

    std::filesystem::path output_dir = "out";
};

const char* to_string(ExperimentConfig::Task task);

ExperimentConfig load_experiment_config(const std::filesystem::path& json_path);

// ---------------------------------------------------------------------------
// Feature extraction entry points
// ---------------------------------------------------------------------------

// Full canvas pipeline: 448 resize, quadrant slicing, paired backbones.
FeatureSet extract_dataset_features(const DatasetManifest& manifest, const FeatureExtractor& extractor);

// Benchmark pipeline: full image resized to 224, one backbone, no slicing.
FeatureSet extract_benchmark_features(const DatasetManifest& manifest, const BackboneSpec& spec);

// ---------------------------------------------------------------------------
// Trial loop
// ---------------------------------------------------------------------------

struct TrialRow {
    std::size_t trial = 0;
    std::string classifier;
    MetricsRecord metrics;
};

struct ExperimentReport {
    std::vector<TrialRow> rows;
    std::map<std::string, TrialAggregate> aggregates; // per classifier
    std::vector<std::string> class_names;
    std::size_t completed_trials = 0;
    std::vector<std::string> failed_trials; // "trial 3: <reason>"

    std::filesystem::path trials_csv;
    std::filesystem::path aggregate_json;
    std::filesystem::path run_log;
};

// Algorithm: per trial — split, fit standardizer on train, train the
// autoencoder on train features, encode both splits, train each classifier
// on train latents, evaluate on test latents. After all trials, aggregate
// and write per-trial CSV + aggregate JSON (+ t-SNE CSVs, autoencoder
// checkpoint and standardizer for the designated trial).
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Same trial protocol on single-backbone features; the autoencoder stage is
// skipped and classifiers consume standardized features directly.
ExperimentReport run_benchmark(const ExperimentConfig& cfg, const std::string& backbone_name);

// Re-aggregate a per-trial CSV (the `metrics` CLI subcommand).
ExperimentReport aggregate_trials_csv(const std::filesystem::path& trials_csv,
                                      const std::filesystem::path& output_json);

void write_trials_csv(std::span<const TrialRow> rows, const std::filesystem::path& path);
std::vector<TrialRow> read_trials_csv(const std::filesystem::path& path);
void write_aggregate_json(const ExperimentReport& report, const ExperimentConfig::Task* task,
                          const std::filesystem::path& path);

} // namespace drfg
