#include "drfg/autoencoder.hpp"
#include "drfg/experiment.hpp"
#include "drfg/tsne.hpp"
#include "drfg/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

void print_aggregates(const drfg::ExperimentReport& report) {
    for (const auto& [name, agg] : report.aggregates) {
        std::printf("%-4s mean accuracy=%.4f precision=%.4f recall=%.4f f1=%.4f (n=%zu)\n", name.c_str(),
                    agg.accuracy.mean, agg.precision.mean, agg.recall.mean, agg.f1.mean, agg.n_trials);
    }
    if (!report.failed_trials.empty()) {
        std::printf("%zu trial(s) failed:\n", report.failed_trials.size());
        for (const auto& f : report.failed_trials) std::printf("  %s\n", f.c_str());
    }
}

int cmd_extract(const std::string& config_path, const std::string& output) {
    const auto cfg = drfg::load_experiment_config(config_path);
    if (cfg.registry.empty()) throw drfg::ConfigError("config has no backbone registry to extract with");
    if (cfg.dataset_root.empty()) throw drfg::ConfigError("config has no dataset_root");

    const drfg::DatasetManifest manifest = drfg::ingest_dataset(cfg.dataset_root);
    for (std::size_t c = 0; c < manifest.class_names.size(); ++c)
        std::printf("class %-20s %zu images\n", manifest.class_names[c].c_str(), manifest.files[c].size());

    drfg::FeatureExtractor extractor(cfg.registry, cfg.assignment);
    const drfg::FeatureSet set = drfg::extract_dataset_features(manifest, extractor);

    std::filesystem::path store = output.empty()
                                      ? (cfg.feature_store.empty() ? cfg.output_dir / "features.drfg" : cfg.feature_store)
                                      : std::filesystem::path(output);
    if (!store.parent_path().empty()) std::filesystem::create_directories(store.parent_path());
    drfg::save_feature_store(set, store);
    std::printf("wrote %zu samples x %zu features to %s\n", set.size(), set.dim, store.string().c_str());
    return 0;
}

int cmd_experiment(const std::string& config_path) {
    const auto cfg = drfg::load_experiment_config(config_path);
    const auto report = drfg::run_experiment(cfg);
    std::printf("completed %zu/%zu trials\n", report.completed_trials, cfg.n_trials);
    print_aggregates(report);
    std::printf("reports: %s, %s\n", report.trials_csv.string().c_str(), report.aggregate_json.string().c_str());
    return report.failed_trials.empty() ? 0 : 2;
}

int cmd_benchmark(const std::string& config_path, const std::string& backbone) {
    const auto cfg = drfg::load_experiment_config(config_path);
    const auto report = drfg::run_benchmark(cfg, backbone);
    std::printf("benchmark %s: completed %zu/%zu trials\n", backbone.c_str(), report.completed_trials, cfg.n_trials);
    print_aggregates(report);
    return report.failed_trials.empty() ? 0 : 2;
}

int cmd_tsne(const std::string& input, const std::string& output, double perplexity, std::size_t iterations,
             double learning_rate, std::uint64_t seed) {
    const drfg::FeatureSet set = drfg::load_feature_store(input);
    drfg::TsneConfig cfg;
    cfg.perplexity = perplexity;
    cfg.iterations = iterations;
    cfg.learning_rate = learning_rate;
    cfg.seed = seed;
    const drfg::TsneResult result = drfg::tsne_embed(set, cfg);
    drfg::write_embedding_csv(result.embedding, set.class_names, output);
    std::printf("embedded %zu points, final KL=%.4f", set.size(), result.kl_history.back());
    if (result.fallback_rows > 0) std::printf(" (%zu bandwidth fallback rows)", result.fallback_rows);
    std::printf("\nwrote %s\n", output.c_str());
    return 0;
}

int cmd_encode(const std::string& checkpoint, const std::string& input, const std::string& output,
               const std::string& standardizer_path) {
    const drfg::DenseNet net = drfg::load_checkpoint(checkpoint);
    drfg::FeatureSet set = drfg::load_feature_store(input);

    if (!standardizer_path.empty()) {
        std::ifstream is(standardizer_path);
        if (!is) throw drfg::IoError("cannot open standardizer: " + standardizer_path);
        nlohmann::json doc;
        is >> doc;
        drfg::Standardizer s;
        s.means = doc.at("means").get<std::vector<double>>();
        s.deviations = doc.at("deviations").get<std::vector<double>>();
        s.epsilon = doc.value("epsilon", 1e-6);
        set = drfg::apply_standardizer(s, set);
    }

    const drfg::FeatureSet latents = drfg::encode_set(net, set);
    drfg::save_feature_store(latents, output);
    std::printf("encoded %zu samples to %zu-dim latents at %s\n", latents.size(), latents.dim, output.c_str());
    return 0;
}

int cmd_metrics(const std::string& trials, const std::string& output) {
    const auto report = drfg::aggregate_trials_csv(trials, output);
    print_aggregates(report);
    std::printf("wrote %s\n", output.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"deep reproductive feature generation pipeline"};
    app.set_version_flag("--version", drfg::kVersion);
    app.require_subcommand(1);

    std::string config_path, output, backbone, input, checkpoint, standardizer, trials;
    double perplexity = 30.0, learning_rate = 200.0;
    std::size_t iterations = 1000;
    std::uint64_t seed = 0;

    auto* extract = app.add_subcommand("extract", "build a feature store from an image dataset");
    extract->add_option("--config", config_path, "experiment config JSON")->required();
    extract->add_option("--output", output, "feature store path (default from config)");

    auto* experiment = app.add_subcommand("experiment", "run the repeated-trials experiment");
    experiment->add_option("--config", config_path, "experiment config JSON")->required();

    auto* benchmark = app.add_subcommand("benchmark", "run a single-backbone baseline");
    benchmark->add_option("--config", config_path, "experiment config JSON")->required();
    benchmark->add_option("--backbone", backbone, "registry backbone name")->required();

    auto* tsne = app.add_subcommand("tsne", "embed a feature/latent store to 2-D CSV");
    tsne->add_option("--input", input, "feature store")->required();
    tsne->add_option("--output", output, "embedding CSV")->required();
    tsne->add_option("--perplexity", perplexity, "perplexity (default 30)");
    tsne->add_option("--iterations", iterations, "iterations (default 1000)");
    tsne->add_option("--learning-rate", learning_rate, "learning rate (default 200)");
    tsne->add_option("--seed", seed, "init seed");

    auto* encode = app.add_subcommand("encode", "encode a feature store with a trained autoencoder");
    encode->add_option("--checkpoint", checkpoint, "autoencoder checkpoint")->required();
    encode->add_option("--input", input, "raw or standardized feature store")->required();
    encode->add_option("--output", output, "latent store path")->required();
    encode->add_option("--standardizer", standardizer, "standardizer JSON to apply before encoding");

    auto* metrics = app.add_subcommand("metrics", "recompute aggregates from a per-trial CSV");
    metrics->add_option("--trials", trials, "per-trial CSV")->required();
    metrics->add_option("--output", output, "aggregate JSON path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (extract->parsed()) return cmd_extract(config_path, output);
        if (experiment->parsed()) return cmd_experiment(config_path);
        if (benchmark->parsed()) return cmd_benchmark(config_path, backbone);
        if (tsne->parsed()) return cmd_tsne(input, output, perplexity, iterations, learning_rate, seed);
        if (encode->parsed()) return cmd_encode(checkpoint, input, output, standardizer);
        if (metrics->parsed()) return cmd_metrics(trials, output);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
