// Integration coverage of every drfg subcommand against a stub dataset.
// The binary under test comes from the DRFG_CLI environment variable.

#include "drfg/experiment.hpp"
#include "drfg/image.hpp"

#include "test_util.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

using namespace drfg;

namespace {

std::string cli_path() {
    const char* cli = std::getenv("DRFG_CLI");
    REQUIRE_MESSAGE(cli != nullptr, "DRFG_CLI must point at the drfg binary");
    return cli;
}

int run_cli(const std::string& args, const std::filesystem::path& log) {
    const std::string cmd = "\"" + cli_path() + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    return std::system(cmd.c_str());
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void write_noise_png(const std::filesystem::path& path, std::uint64_t seed) {
    ImageTensor img(32, 32);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dist(0, 255);
    for (float& v : img.data) v = static_cast<float>(dist(rng));
    write_png(img, path);
}

struct Fixture {
    testutil::TempDir tmp{"cli"};
    std::filesystem::path config;

    Fixture() {
        std::uint64_t seed = 900;
        for (const char* cls : {"one", "two", "three"}) {
            std::filesystem::create_directories(tmp / "data" / cls);
            for (int i = 0; i < 20; ++i) {
                char name[32];
                std::snprintf(name, sizeof name, "img_%02d.png", i);
                write_noise_png(tmp.path() / "data" / cls / name, seed++);
            }
        }
        write_stub_backbone(tmp / "sa.json", 4, 5, "block_mix", 0.0, 81);
        write_stub_backbone(tmp / "sb.json", 4, 7, "block_mix", 0.0, 82);

        config = tmp / "config.json";
        std::ofstream(config) << R"({
  "task": "three_class",
  "n_trials": 2,
  "test_fraction": 0.2,
  "master_seed": 77,
  "classifiers": ["slp", "svm"],
  "dataset_root": "data",
  "feature_store": "features.drfg",
  "registry": [
    {"name": "sa", "graph": "sa.json", "channels": 5, "preprocess": "scale_symmetric"},
    {"name": "sb", "graph": "sb.json", "channels": 7, "preprocess": "identity"}
  ],
  "assignment": [[0, "sa", "sb"]],
  "autoencoder": {"hidden_dim": 8, "latent_dim": 4},
  "train": {"batch_size": 16, "epochs": 5, "learning_rate": 0.003},
  "tsne": {"enabled": true, "trial": 0, "perplexity": 3.0, "iterations": 250, "seed": 2},
  "output_dir": "out"
})";
    }
};

} // namespace

TEST_CASE("cli subcommands cover the whole surface") {
    Fixture fx;
    const auto& tmp = fx.tmp;

    SUBCASE("extract builds the feature store") {
        REQUIRE(run_cli("extract --config \"" + fx.config.string() + "\"", tmp / "extract.log") == 0);
        const FeatureSet set = load_feature_store(tmp / "features.drfg");
        CHECK(set.size() == 60);
        CHECK(set.dim == 12);
        CHECK(set.class_names == std::vector<std::string>{"one", "three", "two"});
    }

    SUBCASE("experiment, encode, tsne, and metrics chain together") {
        REQUIRE(run_cli("experiment --config \"" + fx.config.string() + "\"", tmp / "experiment.log") == 0);
        CHECK(std::filesystem::exists(tmp / "out" / "experiment_trials.csv"));
        CHECK(std::filesystem::exists(tmp / "out" / "experiment_aggregate.json"));
        CHECK(std::filesystem::exists(tmp / "out" / "experiment_tsne_train.csv"));
        CHECK(std::filesystem::exists(tmp / "out" / "experiment_run.log"));

        // encode: replay the designated trial's standardizer + encoder.
        const std::string encode_args = "encode --checkpoint \"" + (tmp / "out" / "experiment_autoencoder.ckpt").string() +
                                        "\" --input \"" + (tmp / "features.drfg").string() + "\" --standardizer \"" +
                                        (tmp / "out" / "experiment_standardizer.json").string() + "\" --output \"" +
                                        (tmp / "latents.drfg").string() + "\"";
        REQUIRE(run_cli(encode_args, tmp / "encode.log") == 0);
        const FeatureSet latents = load_feature_store(tmp / "latents.drfg");
        CHECK(latents.size() == 60);
        CHECK(latents.dim == 4);

        // tsne on the latent store.
        const std::string tsne_args = "tsne --input \"" + (tmp / "latents.drfg").string() + "\" --output \"" +
                                      (tmp / "embedding.csv").string() + "\" --perplexity 4 --iterations 250 --seed 3";
        REQUIRE(run_cli(tsne_args, tmp / "tsne.log") == 0);
        std::ifstream csv(tmp / "embedding.csv");
        std::string header;
        std::getline(csv, header);
        CHECK(header == "sample_id,label,x,y");
        std::size_t rows = 0;
        std::string line;
        while (std::getline(csv, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 60);

        // metrics: re-aggregating the per-trial CSV reproduces the numbers.
        const std::string metrics_args = "metrics --trials \"" + (tmp / "out" / "experiment_trials.csv").string() +
                                         "\" --output \"" + (tmp / "reagg.json").string() + "\"";
        REQUIRE(run_cli(metrics_args, tmp / "metrics.log") == 0);
        const auto original = nlohmann::json::parse(slurp(tmp / "out" / "experiment_aggregate.json"));
        const auto recomputed = nlohmann::json::parse(slurp(tmp / "reagg.json"));
        CHECK(recomputed.at("n_trials") == 2);
        // The CSV carries 6 decimals, so the recomputed stats match to ~1e-6.
        for (const auto& [name, agg] : original.at("classifiers").items()) {
            for (const char* metric : {"accuracy", "precision", "recall", "f1"}) {
                for (const char* stat : {"mean", "min", "q1", "median", "q3", "max"}) {
                    const double a = agg.at(metric).at(stat).get<double>();
                    const double b = recomputed.at("classifiers").at(name).at(metric).at(stat).get<double>();
                    CHECK(a == doctest::Approx(b).epsilon(1e-5));
                }
            }
        }
    }

    SUBCASE("benchmark skips the autoencoder but emits the same report shape") {
        REQUIRE(run_cli("benchmark --config \"" + fx.config.string() + "\" --backbone sb", tmp / "bench.log") == 0);
        CHECK(std::filesystem::exists(tmp / "out" / "benchmark_sb_trials.csv"));
        CHECK(std::filesystem::exists(tmp / "out" / "benchmark_sb_aggregate.json"));
        CHECK(std::filesystem::exists(tmp / "out" / "features_sb.drfg"));
        const FeatureSet store = load_feature_store(tmp / "out" / "features_sb.drfg");
        CHECK(store.dim == 7); // single-backbone width, no concatenation
    }

    SUBCASE("bad invocations exit nonzero") {
        CHECK(run_cli("experiment --config \"" + (tmp / "missing.json").string() + "\"", tmp / "bad1.log") != 0);
        CHECK(run_cli("benchmark --config \"" + fx.config.string() + "\" --backbone nope", tmp / "bad2.log") != 0);
        CHECK(run_cli("tsne --input \"" + (tmp / "nothing.drfg").string() + "\" --output \"" +
                          (tmp / "x.csv").string() + "\"",
                      tmp / "bad3.log") != 0);
        CHECK(run_cli("definitely-not-a-subcommand", tmp / "bad4.log") != 0);
    }
}

TEST_CASE("training artifacts never depend on test-split values") {
    // Corrupting the designated trial's test rows must not change the saved
    // standardizer or autoencoder checkpoint: they are fit on train only.
    Fixture fx;
    const auto& tmp = fx.tmp;

    REQUIRE(run_cli("extract --config \"" + fx.config.string() + "\"", tmp / "extract.log") == 0);
    FeatureSet store = load_feature_store(tmp / "features.drfg");

    ExperimentConfig cfg = load_experiment_config(fx.config);
    cfg.tsne_enabled = false;
    cfg.n_trials = 1;
    cfg.output_dir = tmp / "clean";
    run_experiment(cfg);

    // Recompute trial 0's split exactly as the harness does and corrupt the
    // test rows only.
    const std::uint64_t trial_seed = derive_seed(cfg.master_seed, 0);
    const SplitIndices split = split_dataset(store.labels, 3, cfg.test_fraction, derive_seed(trial_seed, 0));
    for (std::size_t idx : split.test)
        for (float& v : std::span<float>(store.values.data() + idx * store.dim, store.dim)) v = -v * 3.0f + 1.0f;
    save_feature_store(store, tmp / "features.drfg");

    cfg.output_dir = tmp / "corrupted";
    run_experiment(cfg);

    CHECK(slurp(tmp / "clean" / "experiment_standardizer.json") ==
          slurp(tmp / "corrupted" / "experiment_standardizer.json"));
    CHECK(slurp(tmp / "clean" / "experiment_autoencoder.ckpt") ==
          slurp(tmp / "corrupted" / "experiment_autoencoder.ckpt"));
    // The evaluation side does see the corruption.
    CHECK(slurp(tmp / "clean" / "experiment_trials.csv") != slurp(tmp / "corrupted" / "experiment_trials.csv"));
}
