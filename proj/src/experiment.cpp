#include "drfg/experiment.hpp"

#include "drfg/version.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace drfg {

namespace {

// Salts for per-trial seed derivation; one independent stream per stage.
enum Salt : std::uint64_t {
    kSaltSplit = 0,
    kSaltAutoencoderInit = 1,
    kSaltAutoencoderShuffle = 2,
    kSaltSlpInit = 3,
    kSaltSlpShuffle = 4,
    kSaltMlpInit = 5,
    kSaltMlpShuffle = 6,
    kSaltSvm = 7,
    kSaltTsneTrain = 8,
    kSaltTsneTest = 9,
};

bool has_image_extension(const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::string format_metric(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace

std::size_t DatasetManifest::total() const {
    std::size_t n = 0;
    for (const auto& f : files) n += f.size();
    return n;
}

DatasetManifest ingest_dataset(const std::filesystem::path& root) {
    if (!std::filesystem::is_directory(root))
        throw ConfigError("dataset root is not a directory: " + root.string());

    DatasetManifest manifest;
    std::vector<std::filesystem::path> class_dirs;
    for (const auto& entry : std::filesystem::directory_iterator(root))
        if (entry.is_directory()) class_dirs.push_back(entry.path());
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.empty()) throw ConfigError("dataset root has no class directories: " + root.string());

    for (const auto& dir : class_dirs) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(dir))
            if (entry.is_regular_file() && has_image_extension(entry.path())) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw InvalidInput("class directory has no images: " + dir.string());
        manifest.class_names.push_back(dir.filename().string());
        manifest.files.push_back(std::move(files));
    }
    return manifest;
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
    std::uint64_t z = master_seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

SplitIndices split_dataset(std::span<const int> labels, std::size_t n_classes, double test_fraction,
                           std::uint64_t trial_seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ConfigError("test_fraction must lie in (0,1), got " + std::to_string(test_fraction));

    std::vector<std::vector<std::size_t>> per_class(n_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int l = labels[i];
        if (l < 0 || static_cast<std::size_t>(l) >= n_classes)
            throw InvalidInput("split_dataset: label out of range at sample " + std::to_string(i));
        per_class[static_cast<std::size_t>(l)].push_back(i);
    }

    std::mt19937_64 rng(trial_seed);
    SplitIndices split;
    for (std::size_t c = 0; c < n_classes; ++c) {
        auto& idx = per_class[c];
        if (idx.size() < 2)
            throw InvalidInput("split_dataset: class " + std::to_string(c) + " has fewer than 2 samples");
        std::shuffle(idx.begin(), idx.end(), rng);
        std::size_t n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
        n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
        split.test.insert(split.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
        split.train.insert(split.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

const char* to_string(ExperimentConfig::Task task) {
    return task == ExperimentConfig::Task::binary ? "binary" : "three_class";
}

namespace {

StageTrainConfig parse_stage_train(const nlohmann::json& j, StageTrainConfig base) {
    base.batch_size = j.value("batch_size", base.batch_size);
    base.epochs = j.value("epochs", base.epochs);
    base.learning_rate = j.value("learning_rate", base.learning_rate);
    return base;
}

} // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& json_path) {
    std::ifstream is(json_path);
    if (!is) throw IoError("cannot open config: " + json_path.string());
    nlohmann::json doc;
    try {
        is >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad config JSON in " + json_path.string() + ": " + e.what());
    }

    const std::filesystem::path base = std::filesystem::absolute(json_path).parent_path();
    auto resolve = [&](const std::string& rel) { return rel.empty() ? std::filesystem::path{} : base / rel; };

    ExperimentConfig cfg;
    try {
        const std::string task = doc.value("task", "three_class");
        if (task == "binary")
            cfg.task = ExperimentConfig::Task::binary;
        else if (task == "three_class")
            cfg.task = ExperimentConfig::Task::three_class;
        else
            throw ConfigError("unknown task '" + task + "' (expected binary or three_class)");

        cfg.n_trials = doc.value("n_trials", cfg.n_trials);
        if (cfg.n_trials == 0) throw ConfigError("n_trials must be >= 1");
        cfg.test_fraction = doc.value("test_fraction", cfg.test_fraction);
        cfg.master_seed = doc.value("master_seed", cfg.master_seed);
        if (doc.contains("classifiers")) cfg.classifiers = doc.at("classifiers").get<std::vector<std::string>>();
        for (const auto& c : cfg.classifiers)
            if (c != "slp" && c != "mlp" && c != "svm") throw ConfigError("unknown classifier '" + c + "'");
        if (doc.contains("include_classes"))
            cfg.include_classes = doc.at("include_classes").get<std::vector<std::string>>();

        cfg.dataset_root = resolve(doc.value("dataset_root", ""));
        cfg.feature_store = resolve(doc.value("feature_store", ""));
        cfg.output_dir = resolve(doc.value("output_dir", "out"));

        if (doc.contains("registry")) {
            for (const auto& rj : doc.at("registry")) {
                BackboneSpec spec;
                spec.name = rj.at("name").get<std::string>();
                spec.graph_path = resolve(rj.at("graph").get<std::string>());
                spec.output_channels = rj.at("channels").get<std::size_t>();
                spec.preprocess = preprocess_mode_from_string(rj.value("preprocess", "identity"));
                cfg.registry.push_back(std::move(spec));
            }
        } else if (doc.contains("graph_dir")) {
            cfg.registry = default_registry(resolve(doc.at("graph_dir").get<std::string>()));
        }

        if (doc.contains("assignment")) {
            for (const auto& aj : doc.at("assignment")) {
                if (!aj.is_array() || aj.size() != 3)
                    throw ConfigError("assignment entries must be [quadrant, backbone_a, backbone_b]");
                cfg.assignment.push_back({aj.at(0).get<std::size_t>(), aj.at(1).get<std::string>(),
                                          aj.at(2).get<std::string>()});
            }
        } else if (!cfg.registry.empty() && cfg.registry.size() == 8) {
            cfg.assignment = default_assignment();
        }

        if (doc.contains("autoencoder")) {
            const auto& aj = doc.at("autoencoder");
            cfg.autoencoder.hidden_dim = aj.value("hidden_dim", cfg.autoencoder.hidden_dim);
            cfg.autoencoder.latent_dim = aj.value("latent_dim", cfg.autoencoder.latent_dim);
        }
        if (doc.contains("train")) {
            const auto& tj = doc.at("train");
            StageTrainConfig shared = parse_stage_train(tj, StageTrainConfig{});
            cfg.autoencoder_train = tj.contains("autoencoder") ? parse_stage_train(tj.at("autoencoder"), shared) : shared;
            cfg.classifier_train = tj.contains("classifier") ? parse_stage_train(tj.at("classifier"), shared) : shared;
        }
        cfg.mlp_hidden_dim = doc.value("mlp_hidden_dim", cfg.mlp_hidden_dim);

        if (doc.contains("svm")) {
            const auto& sj = doc.at("svm");
            const std::string kernel = sj.value("kernel", "rbf");
            if (kernel == "rbf")
                cfg.svm.kernel = SvmKernel::rbf;
            else if (kernel == "linear")
                cfg.svm.kernel = SvmKernel::linear;
            else
                throw ConfigError("unknown svm kernel '" + kernel + "'");
            cfg.svm.C = sj.value("C", cfg.svm.C);
            if (sj.contains("gamma") && sj.at("gamma").is_number()) cfg.svm.gamma = sj.at("gamma").get<double>();
            // gamma "scale" (or absent) keeps the <= 0 sentinel
            cfg.svm.tol = sj.value("tol", cfg.svm.tol);
            cfg.svm.max_passes = sj.value("max_passes", cfg.svm.max_passes);
        }

        if (doc.contains("tsne")) {
            const auto& tj = doc.at("tsne");
            cfg.tsne_enabled = tj.value("enabled", cfg.tsne_enabled);
            cfg.tsne_trial = tj.value("trial", cfg.tsne_trial);
            cfg.tsne.perplexity = tj.value("perplexity", cfg.tsne.perplexity);
            cfg.tsne.iterations = tj.value("iterations", cfg.tsne.iterations);
            cfg.tsne.learning_rate = tj.value("learning_rate", cfg.tsne.learning_rate);
            cfg.tsne.early_exaggeration = tj.value("early_exaggeration", cfg.tsne.early_exaggeration);
            cfg.tsne.seed = tj.value("seed", cfg.tsne.seed);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad config value in " + json_path.string() + ": " + e.what());
    }
    return cfg;
}

FeatureSet extract_dataset_features(const DatasetManifest& manifest, const FeatureExtractor& extractor) {
    FeatureSet set;
    set.class_names = manifest.class_names;
    set.dim = extractor.feature_dim();
    for (std::size_t c = 0; c < manifest.files.size(); ++c) {
        for (const auto& file : manifest.files[c]) {
            const ImageTensor canvas = load_and_resize(file);
            const auto features = extractor.extract(canvas);
            set.append(manifest.class_names[c] + "/" + file.filename().string(), static_cast<int>(c), features);
        }
    }
    return set;
}

FeatureSet extract_benchmark_features(const DatasetManifest& manifest, const BackboneSpec& spec) {
    const auto runtime = load_backbone(spec);
    FeatureSet set;
    set.class_names = manifest.class_names;
    set.dim = spec.output_channels;
    for (std::size_t c = 0; c < manifest.files.size(); ++c) {
        for (const auto& file : manifest.files[c]) {
            const ImageTensor image = load_and_resize(file, kQuadrantSize);
            const auto features = FeatureExtractor::extract_single(spec, *runtime, image);
            set.append(manifest.class_names[c] + "/" + file.filename().string(), static_cast<int>(c), features);
        }
    }
    return set;
}

void write_trials_csv(std::span<const TrialRow> rows, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open trials csv for writing: " + path.string());
    os << "trial,classifier,accuracy,precision,recall,f1\n";
    for (const auto& row : rows) {
        os << row.trial << ',' << row.classifier << ',' << format_metric(row.metrics.accuracy) << ','
           << format_metric(row.metrics.precision) << ',' << format_metric(row.metrics.recall) << ','
           << format_metric(row.metrics.f1) << '\n';
    }
}

std::vector<TrialRow> read_trials_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open trials csv: " + path.string());
    std::string line;
    if (!std::getline(is, line) || line != "trial,classifier,accuracy,precision,recall,f1")
        throw IoError("unexpected trials csv header in " + path.string());

    std::vector<TrialRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        TrialRow row;
        std::getline(ss, field, ',');
        row.trial = static_cast<std::size_t>(std::stoull(field));
        std::getline(ss, row.classifier, ',');
        std::getline(ss, field, ',');
        row.metrics.accuracy = std::stod(field);
        std::getline(ss, field, ',');
        row.metrics.precision = std::stod(field);
        std::getline(ss, field, ',');
        row.metrics.recall = std::stod(field);
        std::getline(ss, field, ',');
        row.metrics.f1 = std::stod(field);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InvalidInput("trials csv has no data rows: " + path.string());
    return rows;
}

namespace {

nlohmann::json five_number_json(const FiveNumber& f) {
    return {{"mean", f.mean}, {"min", f.min}, {"q1", f.q1}, {"median", f.median}, {"q3", f.q3}, {"max", f.max}};
}

std::map<std::string, TrialAggregate> aggregate_rows(std::span<const TrialRow> rows) {
    std::map<std::string, std::vector<MetricsRecord>> per_classifier;
    for (const auto& row : rows) per_classifier[row.classifier].push_back(row.metrics);

    std::map<std::string, TrialAggregate> aggregates;
    for (const auto& [name, records] : per_classifier) aggregates[name] = aggregate_trials(records);
    return aggregates;
}

} // namespace

void write_aggregate_json(const ExperimentReport& report, const ExperimentConfig::Task* task,
                          const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["n_trials"] = report.completed_trials;
    if (task != nullptr) doc["task"] = to_string(*task);
    if (!report.class_names.empty()) doc["classes"] = report.class_names;
    nlohmann::json classifiers;
    for (const auto& [name, agg] : report.aggregates) {
        classifiers[name] = {{"accuracy", five_number_json(agg.accuracy)},
                             {"precision", five_number_json(agg.precision)},
                             {"recall", five_number_json(agg.recall)},
                             {"f1", five_number_json(agg.f1)},
                             {"n_trials", agg.n_trials}};
    }
    doc["classifiers"] = classifiers;
    std::ofstream os(path);
    if (!os) throw IoError("cannot open aggregate json for writing: " + path.string());
    os << doc.dump(2) << "\n";
}

namespace {

// Shared trial loop. `use_autoencoder` selects the full pipeline or the
// benchmark variant that feeds standardized features straight to the
// classifiers.
ExperimentReport run_trials(const ExperimentConfig& cfg, const FeatureSet& full, bool use_autoencoder,
                            const std::string& report_stem) {
    std::filesystem::create_directories(cfg.output_dir);

    ExperimentReport report;
    report.class_names = full.class_names;
    const std::size_t n_classes = full.class_names.size();

    std::ofstream log(cfg.output_dir / (report_stem + "_run.log"));
    log << "drfg " << kVersion << "\n"
        << "pipeline: " << (use_autoencoder ? "drfg (standardize -> autoencode -> classify)"
                                            : "benchmark (standardize -> classify)")
        << "\n"
        << "task: " << to_string(cfg.task) << "\n"
        << "master_seed: " << cfg.master_seed << "\n"
        << "n_trials: " << cfg.n_trials << "\n"
        << "samples: " << full.size() << " dim: " << full.dim << " classes: " << n_classes << "\n";

    for (std::size_t trial = 0; trial < cfg.n_trials; ++trial) {
        const std::uint64_t seed = derive_seed(cfg.master_seed, trial);
        try {
            const SplitIndices split =
                split_dataset(full.labels, n_classes, cfg.test_fraction, derive_seed(seed, kSaltSplit));
            const FeatureSet train_raw = subset(full, split.train);
            const FeatureSet test_raw = subset(full, split.test);

            const Standardizer standardizer = fit_standardizer(train_raw);
            const FeatureSet train_z = apply_standardizer(standardizer, train_raw);
            const FeatureSet test_z = apply_standardizer(standardizer, test_raw);

            FeatureSet train_latent, test_latent;
            DenseNet ae;
            if (use_autoencoder) {
                AutoencoderConfig ae_cfg = cfg.autoencoder;
                ae_cfg.input_dim = full.dim;
                ae = build_autoencoder(ae_cfg, derive_seed(seed, kSaltAutoencoderInit));
                TrainConfig tc;
                tc.batch_size = cfg.autoencoder_train.batch_size;
                tc.epochs = cfg.autoencoder_train.epochs;
                tc.learning_rate = cfg.autoencoder_train.learning_rate;
                tc.loss = Loss::mse;
                tc.shuffle_seed = derive_seed(seed, kSaltAutoencoderShuffle);
                train_autoencoder(ae, train_z, tc);
                train_latent = encode_set(ae, train_z);
                test_latent = encode_set(ae, test_z);
            } else {
                train_latent = train_z;
                test_latent = test_z;
            }

            std::vector<TrialRow> trial_rows;
            for (const auto& name : cfg.classifiers) {
                std::vector<int> predictions(test_latent.size());
                if (name == "svm") {
                    SvmConfig svm_cfg = cfg.svm;
                    svm_cfg.seed = derive_seed(seed, kSaltSvm);
                    const SvmModel model = svm_train(svm_cfg, train_latent);
                    for (std::size_t i = 0; i < test_latent.size(); ++i)
                        predictions[i] = svm_predict(model, test_latent.sample(i));
                } else {
                    PerceptronConfig pc;
                    pc.variant = name == "mlp" ? PerceptronVariant::mlp : PerceptronVariant::slp;
                    pc.hidden_dim = cfg.mlp_hidden_dim;
                    pc.n_classes = n_classes;
                    TrainConfig tc;
                    tc.batch_size = cfg.classifier_train.batch_size;
                    tc.epochs = cfg.classifier_train.epochs;
                    tc.learning_rate = cfg.classifier_train.learning_rate;
                    tc.loss = Loss::categorical_cross_entropy;
                    tc.shuffle_seed = derive_seed(seed, name == "mlp" ? kSaltMlpShuffle : kSaltSlpShuffle);
                    const DenseNet net = train_perceptron(
                        pc, train_latent, tc, derive_seed(seed, name == "mlp" ? kSaltMlpInit : kSaltSlpInit));
                    for (std::size_t i = 0; i < test_latent.size(); ++i)
                        predictions[i] = predict_perceptron(net, test_latent.sample(i)).class_index;
                }
                const ConfusionMatrix cm = confusion_matrix(test_latent.labels, predictions, n_classes);
                trial_rows.push_back({trial, name, classification_metrics(cm)});
            }

            if (trial == cfg.tsne_trial) {
                // Designated-trial artifacts: the encode subcommand replays
                // this trial's standardizer + encoder on any store.
                if (use_autoencoder) save_checkpoint(ae, cfg.output_dir / (report_stem + "_autoencoder.ckpt"));
                nlohmann::json sj;
                sj["means"] = standardizer.means;
                sj["deviations"] = standardizer.deviations;
                sj["epsilon"] = standardizer.epsilon;
                std::ofstream ss(cfg.output_dir / (report_stem + "_standardizer.json"));
                ss << sj.dump(2) << "\n";

                if (cfg.tsne_enabled) {
                    TsneConfig train_tsne = cfg.tsne;
                    train_tsne.seed = derive_seed(seed, kSaltTsneTrain);
                    const TsneResult train_embed = tsne_embed(train_latent, train_tsne);
                    write_embedding_csv(train_embed.embedding, full.class_names,
                                        cfg.output_dir / (report_stem + "_tsne_train.csv"));

                    TsneConfig test_tsne = cfg.tsne;
                    test_tsne.seed = derive_seed(seed, kSaltTsneTest);
                    const TsneResult test_embed = tsne_embed(test_latent, test_tsne);
                    write_embedding_csv(test_embed.embedding, full.class_names,
                                        cfg.output_dir / (report_stem + "_tsne_test.csv"));
                }
            }

            log << "trial " << trial << " seed " << seed;
            for (const auto& row : trial_rows)
                log << ' ' << row.classifier << "_acc=" << format_metric(row.metrics.accuracy);
            log << "\n";
            report.rows.insert(report.rows.end(), trial_rows.begin(), trial_rows.end());
            report.completed_trials += 1;
        } catch (const std::exception& e) {
            report.failed_trials.push_back("trial " + std::to_string(trial) + ": " + e.what());
            log << "trial " << trial << " FAILED: " << e.what() << "\n";
        }
    }

    if (report.completed_trials == 0)
        throw Error("experiment failed: no trial completed (" +
                    (report.failed_trials.empty() ? std::string("no trials ran") : report.failed_trials.front()) +
                    ")");

    report.aggregates = aggregate_rows(report.rows);
    report.trials_csv = cfg.output_dir / (report_stem + "_trials.csv");
    report.aggregate_json = cfg.output_dir / (report_stem + "_aggregate.json");
    report.run_log = cfg.output_dir / (report_stem + "_run.log");
    write_trials_csv(report.rows, report.trials_csv);
    const ExperimentConfig::Task task = cfg.task;
    write_aggregate_json(report, &task, report.aggregate_json);

    for (const auto& [name, agg] : report.aggregates)
        log << "aggregate " << name << " mean_acc=" << format_metric(agg.accuracy.mean) << "\n";
    return report;
}

std::vector<std::string> resolve_include_classes(const ExperimentConfig& cfg, const FeatureSet& store) {
    if (!cfg.include_classes.empty()) {
        if (cfg.task == ExperimentConfig::Task::binary && cfg.include_classes.size() != 2)
            throw ConfigError("binary task needs exactly 2 include_classes");
        return cfg.include_classes;
    }
    if (cfg.task == ExperimentConfig::Task::binary) {
        std::vector<std::string> defaults;
        for (const auto& want : {"COVID", "Normal"}) {
            for (const auto& name : store.class_names)
                if (name == want) {
                    defaults.push_back(name);
                    break;
                }
        }
        if (defaults.size() != 2)
            throw ConfigError("binary task: classes COVID and Normal not found in the store; set include_classes");
        return defaults;
    }
    return store.class_names;
}

// Loads the cached store when present, otherwise extracts from the dataset
// and caches. Extraction is deterministic and split-independent; only
// standardization is per-trial.
FeatureSet obtain_feature_store(const ExperimentConfig& cfg, const std::filesystem::path& store_path,
                                bool benchmark, const std::string& backbone_name) {
    if (!store_path.empty() && std::filesystem::exists(store_path)) return load_feature_store(store_path);

    if (cfg.dataset_root.empty())
        throw ConfigError("no feature store at " + store_path.string() + " and no dataset_root to build it from");
    const DatasetManifest manifest = ingest_dataset(cfg.dataset_root);

    FeatureSet set;
    if (benchmark) {
        const auto it = std::find_if(cfg.registry.begin(), cfg.registry.end(),
                                     [&](const BackboneSpec& s) { return s.name == backbone_name; });
        if (it == cfg.registry.end()) throw ConfigError("benchmark backbone not in registry: " + backbone_name);
        set = extract_benchmark_features(manifest, *it);
    } else {
        if (cfg.registry.empty()) throw ConfigError("config has neither a feature store nor a backbone registry");
        FeatureExtractor extractor(cfg.registry, cfg.assignment);
        set = extract_dataset_features(manifest, extractor);
    }

    if (!store_path.empty()) {
        if (!store_path.parent_path().empty()) std::filesystem::create_directories(store_path.parent_path());
        save_feature_store(set, store_path);
    }
    return set;
}

} // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    const std::filesystem::path store_path =
        cfg.feature_store.empty() ? cfg.output_dir / "features.drfg" : cfg.feature_store;
    std::filesystem::create_directories(cfg.output_dir);

    FeatureSet store = obtain_feature_store(cfg, store_path, false, "");
    const auto keep = resolve_include_classes(cfg, store);
    store = filter_classes(store, keep);

    return run_trials(cfg, store, true, "experiment");
}

ExperimentReport run_benchmark(const ExperimentConfig& cfg, const std::string& backbone_name) {
    std::filesystem::create_directories(cfg.output_dir);
    const std::filesystem::path store_path = cfg.output_dir / ("features_" + backbone_name + ".drfg");

    FeatureSet store = obtain_feature_store(cfg, store_path, true, backbone_name);
    const auto keep = resolve_include_classes(cfg, store);
    store = filter_classes(store, keep);

    return run_trials(cfg, store, false, "benchmark_" + backbone_name);
}

ExperimentReport aggregate_trials_csv(const std::filesystem::path& trials_csv,
                                      const std::filesystem::path& output_json) {
    ExperimentReport report;
    report.rows = read_trials_csv(trials_csv);
    std::set<std::size_t> trials;
    for (const auto& row : report.rows) trials.insert(row.trial);
    report.completed_trials = trials.size();
    report.aggregates = aggregate_rows(report.rows);
    report.trials_csv = trials_csv;
    report.aggregate_json = output_json;
    write_aggregate_json(report, nullptr, output_json);
    return report;
}

} // namespace drfg
