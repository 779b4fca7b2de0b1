#include "drfg/autoencoder.hpp"
#include "drfg/backbone.hpp"
#include "drfg/classifiers.hpp"
#include "drfg/experiment.hpp"
#include "drfg/image.hpp"
#include "drfg/metrics.hpp"
#include "drfg/nn.hpp"
#include "drfg/tsne.hpp"
#include "drfg/version.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;

namespace {

using DArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using FArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using IArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

drfg::Vec to_vec(const DArray& a) {
    if (a.ndim() != 1) throw drfg::ShapeError("expected a 1-D array");
    return {a.data(), a.data() + a.shape(0)};
}

drfg::Matrix to_matrix(const DArray& a) {
    if (a.ndim() != 2) throw drfg::ShapeError("expected a 2-D array");
    drfg::Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + m.rows * m.cols, m.data.begin());
    return m;
}

py::array_t<double> from_vec(const drfg::Vec& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::array_t<double> from_matrix(const drfg::Matrix& m) {
    py::array_t<double> out({static_cast<py::ssize_t>(m.rows), static_cast<py::ssize_t>(m.cols)});
    std::copy(m.data.begin(), m.data.end(), out.mutable_data());
    return out;
}

drfg::ImageTensor to_image(const FArray& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw drfg::ShapeError("expected an HxWx3 array");
    drfg::ImageTensor img(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + img.data.size(), img.data.begin());
    return img;
}

py::array_t<float> from_image(const drfg::ImageTensor& img) {
    py::array_t<float> out({static_cast<py::ssize_t>(img.height), static_cast<py::ssize_t>(img.width),
                            static_cast<py::ssize_t>(3)});
    std::copy(img.data.begin(), img.data.end(), out.mutable_data());
    return out;
}

drfg::FeatureSet to_feature_set(const FArray& values, const IArray& labels,
                                const std::vector<std::string>& class_names) {
    if (values.ndim() != 2) throw drfg::ShapeError("values must be a 2-D array");
    if (labels.ndim() != 1 || labels.shape(0) != values.shape(0))
        throw drfg::ShapeError("labels must be 1-D with one entry per row");

    drfg::FeatureSet set;
    set.dim = static_cast<std::size_t>(values.shape(1));
    set.class_names = class_names;
    const std::size_t n = static_cast<std::size_t>(values.shape(0));
    set.values.assign(values.data(), values.data() + n * set.dim);
    set.labels.assign(labels.data(), labels.data() + n);
    for (std::size_t i = 0; i < n; ++i) set.sample_ids.push_back(std::to_string(i));
    set.validate();
    return set;
}

py::dict metrics_dict(const drfg::MetricsRecord& r) {
    py::dict d;
    d["accuracy"] = r.accuracy;
    d["precision"] = r.precision;
    d["recall"] = r.recall;
    d["f1"] = r.f1;
    return d;
}

py::dict five_number_dict(const drfg::FiveNumber& f) {
    py::dict d;
    d["mean"] = f.mean;
    d["min"] = f.min;
    d["q1"] = f.q1;
    d["median"] = f.median;
    d["q3"] = f.q3;
    d["max"] = f.max;
    return d;
}

py::dict report_dict(const drfg::ExperimentReport& report) {
    py::dict d;
    d["completed_trials"] = report.completed_trials;
    d["failed_trials"] = report.failed_trials;
    d["classes"] = report.class_names;
    d["trials_csv"] = report.trials_csv.string();
    d["aggregate_json"] = report.aggregate_json.string();
    py::dict aggs;
    for (const auto& [name, agg] : report.aggregates) {
        py::dict a;
        a["accuracy"] = five_number_dict(agg.accuracy);
        a["precision"] = five_number_dict(agg.precision);
        a["recall"] = five_number_dict(agg.recall);
        a["f1"] = five_number_dict(agg.f1);
        a["n_trials"] = agg.n_trials;
        aggs[name.c_str()] = a;
    }
    d["aggregates"] = aggs;
    return d;
}

drfg::TrainConfig train_config(std::size_t batch_size, std::size_t epochs, const std::string& loss,
                               std::uint64_t shuffle_seed, double learning_rate) {
    drfg::TrainConfig cfg;
    cfg.batch_size = batch_size;
    cfg.epochs = epochs;
    if (loss == "mse")
        cfg.loss = drfg::Loss::mse;
    else if (loss == "cce")
        cfg.loss = drfg::Loss::categorical_cross_entropy;
    else
        throw drfg::ConfigError("loss must be 'mse' or 'cce'");
    cfg.shuffle_seed = shuffle_seed;
    cfg.learning_rate = learning_rate;
    return cfg;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "quadrant-sliced transfer-learning features, autoencoder latents, shallow classifiers";
    m.attr("__version__") = drfg::kVersion;

    py::register_exception<drfg::Error>(m, "DrfgError");

    // --- nn core -----------------------------------------------------------
    m.def("relu", [](const DArray& x) { return from_vec(drfg::relu(to_vec(x))); }, py::arg("x"));
    m.def("softmax", [](const DArray& x) { return from_vec(drfg::softmax(to_vec(x))); }, py::arg("x"));
    m.def("mse_loss", [](const DArray& x, const DArray& x_hat) { return drfg::mse_loss(to_vec(x), to_vec(x_hat)); },
          py::arg("x"), py::arg("x_hat"));
    m.def("cce_loss", [](const DArray& p, const DArray& y) { return drfg::cce_loss(to_vec(p), to_vec(y)); },
          py::arg("predicted"), py::arg("one_hot_target"));

    py::class_<drfg::DenseNet>(m, "DenseNet")
        .def_property_readonly("input_dim", &drfg::DenseNet::input_dim)
        .def_property_readonly("output_dim", &drfg::DenseNet::output_dim)
        .def_property_readonly("parameter_count", &drfg::DenseNet::parameter_count)
        .def_property_readonly("depth", [](const drfg::DenseNet& n) { return n.layers.size(); });

    m.def(
        "make_dense_net",
        [](std::size_t input_dim, const std::vector<std::pair<std::size_t, std::string>>& layers,
           std::uint64_t seed) {
            std::vector<drfg::LayerSpec> specs;
            for (const auto& [out, act] : layers) specs.push_back({out, drfg::activation_from_string(act)});
            return drfg::make_dense_net(input_dim, specs, seed);
        },
        py::arg("input_dim"), py::arg("layers"), py::arg("seed") = 0);

    m.def("forward",
          [](const drfg::DenseNet& net, const DArray& x) { return from_vec(drfg::forward(net, to_vec(x)).output()); },
          py::arg("net"), py::arg("x"));

    m.def(
        "fit",
        [](drfg::DenseNet& net, const DArray& inputs, const DArray& targets, std::size_t batch_size,
           std::size_t epochs, const std::string& loss, std::uint64_t shuffle_seed, double learning_rate) {
            return drfg::fit(net, to_matrix(inputs), to_matrix(targets),
                             train_config(batch_size, epochs, loss, shuffle_seed, learning_rate));
        },
        py::arg("net"), py::arg("inputs"), py::arg("targets"), py::arg("batch_size") = 32, py::arg("epochs") = 40,
        py::arg("loss") = "mse", py::arg("shuffle_seed") = 0, py::arg("learning_rate") = 1e-3);

    m.def("save_checkpoint", &drfg::save_checkpoint, py::arg("net"), py::arg("path"));
    m.def("load_checkpoint", &drfg::load_checkpoint, py::arg("path"));

    // --- imaging -----------------------------------------------------------
    m.def(
        "load_and_resize",
        [](const std::filesystem::path& path, std::size_t size) { return from_image(drfg::load_and_resize(path, size)); },
        py::arg("path"), py::arg("size") = drfg::kCanvasSize);
    m.def("slice_quadrants", [](const FArray& img) {
        const drfg::QuadrantSet set = drfg::slice_quadrants(to_image(img));
        py::list out;
        for (const auto& q : set.quadrants) out.append(from_image(q));
        return out;
    });
    m.def(
        "preprocess",
        [](const FArray& quadrant, const std::string& mode) {
            return from_image(drfg::preprocess(to_image(quadrant), drfg::preprocess_mode_from_string(mode)));
        },
        py::arg("quadrant"), py::arg("mode"));
    m.def("write_png", [](const FArray& img, const std::filesystem::path& path) { drfg::write_png(to_image(img), path); },
          py::arg("image"), py::arg("path"));

    // --- backbones / features ----------------------------------------------
    m.def("global_average_pool", [](const FArray& map) {
        if (map.ndim() != 3 || map.shape(0) != map.shape(1)) throw drfg::ShapeError("expected an SxSxC array");
        drfg::FeatureMap fm(static_cast<std::size_t>(map.shape(0)), static_cast<std::size_t>(map.shape(2)));
        std::copy(map.data(), map.data() + fm.data.size(), fm.data.begin());
        const auto pooled = drfg::global_average_pool(fm);
        py::array_t<float> out(static_cast<py::ssize_t>(pooled.size()));
        std::copy(pooled.begin(), pooled.end(), out.mutable_data());
        return out;
    });

    py::class_<drfg::Standardizer>(m, "Standardizer")
        .def_property_readonly("means", [](const drfg::Standardizer& s) { return from_vec(s.means); })
        .def_property_readonly("deviations", [](const drfg::Standardizer& s) { return from_vec(s.deviations); })
        .def_readonly("epsilon", &drfg::Standardizer::epsilon);

    m.def("fit_standardizer", [](const FArray& values) {
        if (values.ndim() != 2) throw drfg::ShapeError("expected a 2-D array");
        const std::size_t dim = static_cast<std::size_t>(values.shape(1));
        std::span<const float> buf(values.data(), static_cast<std::size_t>(values.size()));
        return drfg::fit_standardizer(buf, dim);
    });
    m.def("apply_standardizer", [](const drfg::Standardizer& s, const FArray& values) {
        if (values.ndim() != 2) throw drfg::ShapeError("expected a 2-D array");
        const auto n = values.shape(0);
        const auto dim = values.shape(1);
        py::array_t<float> out({n, dim});
        for (py::ssize_t i = 0; i < n; ++i) {
            const auto z = drfg::apply_standardizer(
                s, std::span<const float>(values.data() + i * dim, static_cast<std::size_t>(dim)));
            std::copy(z.begin(), z.end(), out.mutable_data() + i * dim);
        }
        return out;
    });

    m.def("write_stub_backbone", &drfg::write_stub_backbone, py::arg("path"), py::arg("spatial"), py::arg("channels"),
          py::arg("kind"), py::arg("value") = 0.0, py::arg("seed") = 0);

    m.def("save_feature_store",
          [](const std::filesystem::path& path, const FArray& values, const IArray& labels,
             const std::vector<std::string>& class_names) {
              drfg::save_feature_store(to_feature_set(values, labels, class_names), path);
          },
          py::arg("path"), py::arg("values"), py::arg("labels"), py::arg("class_names"));
    m.def("load_feature_store", [](const std::filesystem::path& path) {
        const drfg::FeatureSet set = drfg::load_feature_store(path);
        py::dict d;
        py::array_t<float> values({static_cast<py::ssize_t>(set.size()), static_cast<py::ssize_t>(set.dim)});
        std::copy(set.values.begin(), set.values.end(), values.mutable_data());
        py::array_t<int> labels(static_cast<py::ssize_t>(set.size()));
        std::copy(set.labels.begin(), set.labels.end(), labels.mutable_data());
        d["values"] = values;
        d["labels"] = labels;
        d["classes"] = set.class_names;
        d["sample_ids"] = set.sample_ids;
        return d;
    });

    // --- autoencoder ---------------------------------------------------------
    m.def(
        "build_autoencoder",
        [](std::size_t input_dim, std::size_t hidden_dim, std::size_t latent_dim, std::uint64_t seed) {
            return drfg::build_autoencoder({input_dim, hidden_dim, latent_dim}, seed);
        },
        py::arg("input_dim"), py::arg("hidden_dim"), py::arg("latent_dim"), py::arg("seed") = 0);

    m.def(
        "train_autoencoder",
        [](drfg::DenseNet& net, const FArray& features, const IArray& labels,
           const std::vector<std::string>& class_names, std::size_t batch_size, std::size_t epochs,
           std::uint64_t shuffle_seed, double learning_rate) {
            return drfg::train_autoencoder(net, to_feature_set(features, labels, class_names),
                                           train_config(batch_size, epochs, "mse", shuffle_seed, learning_rate));
        },
        py::arg("net"), py::arg("features"), py::arg("labels"), py::arg("class_names"), py::arg("batch_size") = 32,
        py::arg("epochs") = 40, py::arg("shuffle_seed") = 0, py::arg("learning_rate") = 1e-3);

    m.def("encode", [](const drfg::DenseNet& net, const DArray& x) {
        return from_vec(drfg::encode(net, std::span<const double>(to_vec(x))));
    });
    m.def("encode_matrix", [](const drfg::DenseNet& net, const DArray& X) {
        const drfg::Matrix input = to_matrix(X);
        const std::size_t latent_dim = net.layers[drfg::kEncoderDepth - 1].out_dim();
        drfg::Matrix out(input.rows, latent_dim);
        for (std::size_t i = 0; i < input.rows; ++i) {
            const drfg::Vec z = drfg::encode(net, input.row(i));
            std::copy(z.begin(), z.end(), out.row(i).begin());
        }
        return from_matrix(out);
    });

    // --- classifiers ---------------------------------------------------------
    m.def(
        "train_perceptron",
        [](const std::string& variant, const FArray& latents, const IArray& labels, std::size_t n_classes,
           std::size_t hidden_dim, std::size_t batch_size, std::size_t epochs, std::uint64_t seed,
           double learning_rate) {
            drfg::PerceptronConfig pc;
            pc.variant = variant == "mlp" ? drfg::PerceptronVariant::mlp : drfg::PerceptronVariant::slp;
            pc.hidden_dim = hidden_dim;
            pc.n_classes = n_classes;
            std::vector<std::string> class_names;
            for (std::size_t c = 0; c < n_classes; ++c) class_names.push_back("class" + std::to_string(c));
            return drfg::train_perceptron(pc, to_feature_set(latents, labels, class_names),
                                          train_config(batch_size, epochs, "cce", seed, learning_rate), seed);
        },
        py::arg("variant"), py::arg("latents"), py::arg("labels"), py::arg("n_classes"), py::arg("hidden_dim") = 128,
        py::arg("batch_size") = 32, py::arg("epochs") = 40, py::arg("seed") = 0, py::arg("learning_rate") = 1e-3);

    m.def("predict_perceptron", [](const drfg::DenseNet& net, const FArray& latents) {
        if (latents.ndim() != 2) throw drfg::ShapeError("expected a 2-D array");
        const auto n = latents.shape(0);
        const auto dim = latents.shape(1);
        py::array_t<int> out(n);
        for (py::ssize_t i = 0; i < n; ++i) {
            std::span<const float> row(latents.data() + i * dim, static_cast<std::size_t>(dim));
            out.mutable_data()[i] = drfg::predict_perceptron(net, row).class_index;
        }
        return out;
    });

    py::class_<drfg::SvmModel>(m, "SvmModel")
        .def_property_readonly("gamma", [](const drfg::SvmModel& m_) { return m_.gamma; })
        .def_property_readonly("n_heads", [](const drfg::SvmModel& m_) { return m_.heads.size(); })
        .def_property_readonly("classes", [](const drfg::SvmModel& m_) { return m_.classes; });

    m.def(
        "svm_train",
        [](const DArray& X, const IArray& y, const std::string& kernel, double C, double gamma, double tol,
           std::size_t max_passes, std::uint64_t seed) {
            drfg::SvmConfig cfg;
            cfg.kernel = kernel == "linear" ? drfg::SvmKernel::linear : drfg::SvmKernel::rbf;
            cfg.C = C;
            cfg.gamma = gamma;
            cfg.tol = tol;
            cfg.max_passes = max_passes;
            cfg.seed = seed;
            std::vector<int> labels(y.data(), y.data() + y.shape(0));
            return drfg::svm_train(cfg, to_matrix(X), labels);
        },
        py::arg("X"), py::arg("y"), py::arg("kernel") = "rbf", py::arg("C") = 1.0, py::arg("gamma") = -1.0,
        py::arg("tol") = 1e-3, py::arg("max_passes") = 10, py::arg("seed") = 0);

    m.def("svm_predict", [](const drfg::SvmModel& model, const DArray& X) {
        if (X.ndim() != 2) throw drfg::ShapeError("expected a 2-D array");
        const auto n = X.shape(0);
        const auto dim = X.shape(1);
        py::array_t<int> out(n);
        for (py::ssize_t i = 0; i < n; ++i) {
            std::vector<float> row(dim);
            for (py::ssize_t d = 0; d < dim; ++d) row[static_cast<std::size_t>(d)] = static_cast<float>(X.data()[i * dim + d]);
            out.mutable_data()[i] = drfg::svm_predict(model, row);
        }
        return out;
    });

    // --- t-SNE ---------------------------------------------------------------
    m.def(
        "compute_p_matrix",
        [](const DArray& X, double perplexity) {
            const drfg::PMatrixResult r = drfg::compute_p_matrix(to_matrix(X), perplexity);
            return py::make_tuple(from_matrix(r.p), from_vec(r.bandwidths), r.fallback_rows);
        },
        py::arg("X"), py::arg("perplexity"));

    m.def(
        "tsne_embed",
        [](const DArray& X, double perplexity, std::size_t iterations, double learning_rate, std::uint64_t seed) {
            drfg::TsneConfig cfg;
            cfg.perplexity = perplexity;
            cfg.iterations = iterations;
            cfg.learning_rate = learning_rate;
            cfg.seed = seed;
            const drfg::TsneResult r = drfg::tsne_embed(to_matrix(X), cfg);
            return py::make_tuple(from_matrix(r.embedding.points), from_vec(r.kl_history));
        },
        py::arg("X"), py::arg("perplexity") = 30.0, py::arg("iterations") = 1000, py::arg("learning_rate") = 200.0,
        py::arg("seed") = 0);

    // --- metrics -------------------------------------------------------------
    m.def(
        "confusion_matrix",
        [](const IArray& y_true, const IArray& y_pred, std::size_t k) {
            std::vector<int> t(y_true.data(), y_true.data() + y_true.shape(0));
            std::vector<int> p(y_pred.data(), y_pred.data() + y_pred.shape(0));
            const drfg::ConfusionMatrix cm = drfg::confusion_matrix(t, p, k);
            py::array_t<std::uint64_t> out({static_cast<py::ssize_t>(k), static_cast<py::ssize_t>(k)});
            std::copy(cm.counts.begin(), cm.counts.end(), out.mutable_data());
            return out;
        },
        py::arg("y_true"), py::arg("y_pred"), py::arg("k"));

    m.def("classification_metrics", [](const py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast>& cm) {
        if (cm.ndim() != 2 || cm.shape(0) != cm.shape(1)) throw drfg::ShapeError("expected a square matrix");
        drfg::ConfusionMatrix c(static_cast<std::size_t>(cm.shape(0)));
        std::copy(cm.data(), cm.data() + c.counts.size(), c.counts.begin());
        return metrics_dict(drfg::classification_metrics(c));
    });

    m.def("aggregate_trials", [](const std::vector<std::tuple<double, double, double, double>>& records) {
        std::vector<drfg::MetricsRecord> rs;
        for (const auto& [a, p, r, f] : records) rs.push_back({a, p, r, f});
        const drfg::TrialAggregate agg = drfg::aggregate_trials(rs);
        py::dict d;
        d["accuracy"] = five_number_dict(agg.accuracy);
        d["precision"] = five_number_dict(agg.precision);
        d["recall"] = five_number_dict(agg.recall);
        d["f1"] = five_number_dict(agg.f1);
        d["n_trials"] = agg.n_trials;
        return d;
    });

    // --- harness ---------------------------------------------------------------
    m.def("run_experiment", [](const std::filesystem::path& config_path) {
        return report_dict(drfg::run_experiment(drfg::load_experiment_config(config_path)));
    });
    m.def("run_benchmark", [](const std::filesystem::path& config_path, const std::string& backbone) {
        return report_dict(drfg::run_benchmark(drfg::load_experiment_config(config_path), backbone));
    });
}
