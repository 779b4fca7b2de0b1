#include "drfg/backbone.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace drfg {

namespace {

void check_prepared_input(const ImageTensor& prepared) {
    if (prepared.height != kQuadrantSize || prepared.width != kQuadrantSize || prepared.channels != 3)
        throw ShapeError("backbone input must be 224x224x3, got " + std::to_string(prepared.height) + "x" +
                         std::to_string(prepared.width) + "x" + std::to_string(prepared.channels));
}

class ConstantBackbone final : public BackboneRuntime {
  public:
    ConstantBackbone(std::size_t spatial, std::size_t channels, float value)
        : spatial_(spatial), channels_(channels), value_(value) {}

    FeatureMap run(const ImageTensor& prepared) const override {
        check_prepared_input(prepared);
        FeatureMap map(spatial_, channels_);
        std::fill(map.data.begin(), map.data.end(), value_);
        return map;
    }

    std::size_t output_channels() const override { return channels_; }

  private:
    std::size_t spatial_, channels_;
    float value_;
};

// Output channel c at grid cell (i,j) is a fixed random mix of that cell's
// per-channel block means. Cheap, input-dependent, seed-reproducible.
class BlockMixBackbone final : public BackboneRuntime {
  public:
    BlockMixBackbone(std::size_t spatial, std::size_t channels, std::uint64_t seed)
        : spatial_(spatial), channels_(channels) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> coeff(-1.0, 1.0);
        mix_.resize(channels_ * 3);
        offsets_.resize(channels_);
        for (double& m : mix_) m = coeff(rng);
        for (double& o : offsets_) o = 0.5 * coeff(rng);
    }

    FeatureMap run(const ImageTensor& prepared) const override {
        check_prepared_input(prepared);
        const std::size_t size = prepared.height;

        // Block means per grid cell and input channel.
        std::vector<double> block(spatial_ * spatial_ * 3, 0.0);
        std::vector<double> counts(spatial_ * spatial_, 0.0);
        for (std::size_t r = 0; r < size; ++r) {
            const std::size_t br = r * spatial_ / size;
            for (std::size_t c = 0; c < size; ++c) {
                const std::size_t bc = c * spatial_ / size;
                const std::size_t cell = br * spatial_ + bc;
                counts[cell] += 1.0;
                for (std::size_t ch = 0; ch < 3; ++ch) block[cell * 3 + ch] += prepared.at(r, c, ch);
            }
        }
        for (std::size_t cell = 0; cell < counts.size(); ++cell)
            for (std::size_t ch = 0; ch < 3; ++ch) block[cell * 3 + ch] /= counts[cell];

        FeatureMap map(spatial_, channels_);
        for (std::size_t i = 0; i < spatial_; ++i)
            for (std::size_t j = 0; j < spatial_; ++j) {
                const std::size_t cell = i * spatial_ + j;
                for (std::size_t c = 0; c < channels_; ++c) {
                    double acc = offsets_[c];
                    for (std::size_t ch = 0; ch < 3; ++ch) acc += mix_[c * 3 + ch] * block[cell * 3 + ch];
                    map.at(i, j, c) = static_cast<float>(acc);
                }
            }
        return map;
    }

    std::size_t output_channels() const override { return channels_; }

  private:
    std::size_t spatial_, channels_;
    std::vector<double> mix_;     // channels x 3
    std::vector<double> offsets_; // channels
};

std::unique_ptr<BackboneRuntime> load_stub(const nlohmann::json& doc, const std::filesystem::path& path) {
    if (doc.value("format", "") != "drfg-stub-backbone")
        throw IoError("not a drfg stub backbone graph: " + path.string());
    const auto spatial = doc.at("spatial").get<std::size_t>();
    const auto channels = doc.at("channels").get<std::size_t>();
    if (spatial == 0 || channels == 0)
        throw ConfigError("stub backbone needs positive spatial and channel dims: " + path.string());
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "constant")
        return std::make_unique<ConstantBackbone>(spatial, channels, doc.value("value", 0.0));
    if (kind == "block_mix")
        return std::make_unique<BlockMixBackbone>(spatial, channels, doc.value("seed", std::uint64_t{0}));
    throw ConfigError("unknown stub backbone kind '" + kind + "' in " + path.string());
}

} // namespace

#ifdef DRFG_WITH_ONNXRUNTIME
std::unique_ptr<BackboneRuntime> load_onnx_backbone(const std::filesystem::path& path); // backbone_onnx.cpp
#endif

std::unique_ptr<BackboneRuntime> load_backbone(const BackboneSpec& spec) {
    std::ifstream is(spec.graph_path, std::ios::binary);
    if (!is) throw IoError("cannot open backbone graph for '" + spec.name + "': " + spec.graph_path.string());

    std::unique_ptr<BackboneRuntime> runtime;
    const int first = is.peek();
    if (first == '{') {
        nlohmann::json doc;
        try {
            is >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw IoError("corrupt stub backbone graph " + spec.graph_path.string() + ": " + e.what());
        }
        runtime = load_stub(doc, spec.graph_path);
    } else {
#ifdef DRFG_WITH_ONNXRUNTIME
        runtime = load_onnx_backbone(spec.graph_path);
#else
        throw ConfigError("backbone '" + spec.name + "' points at a serialized graph (" +
                          spec.graph_path.string() +
                          ") but this build has no ONNX Runtime support; rebuild with -DDRFG_WITH_ONNXRUNTIME=ON");
#endif
    }

    if (runtime->output_channels() != spec.output_channels)
        throw ConfigError("backbone '" + spec.name + "' produces " + std::to_string(runtime->output_channels()) +
                          " channels but the registry declares " + std::to_string(spec.output_channels));
    return runtime;
}

void write_stub_backbone(const std::filesystem::path& path, std::size_t spatial, std::size_t channels,
                         const std::string& kind, double value, std::uint64_t seed) {
    nlohmann::json doc;
    doc["format"] = "drfg-stub-backbone";
    doc["spatial"] = spatial;
    doc["channels"] = channels;
    doc["kind"] = kind;
    if (kind == "constant") doc["value"] = value;
    if (kind == "block_mix") doc["seed"] = seed;
    std::ofstream os(path);
    if (!os) throw IoError("cannot write stub backbone graph: " + path.string());
    os << doc.dump(2) << "\n";
}

void validate_assignment(const QuadrantAssignment& assignment, std::span<const BackboneSpec> registry) {
    if (assignment.empty()) throw ConfigError("quadrant assignment is empty");

    std::set<std::string> available;
    for (const auto& spec : registry) {
        if (!available.insert(spec.name).second)
            throw ConfigError("duplicate backbone in registry: " + spec.name);
    }

    std::set<std::size_t> quadrants;
    std::set<std::string> used;
    for (const auto& pair : assignment) {
        if (pair.quadrant >= 4)
            throw ConfigError("quadrant index out of range: " + std::to_string(pair.quadrant));
        if (!quadrants.insert(pair.quadrant).second)
            throw ConfigError("quadrant assigned twice: " + std::to_string(pair.quadrant));
        for (const auto& name : {pair.backbone_a, pair.backbone_b}) {
            if (!available.count(name)) throw ConfigError("assignment names unknown backbone: " + name);
            if (!used.insert(name).second) throw ConfigError("backbone assigned twice: " + name);
        }
    }
    if (used.size() != registry.size())
        throw ConfigError("assignment covers " + std::to_string(used.size()) + " of " +
                          std::to_string(registry.size()) + " registry backbones");
}

std::vector<BackboneSpec> default_registry(const std::filesystem::path& graph_dir) {
    auto entry = [&](const char* name, std::size_t channels, PreprocessMode mode) {
        return BackboneSpec{name, graph_dir / (std::string(name) + ".onnx"), channels, mode};
    };
    return {
        entry("vgg19", 512, PreprocessMode::mean_subtract_bgr),
        entry("efficientnet_b0", 1280, PreprocessMode::identity),
        entry("resnet50", 2048, PreprocessMode::mean_subtract_bgr),
        entry("vgg16", 512, PreprocessMode::mean_subtract_bgr),
        entry("densenet121", 1024, PreprocessMode::scale_normalize),
        entry("mobilenet", 1024, PreprocessMode::scale_symmetric),
        entry("inception_v3", 2048, PreprocessMode::scale_symmetric),
        entry("inception_resnet_v2", 1536, PreprocessMode::scale_symmetric),
    };
}

QuadrantAssignment default_assignment() {
    return {
        {0, "vgg19", "efficientnet_b0"},
        {1, "resnet50", "vgg16"},
        {2, "densenet121", "mobilenet"},
        {3, "inception_v3", "inception_resnet_v2"},
    };
}

std::vector<float> global_average_pool(const FeatureMap& map) {
    if (map.spatial == 0 || map.channels == 0)
        throw ShapeError("global_average_pool on empty feature map (spatial=" + std::to_string(map.spatial) +
                         ", channels=" + std::to_string(map.channels) + ")");
    std::vector<double> acc(map.channels, 0.0);
    const std::size_t cells = map.spatial * map.spatial;
    for (std::size_t cell = 0; cell < cells; ++cell)
        for (std::size_t c = 0; c < map.channels; ++c) acc[c] += map.data[cell * map.channels + c];

    std::vector<float> out(map.channels);
    for (std::size_t c = 0; c < map.channels; ++c)
        out[c] = static_cast<float>(acc[c] / static_cast<double>(cells));
    return out;
}

FeatureExtractor::FeatureExtractor(std::vector<BackboneSpec> registry, QuadrantAssignment assignment)
    : registry_(std::move(registry)), assignment_(std::move(assignment)) {
    validate_assignment(assignment_, registry_);
    runtimes_.reserve(registry_.size());
    for (const auto& spec : registry_) runtimes_.push_back(load_backbone(spec));
    for (const auto& pair : assignment_) {
        std::size_t ia = 0, ib = 0;
        runtime_for(pair.backbone_a, ia);
        runtime_for(pair.backbone_b, ib);
        feature_dim_ += registry_[ia].output_channels + registry_[ib].output_channels;
    }
}

const BackboneRuntime& FeatureExtractor::runtime_for(const std::string& name, std::size_t& spec_index) const {
    for (std::size_t i = 0; i < registry_.size(); ++i) {
        if (registry_[i].name == name) {
            spec_index = i;
            return *runtimes_[i];
        }
    }
    throw ConfigError("backbone not in registry: " + name);
}

std::vector<float> FeatureExtractor::extract(const ImageTensor& canvas) const {
    const QuadrantSet quads = slice_quadrants(canvas);

    std::vector<float> out;
    out.reserve(feature_dim_);
    for (const auto& pair : assignment_) {
        for (const auto& name : {pair.backbone_a, pair.backbone_b}) {
            std::size_t idx = 0;
            const BackboneRuntime& runtime = runtime_for(name, idx);
            try {
                const ImageTensor prepared = preprocess(quads.quadrants[pair.quadrant], registry_[idx].preprocess);
                const auto pooled = global_average_pool(runtime.run(prepared));
                out.insert(out.end(), pooled.begin(), pooled.end());
            } catch (const Error& e) {
                throw Error("backbone '" + name + "': " + e.what());
            }
        }
    }
    return out;
}

std::vector<float> FeatureExtractor::extract_single(const BackboneSpec& spec, const BackboneRuntime& runtime,
                                                    const ImageTensor& image224) {
    try {
        const ImageTensor prepared = preprocess(image224, spec.preprocess);
        return global_average_pool(runtime.run(prepared));
    } catch (const Error& e) {
        throw Error("backbone '" + spec.name + "': " + e.what());
    }
}

std::vector<float> extract_features(const ImageTensor& canvas, const QuadrantAssignment& assignment,
                                    std::span<const BackboneSpec> registry) {
    FeatureExtractor extractor({registry.begin(), registry.end()}, assignment);
    return extractor.extract(canvas);
}

Standardizer fit_standardizer(std::span<const float> values, std::size_t dim) {
    if (dim == 0 || values.empty()) throw InvalidInput("fit_standardizer: empty training set");
    if (values.size() % dim != 0)
        throw ShapeError("fit_standardizer: buffer size " + std::to_string(values.size()) +
                         " is not a multiple of dim " + std::to_string(dim));
    const std::size_t n = values.size() / dim;

    Standardizer s;
    s.means.assign(dim, 0.0);
    s.deviations.assign(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < dim; ++d) s.means[d] += values[i * dim + d];
    for (double& m : s.means) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < dim; ++d) {
            const double delta = values[i * dim + d] - s.means[d];
            s.deviations[d] += delta * delta;
        }
    for (double& v : s.deviations) v = std::sqrt(v / static_cast<double>(n));
    return s;
}

Standardizer fit_standardizer(const FeatureSet& train) {
    return fit_standardizer(std::span<const float>(train.values), train.dim);
}

std::vector<float> apply_standardizer(const Standardizer& s, std::span<const float> v) {
    if (v.size() != s.dim())
        throw ShapeError("apply_standardizer: vector length " + std::to_string(v.size()) +
                         " does not match standardizer dim " + std::to_string(s.dim()));
    std::vector<float> out(v.size());
    for (std::size_t d = 0; d < v.size(); ++d)
        out[d] = static_cast<float>((v[d] - s.means[d]) / (s.deviations[d] + s.epsilon));
    return out;
}

FeatureSet apply_standardizer(const Standardizer& s, const FeatureSet& set) {
    FeatureSet out = set;
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto row = out.sample(i);
        const auto z = apply_standardizer(s, row);
        std::copy(z.begin(), z.end(), row.begin());
    }
    return out;
}

} // namespace drfg
