#pragma once

#include "drfg/feature_store.hpp"
#include "drfg/image.hpp"

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace drfg {

// Spatial feature map produced by a backbone: S x S x C, row-major HWC.
struct FeatureMap {
    std::size_t spatial = 0;
    std::size_t channels = 0;
    std::vector<float> data;

    FeatureMap() = default;
    FeatureMap(std::size_t s, std::size_t c) : spatial(s), channels(c), data(s * s * c, 0.0f) {}

    float& at(std::size_t r, std::size_t c, std::size_t ch) { return data[(r * spatial + c) * channels + ch]; }
    float at(std::size_t r, std::size_t c, std::size_t ch) const { return data[(r * spatial + c) * channels + ch]; }
};

struct BackboneSpec {
    std::string name;
    std::filesystem::path graph_path; // ONNX graph or drfg stub-backbone JSON
    std::size_t output_channels = 0;
    PreprocessMode preprocess = PreprocessMode::identity;
};

// A loaded inference graph. Handles are immutable after load and safe to
// run concurrently.
class BackboneRuntime {
  public:
    virtual ~BackboneRuntime() = default;
    virtual FeatureMap run(const ImageTensor& prepared) const = 0;
    virtual std::size_t output_channels() const = 0;
};

// Dispatches on file content: JSON documents load the deterministic stub
// backend; .onnx graphs load the ONNX Runtime backend when the build has
// it (config error otherwise). Validates channel count against the registry entry.
std::unique_ptr<BackboneRuntime> load_backbone(const BackboneSpec& spec);

// Stub graph file:
//   {"format": "drfg-stub-backbone", "spatial": S, "channels": C,
//    "kind": "constant"|"block_mix", "value": v, "seed": n}
// constant ignores its input; block_mix mixes per-block channel means of
// the input through a seeded random projection, so distinct images get
// distinct features while runs stay bit-reproducible.
void write_stub_backbone(const std::filesystem::path& path, std::size_t spatial, std::size_t channels,
                         const std::string& kind, double value = 0.0, std::uint64_t seed = 0);

struct QuadrantPair {
    std::size_t quadrant = 0;
    std::string backbone_a;
    std::string backbone_b;
};
using QuadrantAssignment = std::vector<QuadrantPair>;

// Every registry backbone appears exactly once and quadrant indices are
// distinct and in range.
void validate_assignment(const QuadrantAssignment& assignment, std::span<const BackboneSpec> registry);

// The eight-backbone registry with its published channel widths; graph
// paths are resolved as <graph_dir>/<name>.onnx.
std::vector<BackboneSpec> default_registry(const std::filesystem::path& graph_dir);
QuadrantAssignment default_assignment();

std::vector<float> global_average_pool(const FeatureMap& map);

// Loads every backbone in the registry once and runs the quadrant pipeline:
// slice, preprocess per backbone, run both pair members on their quadrant,
// pool, concatenate in assignment order (A then B).
class FeatureExtractor {
  public:
    FeatureExtractor(std::vector<BackboneSpec> registry, QuadrantAssignment assignment);

    std::size_t feature_dim() const { return feature_dim_; }
    std::vector<float> extract(const ImageTensor& canvas) const;

    // Single-backbone path for benchmark baselines: the full image resized
    // to 224x224, preprocessed and pooled, no slicing.
    static std::vector<float> extract_single(const BackboneSpec& spec, const BackboneRuntime& runtime,
                                             const ImageTensor& image224);

  private:
    std::vector<BackboneSpec> registry_;
    QuadrantAssignment assignment_;
    std::vector<std::unique_ptr<BackboneRuntime>> runtimes_; // parallel to registry_
    std::size_t feature_dim_ = 0;

    const BackboneRuntime& runtime_for(const std::string& name, std::size_t& spec_index) const;
};

// Convenience form matching the one-shot operation contract.
std::vector<float> extract_features(const ImageTensor& canvas, const QuadrantAssignment& assignment,
                                    std::span<const BackboneSpec> registry);

struct Standardizer {
    std::vector<double> means;
    std::vector<double> deviations; // population standard deviation
    double epsilon = 1e-6;

    std::size_t dim() const { return means.size(); }
};

// Per-dimension mean and population standard deviation over the rows of a
// row-major n x dim buffer. Fit on the training split only.
Standardizer fit_standardizer(std::span<const float> values, std::size_t dim);
Standardizer fit_standardizer(const FeatureSet& train);

// out[d] = (v[d] - mean[d]) / (deviation[d] + epsilon)
std::vector<float> apply_standardizer(const Standardizer& s, std::span<const float> v);
FeatureSet apply_standardizer(const Standardizer& s, const FeatureSet& set);

} // namespace drfg
