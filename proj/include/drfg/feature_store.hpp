#pragma once

#include "drfg/errors.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace drfg {

// An in-memory sample set: one feature vector + class label per sample.
// Doubles as the container for raw features, standardized features, and
// autoencoder latents (only `dim` changes).
struct FeatureSet {
    std::size_t dim = 0;
    std::vector<std::string> class_names;
    std::vector<std::string> sample_ids;
    std::vector<int> labels;
    std::vector<float> values; // n x dim, row-major

    std::size_t size() const { return labels.size(); }

    std::span<const float> sample(std::size_t i) const { return {values.data() + i * dim, dim}; }
    std::span<float> sample(std::size_t i) { return {values.data() + i * dim, dim}; }

    void append(const std::string& sample_id, int label, std::span<const float> vector);
    void validate() const;
};

// Binary feature store, little-endian:
//   magic "DRFG", u32 version=1, u32 n_samples, u32 dim, u32 n_classes,
//   then per sample: u32 label index, dim x f32.
// A JSON sidecar at <path>.json carries class names and sample ids in order.
void save_feature_store(const FeatureSet& set, const std::filesystem::path& path);
FeatureSet load_feature_store(const std::filesystem::path& path);

// Row subset in index order; class names are preserved.
FeatureSet subset(const FeatureSet& set, std::span<const std::size_t> indices);

// Keeps only the named classes and relabels to their order in `keep`.
FeatureSet filter_classes(const FeatureSet& set, std::span<const std::string> keep);

} // namespace drfg
