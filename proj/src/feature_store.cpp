#include "drfg/feature_store.hpp"

#include "drfg/serialize.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace drfg {

namespace {
constexpr char kMagic[4] = {'D', 'R', 'F', 'G'};
constexpr std::uint32_t kVersion = 1;
} // namespace

void FeatureSet::append(const std::string& sample_id, int label, std::span<const float> vector) {
    if (dim == 0) dim = vector.size();
    if (vector.size() != dim)
        throw ShapeError("feature vector length " + std::to_string(vector.size()) + " does not match set dim " +
                         std::to_string(dim));
    if (label < 0 || static_cast<std::size_t>(label) >= class_names.size())
        throw InvalidInput("label " + std::to_string(label) + " out of range for " +
                           std::to_string(class_names.size()) + " classes");
    sample_ids.push_back(sample_id);
    labels.push_back(label);
    values.insert(values.end(), vector.begin(), vector.end());
}

void FeatureSet::validate() const {
    if (labels.size() != sample_ids.size())
        throw InvalidInput("feature set: label/sample_id count mismatch");
    if (values.size() != labels.size() * dim)
        throw InvalidInput("feature set: value buffer size does not match n*dim");
    for (int l : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= class_names.size())
            throw InvalidInput("feature set: label out of range");
    for (float v : values)
        if (!std::isfinite(v)) throw InvalidInput("feature set: non-finite value");
}

void save_feature_store(const FeatureSet& set, const std::filesystem::path& path) {
    set.validate();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open feature store for writing: " + path.string());
    os.write(kMagic, 4);
    write_u32(os, kVersion);
    write_u32(os, static_cast<std::uint32_t>(set.size()));
    write_u32(os, static_cast<std::uint32_t>(set.dim));
    write_u32(os, static_cast<std::uint32_t>(set.class_names.size()));
    for (std::size_t i = 0; i < set.size(); ++i) {
        write_u32(os, static_cast<std::uint32_t>(set.labels[i]));
        write_f32_block(os, set.sample(i));
    }
    if (!os) throw IoError("short write on feature store: " + path.string());

    nlohmann::json sidecar;
    sidecar["classes"] = set.class_names;
    sidecar["sample_ids"] = set.sample_ids;
    std::ofstream js(path.string() + ".json");
    if (!js) throw IoError("cannot open sidecar for writing: " + path.string() + ".json");
    js << sidecar.dump(2) << "\n";
}

FeatureSet load_feature_store(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open feature store: " + path.string());

    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("not a DRFG feature store: " + path.string());
    const std::uint32_t version = read_u32(is);
    if (version != kVersion)
        throw IoError("unsupported feature store version " + std::to_string(version) + " in " + path.string());

    const std::uint32_t n = read_u32(is);
    const std::uint32_t dim = read_u32(is);
    const std::uint32_t n_classes = read_u32(is);

    FeatureSet set;
    set.dim = dim;
    set.labels.reserve(n);
    set.values.reserve(static_cast<std::size_t>(n) * dim);
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t label = read_u32(is);
        if (label >= n_classes)
            throw IoError("label out of range in feature store: " + path.string());
        set.labels.push_back(static_cast<int>(label));
        auto block = read_f32_block(is, dim);
        set.values.insert(set.values.end(), block.begin(), block.end());
    }

    const std::filesystem::path sidecar_path = path.string() + ".json";
    std::ifstream js(sidecar_path);
    if (!js) throw IoError("missing feature store sidecar: " + sidecar_path.string());
    nlohmann::json sidecar;
    try {
        js >> sidecar;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad sidecar " + sidecar_path.string() + ": " + e.what());
    }
    set.class_names = sidecar.at("classes").get<std::vector<std::string>>();
    set.sample_ids = sidecar.at("sample_ids").get<std::vector<std::string>>();
    if (set.class_names.size() != n_classes)
        throw IoError("sidecar class count disagrees with store header: " + path.string());
    if (set.sample_ids.size() != n)
        throw IoError("sidecar sample_id count disagrees with store header: " + path.string());
    set.validate();
    return set;
}

FeatureSet subset(const FeatureSet& set, std::span<const std::size_t> indices) {
    FeatureSet out;
    out.dim = set.dim;
    out.class_names = set.class_names;
    out.labels.reserve(indices.size());
    out.values.reserve(indices.size() * set.dim);
    for (std::size_t idx : indices) {
        if (idx >= set.size()) throw InvalidInput("subset index out of range: " + std::to_string(idx));
        out.sample_ids.push_back(set.sample_ids[idx]);
        out.labels.push_back(set.labels[idx]);
        auto row = set.sample(idx);
        out.values.insert(out.values.end(), row.begin(), row.end());
    }
    return out;
}

FeatureSet filter_classes(const FeatureSet& set, std::span<const std::string> keep) {
    std::vector<int> remap(set.class_names.size(), -1);
    for (std::size_t k = 0; k < keep.size(); ++k) {
        auto it = std::find(set.class_names.begin(), set.class_names.end(), keep[k]);
        if (it == set.class_names.end())
            throw InvalidInput("class not present in feature set: " + keep[k]);
        remap[static_cast<std::size_t>(it - set.class_names.begin())] = static_cast<int>(k);
    }

    FeatureSet out;
    out.dim = set.dim;
    out.class_names.assign(keep.begin(), keep.end());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const int new_label = remap[static_cast<std::size_t>(set.labels[i])];
        if (new_label < 0) continue;
        out.sample_ids.push_back(set.sample_ids[i]);
        out.labels.push_back(new_label);
        auto row = set.sample(i);
        out.values.insert(out.values.end(), row.begin(), row.end());
    }
    return out;
}

} // namespace drfg
