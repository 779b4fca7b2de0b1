// ONNX Runtime backend for serialized backbone graphs. Compiled only when
// the build enables DRFG_WITH_ONNXRUNTIME and the library is available.
#ifdef DRFG_WITH_ONNXRUNTIME

#include "drfg/backbone.hpp"

#include <onnxruntime_cxx_api.h>

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace drfg {

namespace {

class OnnxBackbone final : public BackboneRuntime {
  public:
    explicit OnnxBackbone(const std::filesystem::path& path)
        : env_(ORT_LOGGING_LEVEL_ERROR, "drfg"), session_(nullptr) {
        Ort::SessionOptions options;
        options.SetIntraOpNumThreads(1);
        try {
            session_ = Ort::Session(env_, path.string().c_str(), options);
        } catch (const Ort::Exception& e) {
            throw IoError("cannot load ONNX graph " + path.string() + ": " + e.what());
        }
        if (session_.GetInputCount() != 1 || session_.GetOutputCount() != 1)
            throw ConfigError("backbone graph must have exactly one input and one output: " + path.string());

        Ort::AllocatorWithDefaultOptions alloc;
        input_name_ = session_.GetInputNameAllocated(0, alloc).get();
        output_name_ = session_.GetOutputNameAllocated(0, alloc).get();

        const auto in_info = session_.GetInputTypeInfo(0).GetTensorTypeAndShapeInfo();
        const auto in_shape = in_info.GetShape();
        if (in_shape.size() != 4)
            throw ConfigError("backbone graph input must be rank-4: " + path.string());
        input_channels_first_ = (in_shape[1] == 3);

        const auto out_info = session_.GetOutputTypeInfo(0).GetTensorTypeAndShapeInfo();
        const auto out_shape = out_info.GetShape();
        if (out_shape.size() != 4)
            throw ConfigError("backbone graph output must be a rank-4 feature map: " + path.string());
        // Prefer the static channel dim; dynamic spatial dims are resolved per run.
        output_channels_first_ = (out_shape[1] > 0 && (out_shape[3] <= 0 || out_shape[1] < out_shape[3]));
        channels_ = static_cast<std::size_t>(output_channels_first_ ? out_shape[1] : out_shape[3]);
    }

    FeatureMap run(const ImageTensor& prepared) const override {
        const std::size_t size = prepared.height;
        if (prepared.width != size || prepared.channels != 3)
            throw ShapeError("backbone input must be square with 3 channels");

        std::vector<float> input(prepared.data.size());
        std::array<std::int64_t, 4> dims;
        if (input_channels_first_) {
            dims = {1, 3, static_cast<std::int64_t>(size), static_cast<std::int64_t>(size)};
            for (std::size_t ch = 0; ch < 3; ++ch)
                for (std::size_t r = 0; r < size; ++r)
                    for (std::size_t c = 0; c < size; ++c)
                        input[(ch * size + r) * size + c] = prepared.at(r, c, ch);
        } else {
            dims = {1, static_cast<std::int64_t>(size), static_cast<std::int64_t>(size), 3};
            input = prepared.data;
        }

        Ort::MemoryInfo mem = Ort::MemoryInfo::CreateCpu(OrtArenaAllocator, OrtMemTypeDefault);
        Ort::Value tensor = Ort::Value::CreateTensor<float>(mem, input.data(), input.size(), dims.data(), dims.size());

        const char* in_names[] = {input_name_.c_str()};
        const char* out_names[] = {output_name_.c_str()};
        auto outputs = session_.Run(Ort::RunOptions{nullptr}, in_names, &tensor, 1, out_names, 1);

        const auto info = outputs[0].GetTensorTypeAndShapeInfo();
        const auto shape = info.GetShape();
        if (shape.size() != 4)
            throw ShapeError("backbone graph returned a rank-" + std::to_string(shape.size()) + " tensor");
        const float* data = outputs[0].GetTensorData<float>();

        std::size_t spatial, channels;
        if (output_channels_first_) {
            channels = static_cast<std::size_t>(shape[1]);
            spatial = static_cast<std::size_t>(shape[2]);
        } else {
            spatial = static_cast<std::size_t>(shape[1]);
            channels = static_cast<std::size_t>(shape[3]);
        }

        FeatureMap map(spatial, channels);
        if (output_channels_first_) {
            for (std::size_t ch = 0; ch < channels; ++ch)
                for (std::size_t r = 0; r < spatial; ++r)
                    for (std::size_t c = 0; c < spatial; ++c)
                        map.at(r, c, ch) = data[(ch * spatial + r) * spatial + c];
        } else {
            std::copy(data, data + map.data.size(), map.data.begin());
        }
        return map;
    }

    std::size_t output_channels() const override { return channels_; }

  private:
    Ort::Env env_;
    // Run() is non-const in the ORT API but documented thread-safe; the
    // runtime contract (immutable after load) still holds.
    mutable Ort::Session session_;
    std::string input_name_, output_name_;
    bool input_channels_first_ = true;
    bool output_channels_first_ = true;
    std::size_t channels_ = 0;
};

} // namespace

std::unique_ptr<BackboneRuntime> load_onnx_backbone(const std::filesystem::path& path) {
    return std::make_unique<OnnxBackbone>(path);
}

} // namespace drfg

#endif // DRFG_WITH_ONNXRUNTIME
