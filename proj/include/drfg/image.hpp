#pragma once

#include "drfg/errors.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace drfg {

inline constexpr std::size_t kCanvasSize = 448;   // canonical working resolution
inline constexpr std::size_t kQuadrantSize = 224; // backbone input resolution

// Row-major HWC tensor, red-green-blue channel order, values in [0, 255]
// for decoded images. preprocess() reuses the type for prepared tensors
// whose values leave that range.
struct ImageTensor {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 3;
    std::vector<float> data;

    ImageTensor() = default;
    ImageTensor(std::size_t h, std::size_t w) : height(h), width(w), data(h * w * 3, 0.0f) {}

    float& at(std::size_t r, std::size_t c, std::size_t ch) { return data[(r * width + c) * channels + ch]; }
    float at(std::size_t r, std::size_t c, std::size_t ch) const { return data[(r * width + c) * channels + ch]; }
};

struct QuadrantSet {
    // Row-major order: top-left, top-right, bottom-left, bottom-right.
    std::array<ImageTensor, 4> quadrants;
};

enum class PreprocessMode {
    scale_symmetric,   // x/127.5 - 1
    mean_subtract_bgr, // swap to BGR, subtract per-channel means 103.939/116.779/123.68
    scale_normalize,   // x/255, then (x - mean)/std with ImageNet channel stats
    identity,
};

const char* to_string(PreprocessMode m);
PreprocessMode preprocess_mode_from_string(const std::string& s);

// Decodes a PNG or JPEG at its native size; grayscale sources are
// replicated across the three channels.
ImageTensor decode_image(const std::filesystem::path& path);

// Bilinear resampling with half-pixel centers; identity when sizes match.
ImageTensor resize_bilinear(const ImageTensor& img, std::size_t height, std::size_t width);

ImageTensor load_and_resize(const std::filesystem::path& path, std::size_t size = kCanvasSize);

QuadrantSet slice_quadrants(const ImageTensor& img);

// Inverse of slice_quadrants; exact by construction.
ImageTensor reassemble(const QuadrantSet& quads);

ImageTensor preprocess(const ImageTensor& quadrant, PreprocessMode mode);

// 8-bit RGB PNG writer (values rounded and clamped to [0, 255]). Used for
// exporting fixtures and stub datasets.
void write_png(const ImageTensor& img, const std::filesystem::path& path);

} // namespace drfg
