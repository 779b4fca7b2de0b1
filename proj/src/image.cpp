#include "drfg/image.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

namespace drfg {

const char* to_string(PreprocessMode m) {
    switch (m) {
        case PreprocessMode::scale_symmetric: return "scale_symmetric";
        case PreprocessMode::mean_subtract_bgr: return "mean_subtract_bgr";
        case PreprocessMode::scale_normalize: return "scale_normalize";
        case PreprocessMode::identity: return "identity";
    }
    return "unknown";
}

PreprocessMode preprocess_mode_from_string(const std::string& s) {
    if (s == "scale_symmetric") return PreprocessMode::scale_symmetric;
    if (s == "mean_subtract_bgr") return PreprocessMode::mean_subtract_bgr;
    if (s == "scale_normalize") return PreprocessMode::scale_normalize;
    if (s == "identity") return PreprocessMode::identity;
    throw ConfigError("unknown preprocess mode: " + s);
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

ImageTensor decode_png(std::FILE* fp, const std::filesystem::path& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed for " + path.string());
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng init failed for " + path.string());
    }

    // Pixel buffer lives outside the setjmp scope so cleanup stays trivial.
    std::vector<unsigned char> pixels;
    png_uint_32 width = 0, height = 0;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("cannot decode PNG file: " + path.string());
    }

    png_init_io(png, fp);
    png_read_info(png, info);

    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);

    if (width == 0 || height == 0) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw InvalidInput("zero-area image: " + path.string());
    }

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    pixels.resize(static_cast<std::size_t>(width) * height * 3);
    std::vector<png_bytep> rows(height);
    for (png_uint_32 r = 0; r < height; ++r) rows[r] = pixels.data() + static_cast<std::size_t>(r) * width * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    ImageTensor img(height, width);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>(pixels[i]);
    return img;
}

struct JpegError {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegError*>(cinfo->err);
    std::longjmp(err->jump, 1);
}

ImageTensor decode_jpeg(std::FILE* fp, const std::filesystem::path& path) {
    jpeg_decompress_struct cinfo;
    JpegError jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;

    std::vector<unsigned char> pixels;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw IoError("cannot decode JPEG file: " + path.string());
    }

    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, fp);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    const std::size_t width = cinfo.output_width;
    const std::size_t height = cinfo.output_height;
    if (width == 0 || height == 0) {
        jpeg_destroy_decompress(&cinfo);
        throw InvalidInput("zero-area image: " + path.string());
    }

    pixels.resize(width * height * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        unsigned char* row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);

    ImageTensor img(height, width);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>(pixels[i]);
    return img;
}

} // namespace

ImageTensor decode_image(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw IoError("cannot open image file: " + path.string());

    unsigned char magic[3] = {0, 0, 0};
    if (std::fread(magic, 1, 3, fp.get()) != 3) throw IoError("cannot decode image file: " + path.string());
    std::rewind(fp.get());

    if (magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N') return decode_png(fp.get(), path);
    if (magic[0] == 0xff && magic[1] == 0xd8) return decode_jpeg(fp.get(), path);
    throw IoError("unsupported image format (expected PNG or JPEG): " + path.string());
}

ImageTensor resize_bilinear(const ImageTensor& img, std::size_t height, std::size_t width) {
    if (img.height == 0 || img.width == 0) throw InvalidInput("resize_bilinear: zero-area source");
    if (img.height == height && img.width == width) return img;

    ImageTensor out(height, width);
    const double scale_r = static_cast<double>(img.height) / static_cast<double>(height);
    const double scale_c = static_cast<double>(img.width) / static_cast<double>(width);

    for (std::size_t r = 0; r < height; ++r) {
        const double src_r = std::max(0.0, (static_cast<double>(r) + 0.5) * scale_r - 0.5);
        const std::size_t r0 = std::min(static_cast<std::size_t>(src_r), img.height - 1);
        const std::size_t r1 = std::min(r0 + 1, img.height - 1);
        const double fr = src_r - static_cast<double>(r0);
        for (std::size_t c = 0; c < width; ++c) {
            const double src_c = std::max(0.0, (static_cast<double>(c) + 0.5) * scale_c - 0.5);
            const std::size_t c0 = std::min(static_cast<std::size_t>(src_c), img.width - 1);
            const std::size_t c1 = std::min(c0 + 1, img.width - 1);
            const double fc = src_c - static_cast<double>(c0);
            for (std::size_t ch = 0; ch < 3; ++ch) {
                const double top = (1.0 - fc) * img.at(r0, c0, ch) + fc * img.at(r0, c1, ch);
                const double bot = (1.0 - fc) * img.at(r1, c0, ch) + fc * img.at(r1, c1, ch);
                out.at(r, c, ch) = static_cast<float>((1.0 - fr) * top + fr * bot);
            }
        }
    }
    return out;
}

ImageTensor load_and_resize(const std::filesystem::path& path, std::size_t size) {
    return resize_bilinear(decode_image(path), size, size);
}

QuadrantSet slice_quadrants(const ImageTensor& img) {
    if (img.height != kCanvasSize || img.width != kCanvasSize || img.channels != 3)
        throw ShapeError("slice_quadrants expects 448x448x3, got " + std::to_string(img.height) + "x" +
                         std::to_string(img.width) + "x" + std::to_string(img.channels));

    QuadrantSet set;
    const std::size_t q = kQuadrantSize;
    for (std::size_t idx = 0; idx < 4; ++idx) {
        const std::size_t row0 = (idx / 2) * q;
        const std::size_t col0 = (idx % 2) * q;
        ImageTensor tile(q, q);
        for (std::size_t r = 0; r < q; ++r)
            for (std::size_t c = 0; c < q; ++c)
                for (std::size_t ch = 0; ch < 3; ++ch) tile.at(r, c, ch) = img.at(row0 + r, col0 + c, ch);
        set.quadrants[idx] = std::move(tile);
    }
    return set;
}

ImageTensor reassemble(const QuadrantSet& quads) {
    const std::size_t q = kQuadrantSize;
    for (const auto& tile : quads.quadrants)
        if (tile.height != q || tile.width != q)
            throw ShapeError("reassemble expects 224x224x3 quadrants");

    ImageTensor img(kCanvasSize, kCanvasSize);
    for (std::size_t idx = 0; idx < 4; ++idx) {
        const std::size_t row0 = (idx / 2) * q;
        const std::size_t col0 = (idx % 2) * q;
        const ImageTensor& tile = quads.quadrants[idx];
        for (std::size_t r = 0; r < q; ++r)
            for (std::size_t c = 0; c < q; ++c)
                for (std::size_t ch = 0; ch < 3; ++ch) img.at(row0 + r, col0 + c, ch) = tile.at(r, c, ch);
    }
    return img;
}

ImageTensor preprocess(const ImageTensor& quadrant, PreprocessMode mode) {
    if (quadrant.height != kQuadrantSize || quadrant.width != kQuadrantSize || quadrant.channels != 3)
        throw ShapeError("preprocess expects 224x224x3, got " + std::to_string(quadrant.height) + "x" +
                         std::to_string(quadrant.width) + "x" + std::to_string(quadrant.channels));

    ImageTensor out = quadrant;
    switch (mode) {
        case PreprocessMode::identity:
            break;
        case PreprocessMode::scale_symmetric:
            for (float& v : out.data) v = v / 127.5f - 1.0f;
            break;
        case PreprocessMode::mean_subtract_bgr: {
            static constexpr float kBgrMeans[3] = {103.939f, 116.779f, 123.68f};
            for (std::size_t px = 0; px < out.data.size(); px += 3) {
                const float r = out.data[px], g = out.data[px + 1], b = out.data[px + 2];
                out.data[px] = b - kBgrMeans[0];
                out.data[px + 1] = g - kBgrMeans[1];
                out.data[px + 2] = r - kBgrMeans[2];
            }
            break;
        }
        case PreprocessMode::scale_normalize: {
            static constexpr float kMeans[3] = {0.485f, 0.456f, 0.406f};
            static constexpr float kStds[3] = {0.229f, 0.224f, 0.225f};
            for (std::size_t px = 0; px < out.data.size(); px += 3)
                for (std::size_t ch = 0; ch < 3; ++ch)
                    out.data[px + ch] = (out.data[px + ch] / 255.0f - kMeans[ch]) / kStds[ch];
            break;
        }
    }
    return out;
}

void write_png(const ImageTensor& img, const std::filesystem::path& path) {
    if (img.height == 0 || img.width == 0) throw InvalidInput("write_png: zero-area image");

    std::vector<unsigned char> pixels(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i)
        pixels[i] = static_cast<unsigned char>(std::clamp(std::lround(img.data[i]), 0L, 255L));

    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw IoError("cannot open file for writing: " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed for " + path.string());
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng init failed for " + path.string());
    }

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("cannot write PNG file: " + path.string());
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t r = 0; r < img.height; ++r)
        png_write_row(png, const_cast<png_bytep>(pixels.data() + r * img.width * 3));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace drfg
