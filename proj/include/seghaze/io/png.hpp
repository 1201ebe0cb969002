#pragma once

#include <png.h>

#include <bit>
#include <cstdio>
#include <filesystem>
#include <memory>

#include "seghaze/core.hpp"
#include "seghaze/segcodec.hpp"

namespace seghaze::io {

//! Decoded PNG: samples are expanded to one uint16 per sample (even for
//! 1/2/4/8-bit files), interleaved by channel, row-major.
struct PngData {
    int h = 0;
    int w = 0;
    int channels = 0;   // 1 or 3 after normalization
    int bit_depth = 0;  // 8 or 16 after expansion (original depth for gray 1/2/4 becomes 8)
    std::vector<uint16_t> samples;

    double max_value() const { return bit_depth == 16 ? 65535.0 : 255.0; }
};

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f) throw io_error("cannot open " + path.string());
    return f;
}

}  // namespace detail

inline PngData read_png(const std::filesystem::path& path) {
    auto file = detail::open_file(path, "rb");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw io_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw io_error("png_create_info_struct failed");
    }
    std::vector<png_bytep> rows;
    PngData out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw format_error("malformed PNG: " + path.string());
    }
    png_init_io(png, file.get());
    png_read_info(png, info);

    const int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
    png_read_update_info(png, info);

    out.h = int(png_get_image_height(png, info));
    out.w = int(png_get_image_width(png, info));
    out.channels = png_get_channels(png, info);
    out.bit_depth = png_get_bit_depth(png, info);
    if (out.channels != 1 && out.channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw format_error("unsupported channel count in " + path.string());
    }

    const size_t samples_per_row = size_t(out.w) * out.channels;
    std::vector<uint8_t> raw(size_t(out.h) * samples_per_row * (out.bit_depth / 8));
    rows.resize(out.h);
    const size_t row_bytes = samples_per_row * (out.bit_depth / 8);
    for (int y = 0; y < out.h; ++y) rows[y] = raw.data() + size_t(y) * row_bytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    out.samples.resize(size_t(out.h) * samples_per_row);
    if (out.bit_depth == 16) {
        const uint16_t* p = reinterpret_cast<const uint16_t*>(raw.data());
        std::copy(p, p + out.samples.size(), out.samples.begin());
    } else {
        for (size_t i = 0; i < out.samples.size(); ++i) out.samples[i] = raw[i];
    }
    return out;
}

namespace detail {

inline void write_png(const std::filesystem::path& path, int h, int w, int color_type, int bit_depth,
                      const std::vector<png_bytep>& rows) {
    auto file = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw io_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw io_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw io_error("PNG write failed: " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, w, h, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
    png_write_image(png, const_cast<png_bytep*>(rows.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace detail

inline void write_png_gray8(const std::filesystem::path& path, int h, int w, const uint8_t* data) {
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = const_cast<uint8_t*>(data) + size_t(y) * w;
    detail::write_png(path, h, w, PNG_COLOR_TYPE_GRAY, 8, rows);
}

inline void write_png_gray16(const std::filesystem::path& path, int h, int w, const uint16_t* data) {
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = reinterpret_cast<png_bytep>(const_cast<uint16_t*>(data) + size_t(y) * w);
    detail::write_png(path, h, w, PNG_COLOR_TYPE_GRAY, 16, rows);
}

//! 1-bit grayscale; data holds one 0/1 byte per pixel, packed on write.
inline void write_png_gray1(const std::filesystem::path& path, int h, int w, const uint8_t* data) {
    const size_t row_bytes = (size_t(w) + 7) / 8;
    std::vector<uint8_t> packed(size_t(h) * row_bytes, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (data[size_t(y) * w + x]) packed[size_t(y) * row_bytes + x / 8] |= uint8_t(0x80 >> (x % 8));
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = packed.data() + size_t(y) * row_bytes;
    detail::write_png(path, h, w, PNG_COLOR_TYPE_GRAY, 1, rows);
}

inline void write_png_rgb(const std::filesystem::path& path, const Image& img, int bit_depth = 16) {
    const size_t npx = img.pixels();
    if (bit_depth == 16) {
        std::vector<uint16_t> buf(npx * 3);
        for (size_t i = 0; i < npx; ++i)
            for (int c = 0; c < 3; ++c)
                buf[i * 3 + c] = uint16_t(std::lround(clamp01(img.v[size_t(c) * npx + i]) * 65535.0));
        std::vector<png_bytep> rows(img.h);
        for (int y = 0; y < img.h; ++y)
            rows[y] = reinterpret_cast<png_bytep>(buf.data() + size_t(y) * img.w * 3);
        detail::write_png(path, img.h, img.w, PNG_COLOR_TYPE_RGB, 16, rows);
    } else if (bit_depth == 8) {
        std::vector<uint8_t> buf(npx * 3);
        for (size_t i = 0; i < npx; ++i)
            for (int c = 0; c < 3; ++c)
                buf[i * 3 + c] = uint8_t(std::lround(clamp01(img.v[size_t(c) * npx + i]) * 255.0));
        std::vector<png_bytep> rows(img.h);
        for (int y = 0; y < img.h; ++y) rows[y] = buf.data() + size_t(y) * img.w * 3;
        detail::write_png(path, img.h, img.w, PNG_COLOR_TYPE_RGB, 8, rows);
    } else {
        throw config_error("write_png_rgb: bit depth must be 8 or 16");
    }
}

// ---------------------------------------------------------------------------
// Decoded-PNG -> domain type conversions
// ---------------------------------------------------------------------------

inline Image to_image(const PngData& png) {
    Image img(png.h, png.w);
    const double scale = 1.0 / png.max_value();
    const size_t npx = img.pixels();
    if (png.channels == 3) {
        for (size_t i = 0; i < npx; ++i)
            for (int c = 0; c < 3; ++c) img.v[size_t(c) * npx + i] = png.samples[i * 3 + c] * scale;
    } else {
        for (size_t i = 0; i < npx; ++i) {
            const double v = png.samples[i] * scale;
            for (int c = 0; c < 3; ++c) img.v[size_t(c) * npx + i] = v;
        }
    }
    return img;
}

inline Image read_image(const std::filesystem::path& path) { return to_image(read_png(path)); }

inline LabelMap read_labels(const std::filesystem::path& path) {
    const PngData png = read_png(path);
    if (png.channels != 1) throw format_error("label map must be single-channel: " + path.string());
    LabelMap out(png.h, png.w);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = png.samples[i];
    return out;
}

inline void write_labels(const std::filesystem::path& path, const LabelMap& labels) {
    std::vector<uint16_t> buf(labels.v.size());
    for (size_t i = 0; i < buf.size(); ++i) {
        if (labels.v[i] < 0 || labels.v[i] > 65535) throw domain_error("label out of 16-bit range");
        buf[i] = uint16_t(labels.v[i]);
    }
    write_png_gray16(path, labels.h, labels.w, buf.data());
}

inline segcodec::GrayMask read_graymask(const std::filesystem::path& path) {
    const PngData png = read_png(path);
    if (png.channels != 1 || png.bit_depth != 8)
        throw format_error("gray segmentation mask must be 8-bit single-channel: " + path.string());
    segcodec::GrayMask out(png.h, png.w);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = uint8_t(png.samples[i]);
    return out;
}

inline void write_graymask(const std::filesystem::path& path, const segcodec::GrayMask& gray) {
    write_png_gray8(path, gray.h, gray.w, gray.v.data());
}

}  // namespace seghaze::io
