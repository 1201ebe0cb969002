#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace seghaze {

// ---------------------------------------------------------------------------
// Error taxonomy. Everything thrown by the library derives from seghaze::error
// so callers can catch the whole family at once.
// ---------------------------------------------------------------------------

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct shape_error : error {
    using error::error;
};
struct domain_error : error {
    using error::error;
};
struct capacity_error : error {
    using error::error;
};
struct config_error : error {
    using error::error;
};
struct io_error : error {
    using error::error;
};
struct format_error : error {
    using error::error;
};
struct validation_error : error {
    using error::error;
};
struct not_found_error : error {
    using error::error;
};
struct data_error : error {
    using error::error;
};
struct training_error : error {
    using error::error;
};
struct grouping_error : error {
    using error::error;
};
struct usage_error : error {
    using error::error;
};

// ---------------------------------------------------------------------------
// Value types shared across modules. Photometric data is stored as double in
// [0,1]; quantization happens only at file boundaries.
// ---------------------------------------------------------------------------

//! Global airlight, one value per RGB channel.
using Vec3 = std::array<double, 3>;

//! H x W scalar field, row-major. Used for depth, transmission, density, luma.
struct Field {
    int h = 0;
    int w = 0;
    std::vector<double> v;

    Field() = default;
    Field(int h_, int w_, double fill = 0.0) : h(h_), w(w_), v(size_t(h_) * w_, fill) {}

    double& at(int y, int x) { return v[size_t(y) * w + x]; }
    double at(int y, int x) const { return v[size_t(y) * w + x]; }
    size_t size() const { return v.size(); }
    bool same_shape(const Field& o) const { return h == o.h && w == o.w; }
};

//! H x W x 3 image, planar channel layout, values in [0,1].
struct Image {
    int h = 0;
    int w = 0;
    std::vector<double> v;  // 3 * h * w, plane per channel

    Image() = default;
    Image(int h_, int w_, double fill = 0.0) : h(h_), w(w_), v(size_t(3) * h_ * w_, fill) {}

    double& at(int c, int y, int x) { return v[(size_t(c) * h + y) * w + x]; }
    double at(int c, int y, int x) const { return v[(size_t(c) * h + y) * w + x]; }
    double* plane(int c) { return v.data() + size_t(c) * h * w; }
    const double* plane(int c) const { return v.data() + size_t(c) * h * w; }
    size_t pixels() const { return size_t(h) * w; }
    bool same_shape(const Image& o) const { return h == o.h && w == o.w; }
};

//! H x W integer label raster (one segment id per pixel).
struct LabelMap {
    int h = 0;
    int w = 0;
    std::vector<int32_t> v;

    LabelMap() = default;
    LabelMap(int h_, int w_, int32_t fill = 0) : h(h_), w(w_), v(size_t(h_) * w_, fill) {}

    int32_t& at(int y, int x) { return v[size_t(y) * w + x]; }
    int32_t at(int y, int x) const { return v[size_t(y) * w + x]; }
    size_t size() const { return v.size(); }
};

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b))
        throw shape_error(std::string(what) + ": image shapes differ (" + std::to_string(a.h) + "x" +
                          std::to_string(a.w) + " vs " + std::to_string(b.h) + "x" + std::to_string(b.w) + ")");
}

inline void require_same_shape(const Field& a, const Field& b, const char* what) {
    if (!a.same_shape(b))
        throw shape_error(std::string(what) + ": field shapes differ (" + std::to_string(a.h) + "x" +
                          std::to_string(a.w) + " vs " + std::to_string(b.h) + "x" + std::to_string(b.w) + ")");
}

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace seghaze
