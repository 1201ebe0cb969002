#pragma once

#include <cstdint>
#include <map>

#include "seghaze/core.hpp"

namespace seghaze::segcodec {

//! One binary segment mask. id is the emission index of the segmenter.
struct SegMask {
    int id = 0;
    std::vector<uint8_t> mask;  // h*w, 0/1

    size_t area() const {
        size_t a = 0;
        for (uint8_t m : mask) a += m;
        return a;
    }
};

//! Ordered segmenter output; ids are 0..n-1 in list order.
struct SegMaskSet {
    int h = 0;
    int w = 0;
    std::vector<SegMask> masks;

    size_t count() const { return masks.size(); }
};

//! Grayscale-coded segmentation; 0 means "no segment covers this pixel".
struct GrayMask {
    int h = 0;
    int w = 0;
    std::vector<uint8_t> v;

    GrayMask() = default;
    GrayMask(int h_, int w_, uint8_t fill = 0) : h(h_), w(w_), v(size_t(h_) * w_, fill) {}
    uint8_t& at(int y, int x) { return v[size_t(y) * w + x]; }
    uint8_t at(int y, int x) const { return v[size_t(y) * w + x]; }
};

enum class OverlapPolicy {
    LastWins,          // later id overwrites; keeps the raster decodable
    AdditiveSaturate,  // literal sum-then-clamp semantics of the coding loop
};

// The id -> gray value map: ids below 127 take even values 2,4,..,254
// ascending; ids from 127 up take odd values 255,253,..,1 descending.
// Bijection from 0..254 onto 1..255.
inline int gray_value_for_id(int id) {
    if (id < 0 || id > 254) throw capacity_error("gray_value_for_id: id " + std::to_string(id) + " outside 0..254");
    return id < 127 ? 2 * (id + 1) : 2 * (255 - id) - 1;
}

//! Exact inverse of gray_value_for_id over 1..255.
inline int id_for_gray_value(int value) {
    if (value < 1 || value > 255) throw domain_error("id_for_gray_value: value outside 1..255");
    return value % 2 == 0 ? value / 2 - 1 : 255 - (value + 1) / 2;
}

inline void validate(const SegMaskSet& set) {
    const size_t npx = size_t(set.h) * set.w;
    for (size_t i = 0; i < set.masks.size(); ++i) {
        const auto& m = set.masks[i];
        if (m.id != int(i)) throw validation_error("SegMaskSet: id " + std::to_string(m.id) + " at position " +
                                                   std::to_string(i) + " breaks the enumeration order");
        if (m.mask.size() != npx) throw shape_error("SegMaskSet: mask " + std::to_string(i) + " has wrong size");
        if (m.area() == 0) throw validation_error("SegMaskSet: mask " + std::to_string(i) + " is empty");
    }
}

inline GrayMask encode(const SegMaskSet& set, OverlapPolicy policy = OverlapPolicy::LastWins) {
    if (set.count() > 255) throw capacity_error("encode: " + std::to_string(set.count()) + " masks exceed the 255-value code space");
    validate(set);
    GrayMask out(set.h, set.w, 0);
    if (policy == OverlapPolicy::LastWins) {
        for (const auto& m : set.masks) {
            const uint8_t code = uint8_t(gray_value_for_id(m.id));
            for (size_t i = 0; i < m.mask.size(); ++i)
                if (m.mask[i]) out.v[i] = code;
        }
    } else {
        std::vector<int> acc(out.v.size(), 0);
        for (const auto& m : set.masks) {
            const int code = gray_value_for_id(m.id);
            for (size_t i = 0; i < m.mask.size(); ++i)
                if (m.mask[i]) acc[i] = std::min(acc[i] + code, 255);
        }
        for (size_t i = 0; i < acc.size(); ++i) out.v[i] = uint8_t(acc[i]);
    }
    return out;
}

//! Inverse of encode for disjoint mask sets under LastWins: every nonzero
//! value maps back through the bijection; masks come out in ascending id order.
inline SegMaskSet decode(const GrayMask& gray) {
    std::map<int, std::vector<uint8_t>> by_id;
    const size_t npx = size_t(gray.h) * gray.w;
    for (size_t i = 0; i < npx; ++i) {
        if (gray.v[i] == 0) continue;
        auto [it, fresh] = by_id.try_emplace(id_for_gray_value(gray.v[i]));
        if (fresh) it->second.assign(npx, 0);
        it->second[i] = 1;
    }
    SegMaskSet out;
    out.h = gray.h;
    out.w = gray.w;
    for (auto& [id, mask] : by_id) out.masks.push_back(SegMask{id, std::move(mask)});
    return out;
}

//! Rec. 601 luma, the gray fallback for the *gray mask variants.
inline Field luma(const Image& image) {
    Field out(image.h, image.w);
    const double* r = image.plane(0);
    const double* g = image.plane(1);
    const double* b = image.plane(2);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    return out;
}

//! GrayMask scaled into [0,1] for use as a network channel.
inline Field normalized(const GrayMask& gray) {
    Field out(gray.h, gray.w);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = gray.v[i] / 255.0;
    return out;
}

}  // namespace seghaze::segcodec
