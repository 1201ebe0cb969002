#pragma once

#include <algorithm>
#include <numeric>

#include "seghaze/io/maskdir.hpp"
#include "seghaze/scatter.hpp"
#include "seghaze/segcodec.hpp"

namespace seghaze::segbackend {

using segcodec::SegMask;
using segcodec::SegMaskSet;

enum class SegmenterKind { Oracle, ConnectedComponents, File };

//! Capability tiers standing in for segmentation model sizes.
enum class Tier { Small, Middle, Large };

struct SegmenterSpec {
    SegmenterKind kind = SegmenterKind::ConnectedComponents;
    int quant_levels = 8;   // CC only: luma quantization level count q
    int min_area = 16;      // CC only: drop components smaller than this
    std::filesystem::path mask_dir;  // File only

    void validate() const {
        if (kind == SegmenterKind::ConnectedComponents) {
            if (quant_levels < 2) throw config_error("SegmenterSpec: q must be >= 2");
            if (min_area < 1) throw config_error("SegmenterSpec: min area must be >= 1");
        }
    }
};

inline SegmenterSpec tier_spec(Tier tier) {
    switch (tier) {
        case Tier::Small: return {SegmenterKind::ConnectedComponents, 4, 64, {}};
        case Tier::Middle: return {SegmenterKind::ConnectedComponents, 8, 16, {}};
        case Tier::Large: return {SegmenterKind::Oracle, 0, 0, {}};
    }
    throw config_error("unknown tier");
}

inline const char* tier_name(Tier tier) {
    switch (tier) {
        case Tier::Small: return "small";
        case Tier::Middle: return "middle";
        case Tier::Large: return "large";
    }
    return "?";
}

namespace detail {

//! Reassign ids so the list is ordered by descending area. Ties break on the
//! first covered pixel so the result is independent of the input order.
inline SegMaskSet area_sorted(std::vector<std::vector<uint8_t>> masks, int h, int w) {
    struct Entry {
        size_t area;
        size_t first;
        size_t index;
    };
    std::vector<Entry> entries;
    entries.reserve(masks.size());
    for (size_t i = 0; i < masks.size(); ++i) {
        size_t area = 0, first = masks[i].size();
        for (size_t p = 0; p < masks[i].size(); ++p)
            if (masks[i][p]) {
                ++area;
                if (first == masks[i].size()) first = p;
            }
        entries.push_back({area, first, i});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.area != b.area) return a.area > b.area;
        return a.first < b.first;
    });
    SegMaskSet out;
    out.h = h;
    out.w = w;
    for (size_t i = 0; i < entries.size(); ++i)
        out.masks.push_back(SegMask{int(i), std::move(masks[entries[i].index])});
    return out;
}

}  // namespace detail

//! Ideal segmenter: one mask per ground-truth region, haze-blind by construction.
inline SegMaskSet oracle_segment(const scatter::Scene& scene) {
    const int n = scene.region_count;
    const size_t npx = scene.regions.size();
    std::vector<std::vector<uint8_t>> masks(n, std::vector<uint8_t>(npx, 0));
    for (size_t i = 0; i < npx; ++i) masks[scene.regions.v[i]][i] = 1;
    return detail::area_sorted(std::move(masks), scene.regions.h, scene.regions.w);
}

//! Toy segmenter: quantize luma into q levels, take 4-connected components,
//! drop small ones. Degrades under haze the way a real segmenter does.
inline SegMaskSet cc_segment(const Image& image, const SegmenterSpec& spec) {
    if (spec.kind != SegmenterKind::ConnectedComponents)
        throw config_error("cc_segment: spec kind is not CONNECTED_COMPONENTS");
    spec.validate();
    const Field y = segcodec::luma(image);
    const int h = image.h, w = image.w, q = spec.quant_levels;
    std::vector<int> level(y.v.size());
    for (size_t i = 0; i < y.v.size(); ++i) level[i] = std::min(q - 1, int(y.v[i] * q));

    // Flood fill, scan order, 4-connectivity.
    std::vector<int> comp(level.size(), -1);
    std::vector<std::vector<uint8_t>> masks;
    std::vector<size_t> stack;
    for (size_t start = 0; start < level.size(); ++start) {
        if (comp[start] >= 0) continue;
        const int id = int(masks.size());
        masks.emplace_back(level.size(), 0);
        comp[start] = id;
        stack.assign(1, start);
        while (!stack.empty()) {
            const size_t p = stack.back();
            stack.pop_back();
            masks[id][p] = 1;
            const int py = int(p) / w, px = int(p) % w;
            const int ny[4] = {py - 1, py + 1, py, py};
            const int nx[4] = {px, px, px - 1, px + 1};
            for (int d = 0; d < 4; ++d) {
                if (ny[d] < 0 || ny[d] >= h || nx[d] < 0 || nx[d] >= w) continue;
                const size_t np = size_t(ny[d]) * w + nx[d];
                if (comp[np] < 0 && level[np] == level[p]) {
                    comp[np] = id;
                    stack.push_back(np);
                }
            }
        }
    }

    std::vector<std::vector<uint8_t>> kept;
    for (auto& m : masks) {
        const size_t area = size_t(std::accumulate(m.begin(), m.end(), size_t(0)));
        if (area >= size_t(spec.min_area)) kept.push_back(std::move(m));
    }
    return detail::area_sorted(std::move(kept), h, w);
}

//! Precomputed-mask adapter: masks for a frame live in <root>/<frame_id> as a
//! mask directory, or in <root>/<frame_id>.rle.
inline SegMaskSet load_masks(const std::filesystem::path& root, const std::string& frame_id) {
    const auto dir = root / frame_id;
    if (std::filesystem::exists(dir / "manifest.json")) return io::read_maskdir(dir);
    const auto rle = root / (frame_id + ".rle");
    if (std::filesystem::exists(rle)) return io::read_rle(rle);
    throw not_found_error("no masks for frame '" + frame_id + "' under " + root.string());
}

//! Run whichever segmenter the spec names. The scene is required for the
//! oracle; CC and File only need the image / frame id.
inline SegMaskSet segment(const Image& image, const SegmenterSpec& spec, const scatter::Scene* scene = nullptr,
                          const std::string& frame_id = "") {
    switch (spec.kind) {
        case SegmenterKind::Oracle:
            if (!scene) throw config_error("oracle segmenter needs ground-truth scene labels");
            return oracle_segment(*scene);
        case SegmenterKind::ConnectedComponents:
            return cc_segment(image, spec);
        case SegmenterKind::File:
            return load_masks(spec.mask_dir, frame_id);
    }
    throw config_error("unknown segmenter kind");
}

// ---------------------------------------------------------------------------
// Haze-degradation measurement
// ---------------------------------------------------------------------------

struct DegradationCurve {
    std::vector<double> densities;
    std::vector<size_t> segment_counts;
    std::vector<double> detection_rate;  // percent vs the beta = 0 baseline
};

//! Render the scene at each uniform density, segment, and report counts as a
//! percentage of the haze-free count.
inline DegradationCurve degradation_curve(const scatter::Scene& scene, const std::vector<double>& betas,
                                          const SegmenterSpec& spec) {
    if (betas.empty()) throw usage_error("degradation_curve: empty density list");
    if (betas.front() != 0.0) throw usage_error("degradation_curve: densities must start at 0");
    if (!std::is_sorted(betas.begin(), betas.end())) throw usage_error("degradation_curve: densities must ascend");

    DegradationCurve out;
    out.densities = betas;
    for (const double beta : betas) {
        const Image hazy = scatter::render_hazy_uniform(scene, beta);
        out.segment_counts.push_back(segment(hazy, spec, &scene).count());
    }
    const double baseline = double(out.segment_counts.front());
    if (baseline == 0) throw data_error("degradation_curve: zero segments on the haze-free baseline");
    for (size_t c : out.segment_counts) out.detection_rate.push_back(100.0 * double(c) / baseline);
    return out;
}

}  // namespace seghaze::segbackend
