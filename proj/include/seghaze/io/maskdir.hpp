#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "seghaze/io/png.hpp"
#include "seghaze/segcodec.hpp"

namespace seghaze::io {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Mask directory: one 1-bit PNG per mask plus manifest.json. Manifest order
// is id order. Schema:
//   { "format": "seghaze-maskdir", "version": 1, "height": H, "width": W,
//     "masks": [ { "id": 0, "file": "mask_000.png", "area": 123 }, ... ] }
// ---------------------------------------------------------------------------

inline void write_maskdir(const fs::path& dir, const segcodec::SegMaskSet& set) {
    segcodec::validate(set);
    fs::create_directories(dir);
    json manifest;
    manifest["format"] = "seghaze-maskdir";
    manifest["version"] = 1;
    manifest["height"] = set.h;
    manifest["width"] = set.w;
    manifest["masks"] = json::array();
    for (const auto& m : set.masks) {
        char name[32];
        std::snprintf(name, sizeof(name), "mask_%03d.png", m.id);
        write_png_gray1(dir / name, set.h, set.w, m.mask.data());
        manifest["masks"].push_back({{"id", m.id}, {"file", name}, {"area", m.area()}});
    }
    std::ofstream os(dir / "manifest.json");
    os << manifest.dump(2) << "\n";
    if (!os) throw io_error("cannot write manifest in " + dir.string());
}

inline segcodec::SegMaskSet read_maskdir(const fs::path& dir) {
    const fs::path mpath = dir / "manifest.json";
    std::ifstream is(mpath);
    if (!is) throw not_found_error("missing manifest: " + mpath.string());
    json manifest;
    try {
        is >> manifest;
    } catch (const json::exception& e) {
        throw format_error("bad manifest " + mpath.string() + ": " + e.what());
    }
    if (manifest.value("format", "") != "seghaze-maskdir" || manifest.value("version", 0) != 1)
        throw format_error("not a seghaze mask directory: " + mpath.string());

    segcodec::SegMaskSet set;
    set.h = manifest.at("height").get<int>();
    set.w = manifest.at("width").get<int>();
    const size_t npx = size_t(set.h) * set.w;
    for (const auto& entry : manifest.at("masks")) {
        const std::string file = entry.at("file").get<std::string>();
        const fs::path path = dir / file;
        if (!fs::exists(path)) throw not_found_error("mask file missing: " + path.string());
        const PngData png = read_png(path);
        if (png.h != set.h || png.w != set.w)
            throw validation_error("mask dimensions differ from manifest: " + path.string());
        if (png.channels != 1) throw validation_error("mask must be single-channel: " + path.string());
        segcodec::SegMask m;
        m.id = entry.at("id").get<int>();
        m.mask.resize(npx);
        size_t area = 0;
        for (size_t i = 0; i < npx; ++i) {
            m.mask[i] = png.samples[i] ? 1 : 0;
            area += m.mask[i];
        }
        if (area == 0) throw validation_error("empty mask: " + path.string());
        set.masks.push_back(std::move(m));
    }
    segcodec::validate(set);
    return set;
}

// ---------------------------------------------------------------------------
// RLE text container: the whole mask set in one file. Runs are row-major
// pixel-index spans inside each mask. Format, one token per field:
//   line 1:  SEGHAZE-RLE 1
//   line 2:  h <H> w <W> n <mask count>
//   then per mask:
//     mask <id> area <area> runs <k>
//     <start> <len>  (k lines)
// ---------------------------------------------------------------------------

inline void write_rle(const fs::path& path, const segcodec::SegMaskSet& set) {
    segcodec::validate(set);
    std::ofstream os(path);
    if (!os) throw io_error("cannot open " + path.string() + " for writing");
    os << "SEGHAZE-RLE 1\n";
    os << "h " << set.h << " w " << set.w << " n " << set.masks.size() << "\n";
    for (const auto& m : set.masks) {
        std::vector<std::pair<size_t, size_t>> runs;
        size_t i = 0;
        const size_t npx = m.mask.size();
        while (i < npx) {
            if (!m.mask[i]) {
                ++i;
                continue;
            }
            size_t start = i;
            while (i < npx && m.mask[i]) ++i;
            runs.emplace_back(start, i - start);
        }
        os << "mask " << m.id << " area " << m.area() << " runs " << runs.size() << "\n";
        for (const auto& [start, len] : runs) os << start << " " << len << "\n";
    }
    if (!os) throw io_error("write failed: " + path.string());
}

inline segcodec::SegMaskSet read_rle(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw not_found_error("cannot open " + path.string());
    std::string word;
    auto expect = [&](const char* tok) {
        if (!(is >> word) || word != tok) throw format_error("RLE container: expected '" + std::string(tok) + "' in " + path.string());
    };
    expect("SEGHAZE-RLE");
    int version;
    if (!(is >> version) || version != 1) throw format_error("unsupported RLE version in " + path.string());
    segcodec::SegMaskSet set;
    size_t n;
    expect("h");
    is >> set.h;
    expect("w");
    is >> set.w;
    expect("n");
    is >> n;
    if (!is || set.h <= 0 || set.w <= 0) throw format_error("bad RLE header in " + path.string());
    const size_t npx = size_t(set.h) * set.w;
    for (size_t mi = 0; mi < n; ++mi) {
        segcodec::SegMask m;
        size_t area, k;
        expect("mask");
        is >> m.id;
        expect("area");
        is >> area;
        expect("runs");
        is >> k;
        if (!is) throw format_error("truncated RLE mask header in " + path.string());
        m.mask.assign(npx, 0);
        size_t painted = 0;
        for (size_t r = 0; r < k; ++r) {
            size_t start, len;
            if (!(is >> start >> len)) throw format_error("truncated RLE runs in " + path.string());
            if (start + len > npx) throw format_error("RLE run out of bounds in " + path.string());
            for (size_t i = start; i < start + len; ++i) m.mask[i] = 1;
            painted += len;
        }
        if (painted != area) throw format_error("RLE area mismatch for mask " + std::to_string(m.id) + " in " + path.string());
        set.masks.push_back(std::move(m));
    }
    segcodec::validate(set);
    return set;
}

}  // namespace seghaze::io
