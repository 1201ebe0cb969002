#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "seghaze/core.hpp"
#include "seghaze/scatter.hpp"
#include "seghaze/segbackend.hpp"
#include "seghaze/segcodec.hpp"

namespace seghaze::metrics {

inline constexpr double kPsnrCapDb = 99.0;

//! 10 log10(1 / MSE) over all pixels and channels, peak 1. Identical inputs
//! (and anything beyond the cap) report 99 dB so tables stay finite.
inline double psnr(const Image& a, const Image& b) {
    require_same_shape(a, b, "psnr");
    double se = 0;
    for (size_t i = 0; i < a.v.size(); ++i) {
        const double d = a.v[i] - b.v[i];
        se += d * d;
    }
    const double mse = se / double(a.v.size());
    if (mse == 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

struct QualityScore {
    double psnr_db = 0;
    double ssim = 0;
};

//! Mean local SSIM on luma: 8x8 windows, stride 1, C1=(0.01)^2, C2=(0.03)^2,
//! peak 1. Window statistics come from summed-area tables.
inline double ssim(const Image& a, const Image& b) {
    require_same_shape(a, b, "ssim");
    constexpr int win = 8;
    if (a.h < win || a.w < win) throw shape_error("ssim: image smaller than the 8x8 window");
    const Field ya = segcodec::luma(a);
    const Field yb = segcodec::luma(b);

    const int h = a.h, w = a.w;
    const int sh = h + 1, sw = w + 1;
    std::vector<double> sa(size_t(sh) * sw, 0), sb(sa.size(), 0), saa(sa.size(), 0), sbb(sa.size(), 0),
        sab(sa.size(), 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const size_t i = size_t(y) * w + x;
            const size_t s = size_t(y + 1) * sw + (x + 1);
            const size_t up = s - sw, left = s - 1, diag = up - 1;
            sa[s] = ya.v[i] + sa[up] + sa[left] - sa[diag];
            sb[s] = yb.v[i] + sb[up] + sb[left] - sb[diag];
            saa[s] = ya.v[i] * ya.v[i] + saa[up] + saa[left] - saa[diag];
            sbb[s] = yb.v[i] * yb.v[i] + sbb[up] + sbb[left] - sbb[diag];
            sab[s] = ya.v[i] * yb.v[i] + sab[up] + sab[left] - sab[diag];
        }
    auto box = [&](const std::vector<double>& s, int y, int x) {
        const size_t r0 = size_t(y) * sw, r1 = size_t(y + win) * sw;
        return s[r1 + x + win] - s[r0 + x + win] - s[r1 + x] + s[r0 + x];
    };

    constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    constexpr double n = double(win * win);
    double total = 0;
    size_t windows = 0;
    for (int y = 0; y + win <= h; ++y)
        for (int x = 0; x + win <= w; ++x) {
            const double ma = box(sa, y, x) / n;
            const double mb = box(sb, y, x) / n;
            const double va = box(saa, y, x) / n - ma * ma;
            const double vb = box(sbb, y, x) / n - mb * mb;
            const double cov = box(sab, y, x) / n - ma * mb;
            total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++windows;
        }
    return total / double(windows);
}

inline QualityScore quality(const Image& a, const Image& b) { return {psnr(a, b), ssim(a, b)}; }

// ---------------------------------------------------------------------------
// Segment-count statistics across segmenter tiers
// ---------------------------------------------------------------------------

struct SegStatsRow {
    std::string label;          // e.g. "haze middle"
    double mean_segments = 0;
    double percent = 0;         // vs clean x largest tier
};

struct ScenePair {
    scatter::Scene scene;
    Image hazy;
};

//! Mean segments per image for every (tier x hazy/clean) cell. The reference
//! (100%) is the clean run of the last tier in the list, so callers pass
//! tiers in ascending capability order.
inline std::vector<SegStatsRow> segment_stats(const std::vector<ScenePair>& dataset,
                                              const std::vector<segbackend::Tier>& tiers) {
    if (dataset.empty()) throw data_error("segment_stats: empty dataset");
    if (tiers.empty()) throw data_error("segment_stats: no tiers");

    std::vector<SegStatsRow> rows;
    double reference = 0;
    for (const auto tier : tiers) {
        const auto spec = segbackend::tier_spec(tier);
        double clean_sum = 0, hazy_sum = 0;
        for (const auto& item : dataset) {
            clean_sum += double(segbackend::segment(item.scene.radiance, spec, &item.scene).count());
            hazy_sum += double(segbackend::segment(item.hazy, spec, &item.scene).count());
        }
        const double n = double(dataset.size());
        rows.push_back({std::string("nohaze ") + segbackend::tier_name(tier), clean_sum / n, 0});
        rows.push_back({std::string("haze ") + segbackend::tier_name(tier), hazy_sum / n, 0});
        if (tier == tiers.back()) reference = clean_sum / n;
    }
    if (reference <= 0) throw data_error("segment_stats: reference tier found no segments");
    for (auto& row : rows) row.percent = 100.0 * row.mean_segments / reference;
    return rows;
}

// ---------------------------------------------------------------------------
// Comparison tables and loss-curve series
// ---------------------------------------------------------------------------

struct RunResult {
    std::string dataset;
    std::string variant;
    double psnr_db = 0;
    double ssim = 0;
    std::vector<double> loss_history;
};

struct Report {
    std::string table_text;
    std::vector<std::filesystem::path> files_written;
};

namespace detail {

inline std::string cell_text(double psnr_db, int gap_percent, double ssim_val) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f(%d%%) / %.3f", psnr_db, gap_percent, ssim_val);
    return buf;
}

}  // namespace detail

//! Emit the per-dataset x per-variant comparison (cells "PSNR(gap%) / SSIM",
//! gap measured against the best PSNR in the row) plus one loss-curve CSV per
//! dataset. Everything is written under out_dir.
inline Report report(const std::vector<RunResult>& results, const std::filesystem::path& out_dir) {
    if (results.empty()) throw data_error("report: no results");
    std::map<std::string, std::map<std::string, const RunResult*>> grid;  // dataset -> variant -> result
    std::vector<std::string> dataset_order, variant_order;
    for (const auto& r : results) {
        if (!grid.count(r.dataset)) dataset_order.push_back(r.dataset);
        auto& row = grid[r.dataset];
        if (row.count(r.variant))
            throw grouping_error("report: duplicate cell " + r.dataset + " / " + r.variant);
        if (std::find(variant_order.begin(), variant_order.end(), r.variant) == variant_order.end())
            variant_order.push_back(r.variant);
        row[r.variant] = &r;
    }

    std::filesystem::create_directories(out_dir);
    Report rep;

    // Aligned text + CSV table.
    std::vector<std::vector<std::string>> cells(dataset_order.size() + 1);
    cells[0].push_back("dataset");
    for (const auto& v : variant_order) cells[0].push_back(v);
    for (size_t di = 0; di < dataset_order.size(); ++di) {
        const auto& row = grid[dataset_order[di]];
        double best = 0;
        for (const auto& [_, r] : row) best = std::max(best, r->psnr_db);
        cells[di + 1].push_back(dataset_order[di]);
        for (const auto& v : variant_order) {
            auto it = row.find(v);
            if (it == row.end()) {
                cells[di + 1].push_back("-");
                continue;
            }
            const int gap = int(std::lround(best > 0 ? 100.0 * (best - it->second->psnr_db) / best : 0.0));
            cells[di + 1].push_back(detail::cell_text(it->second->psnr_db, gap, it->second->ssim));
        }
    }
    std::vector<size_t> widths(cells[0].size(), 0);
    for (const auto& row : cells)
        for (size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    std::string text;
    for (const auto& row : cells) {
        for (size_t c = 0; c < row.size(); ++c) {
            text += row[c];
            if (c + 1 < row.size()) text += std::string(widths[c] - row[c].size() + 2, ' ');
        }
        text += "\n";
    }
    rep.table_text = text;

    {
        std::ofstream os(out_dir / "comparison.txt");
        os << text;
        std::ofstream csv(out_dir / "comparison.csv");
        csv << "dataset,variant,psnr_db,gap_percent,ssim\n";
        for (const auto& ds : dataset_order) {
            const auto& row = grid[ds];
            double best = 0;
            for (const auto& [_, r] : row) best = std::max(best, r->psnr_db);
            for (const auto& v : variant_order) {
                auto it = row.find(v);
                if (it == row.end()) continue;
                const int gap = int(std::lround(best > 0 ? 100.0 * (best - it->second->psnr_db) / best : 0.0));
                char buf[96];
                std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%d,%.6f\n", ds.c_str(), v.c_str(),
                              it->second->psnr_db, gap, it->second->ssim);
                csv << buf;
            }
        }
        rep.files_written.push_back(out_dir / "comparison.txt");
        rep.files_written.push_back(out_dir / "comparison.csv");
    }

    // Loss curves: one CSV per dataset, one column per variant, truncated to
    // the shortest series with an explicit note when lengths differ.
    for (const auto& ds : dataset_order) {
        const auto& row = grid[ds];
        size_t min_len = SIZE_MAX, max_len = 0;
        bool any = false;
        for (const auto& [_, r] : row)
            if (!r->loss_history.empty()) {
                any = true;
                min_len = std::min(min_len, r->loss_history.size());
                max_len = std::max(max_len, r->loss_history.size());
            }
        if (!any) continue;
        const auto path = out_dir / ("curves_" + ds + ".csv");
        std::ofstream os(path);
        if (min_len != max_len)
            os << "# truncated to " << min_len << " epochs (longest series had " << max_len << ")\n";
        os << "epoch";
        for (const auto& v : variant_order)
            if (row.count(v) && !row.at(v)->loss_history.empty()) os << "," << v;
        os << "\n";
        for (size_t e = 0; e < min_len; ++e) {
            os << e;
            for (const auto& v : variant_order) {
                if (!row.count(v) || row.at(v)->loss_history.empty()) continue;
                char buf[32];
                std::snprintf(buf, sizeof(buf), ",%.9g", row.at(v)->loss_history[e]);
                os << buf;
            }
            os << "\n";
        }
        rep.files_written.push_back(path);
    }
    return rep;
}

}  // namespace seghaze::metrics
