#pragma once

#include <cmath>
#include <utility>

#include "seghaze/core.hpp"
#include "seghaze/rng.hpp"

namespace seghaze::scatter {

//! Transmission t(x) in (0,1]; t = 1 exactly where beta*d = 0.
using TransmissionMap = Field;
//! Attenuation coefficient beta(x) >= 0 per unit distance.
using DensityField = Field;

enum class DepthMode { LinearRamp, Radial, RegionConstant };
enum class DensityMode { Uniform, SmoothGradient, Blobs };

struct SceneConfig {
    int height = 64;
    int width = 64;
    int regions = 12;           // Voronoi site count k
    DepthMode depth_mode = DepthMode::LinearRamp;
    double depth_min = 1.0;
    double depth_max = 15.0;
    DensityMode density_mode = DensityMode::Uniform;
    double beta_min = 0.02;
    double beta_max = 0.25;
    double airlight_min = 0.7;  // airlight drawn per channel in [min, max]
    double airlight_max = 0.95;
};

//! A synthetic clean scene: per-pixel radiance, depth, ground-truth segment
//! labels and the global airlight used when hazing it.
struct Scene {
    Image radiance;
    Field depth;
    LabelMap regions;
    DensityField density;
    Vec3 airlight{};
    int region_count = 0;
};

// ---------------------------------------------------------------------------
// Forward model
// ---------------------------------------------------------------------------

//! t(x) = exp(-beta(x) * d(x)), elementwise.
inline TransmissionMap transmission(const Field& depth, const DensityField& density) {
    require_same_shape(depth, density, "transmission");
    TransmissionMap t(depth.h, depth.w);
    for (size_t i = 0; i < depth.v.size(); ++i) {
        const double d = depth.v[i];
        const double b = density.v[i];
        if (d < 0.0) throw domain_error("transmission: negative depth");
        if (b < 0.0) throw domain_error("transmission: negative density");
        t.v[i] = std::exp(-b * d);
    }
    return t;
}

//! I(x) = R(x) t(x) + L (1 - t(x)) per channel.
inline Image apply_haze(const Image& radiance, const TransmissionMap& t, const Vec3& airlight) {
    if (radiance.h != t.h || radiance.w != t.w) throw shape_error("apply_haze: image/transmission shapes differ");
    Image out(radiance.h, radiance.w);
    for (int c = 0; c < 3; ++c) {
        const double L = airlight[c];
        const double* r = radiance.plane(c);
        double* o = out.plane(c);
        for (size_t i = 0; i < t.v.size(); ++i) o[i] = clamp01(r[i] * t.v[i] + L * (1.0 - t.v[i]));
    }
    return out;
}

//! Algebraic inverse of apply_haze; t below t_floor is clamped, never divided raw.
inline Image analytic_dehaze(const Image& image, const TransmissionMap& t, const Vec3& airlight,
                             double t_floor = 0.05) {
    if (image.h != t.h || image.w != t.w) throw shape_error("analytic_dehaze: image/transmission shapes differ");
    if (!(t_floor > 0.0)) throw domain_error("analytic_dehaze: t_floor must be positive");
    Image out(image.h, image.w);
    for (int c = 0; c < 3; ++c) {
        const double L = airlight[c];
        const double* in = image.plane(c);
        double* o = out.plane(c);
        for (size_t i = 0; i < t.v.size(); ++i) {
            const double tv = std::max(t.v[i], t_floor);
            o[i] = clamp01((in[i] - L * (1.0 - tv)) / tv);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mask-guided analytic recovery
//
// Within one segment of constant radiance R_s, every pixel satisfies
// I(x) - L = t(x) * (R_s - L): the offsets are parallel, scaled by t. The
// direction is recovered from the pixel mean, the magnitude by the convention
// max t = 1 inside the segment. Segments where I == L everywhere are
// unrecoverable and come back filled with airlight, t = 0.
// ---------------------------------------------------------------------------

struct MaskRecovery {
    Image radiance;
    TransmissionMap t;
    std::vector<int> unrecoverable;  // region ids flagged as saturated fog
};

inline MaskRecovery mask_guided_recover(const Image& image, const LabelMap& regions, const Vec3& airlight) {
    if (image.h != regions.h || image.w != regions.w)
        throw shape_error("mask_guided_recover: image/label shapes differ");

    int32_t max_label = -1;
    for (int32_t l : regions.v) max_label = std::max(max_label, l);
    const int n = int(max_label) + 1;

    // Mean offset per region, then per-pixel projection onto its direction.
    std::vector<std::array<double, 3>> mean(n, {0, 0, 0});
    std::vector<size_t> count(n, 0);
    const size_t npx = image.pixels();
    for (size_t i = 0; i < npx; ++i) {
        const int32_t s = regions.v[i];
        for (int c = 0; c < 3; ++c) mean[s][c] += image.v[size_t(c) * npx + i] - airlight[c];
        ++count[s];
    }

    std::vector<std::array<double, 3>> dir(n, {0, 0, 0});
    std::vector<bool> dead(n, false);
    for (int s = 0; s < n; ++s) {
        double norm2 = 0;
        for (int c = 0; c < 3; ++c) norm2 += mean[s][c] * mean[s][c];
        const double norm = std::sqrt(norm2);
        if (count[s] == 0 || norm < 1e-12) {
            dead[s] = true;
            continue;
        }
        for (int c = 0; c < 3; ++c) dir[s][c] = mean[s][c] / norm;
    }

    // Projection magnitude plays the role of an unnormalized t.
    std::vector<double> tmax(n, 0.0);
    Field proj(image.h, image.w);
    for (size_t i = 0; i < npx; ++i) {
        const int32_t s = regions.v[i];
        if (dead[s]) continue;
        double p = 0;
        for (int c = 0; c < 3; ++c) p += (image.v[size_t(c) * npx + i] - airlight[c]) * dir[s][c];
        p = std::max(p, 0.0);
        proj.v[i] = p;
        tmax[s] = std::max(tmax[s], p);
    }

    MaskRecovery out;
    out.radiance = Image(image.h, image.w);
    out.t = TransmissionMap(image.h, image.w);
    for (int s = 0; s < n; ++s)
        if (dead[s] && count[s] > 0) out.unrecoverable.push_back(s);

    for (size_t i = 0; i < npx; ++i) {
        const int32_t s = regions.v[i];
        if (dead[s] || tmax[s] <= 0.0) {
            for (int c = 0; c < 3; ++c) out.radiance.v[size_t(c) * npx + i] = airlight[c];
            out.t.v[i] = 0.0;
            continue;
        }
        for (int c = 0; c < 3; ++c)
            out.radiance.v[size_t(c) * npx + i] = clamp01(airlight[c] + dir[s][c] * tmax[s]);
        out.t.v[i] = proj.v[i] / tmax[s];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Procedural scene synthesis (stand-in for rendered fog data)
// ---------------------------------------------------------------------------

inline Scene synth_scene(uint64_t seed, const SceneConfig& cfg) {
    const int h = cfg.height, w = cfg.width, k = cfg.regions;
    if (h <= 0 || w <= 0) throw config_error("synth_scene: non-positive dimensions");
    if (k < 1 || k > 200) throw config_error("synth_scene: region count must be in [1, 200]");
    if (size_t(k) > size_t(h) * w) throw config_error("synth_scene: more regions than pixels");
    if (cfg.depth_min < 0 || cfg.depth_max < cfg.depth_min) throw config_error("synth_scene: bad depth range");
    if (cfg.beta_min < 0 || cfg.beta_max < cfg.beta_min) throw config_error("synth_scene: bad density range");

    Rng rng(seed);
    Scene sc;
    sc.region_count = k;

    // Voronoi sites on distinct pixels; every site owns at least its own pixel.
    std::vector<std::pair<int, int>> sites;
    sites.reserve(k);
    std::vector<uint8_t> used(size_t(h) * w, 0);
    while (int(sites.size()) < k) {
        const int y = int(rng.below(uint64_t(h)));
        const int x = int(rng.below(uint64_t(w)));
        if (used[size_t(y) * w + x]) continue;
        used[size_t(y) * w + x] = 1;
        sites.emplace_back(y, x);
    }

    sc.regions = LabelMap(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int best = 0;
            long best_d2 = (long(y - sites[0].first) * (y - sites[0].first)) +
                           (long(x - sites[0].second) * (x - sites[0].second));
            for (int s = 1; s < k; ++s) {
                const long dy = y - sites[s].first, dx = x - sites[s].second;
                const long d2 = dy * dy + dx * dx;
                if (d2 < best_d2) {  // ties keep the lowest site index
                    best_d2 = d2;
                    best = s;
                }
            }
            sc.regions.at(y, x) = best;
        }
    }

    // Piecewise-constant radiance, one color per region.
    std::vector<Vec3> colors(k);
    for (auto& col : colors)
        for (auto& ch : col) ch = rng.uniform(0.05, 0.95);
    sc.radiance = Image(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto& col = colors[sc.regions.at(y, x)];
            for (int c = 0; c < 3; ++c) sc.radiance.at(c, y, x) = col[c];
        }

    // Depth field.
    sc.depth = Field(h, w);
    switch (cfg.depth_mode) {
        case DepthMode::LinearRamp: {
            const double ang = rng.uniform(0.0, 2.0 * M_PI);
            const double nx = std::cos(ang), ny = std::sin(ang);
            double lo = 1e300, hi = -1e300;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double p = nx * x + ny * y;
                    lo = std::min(lo, p);
                    hi = std::max(hi, p);
                }
            const double span = std::max(hi - lo, 1e-12);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    sc.depth.at(y, x) =
                        cfg.depth_min + (cfg.depth_max - cfg.depth_min) * ((nx * x + ny * y) - lo) / span;
            break;
        }
        case DepthMode::Radial: {
            const double cy = rng.uniform(0.0, double(h - 1));
            const double cx = rng.uniform(0.0, double(w - 1));
            double hi = 0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    hi = std::max(hi, std::hypot(y - cy, x - cx));
            hi = std::max(hi, 1e-12);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    sc.depth.at(y, x) =
                        cfg.depth_min + (cfg.depth_max - cfg.depth_min) * std::hypot(y - cy, x - cx) / hi;
            break;
        }
        case DepthMode::RegionConstant: {
            // Fronto-parallel layer model: the largest segment is the far
            // backdrop (sky, wall) and each smaller segment steps a fixed
            // fraction of the depth range nearer, with jitter. The area rank
            // -> depth step is the same in every scene, so segments are
            // consistent iso-degradation strata across a dataset.
            std::vector<size_t> area(k, 0);
            for (int32_t l : sc.regions.v) ++area[l];
            std::vector<int> order(k);
            for (int i = 0; i < k; ++i) order[i] = i;
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                if (area[a] != area[b]) return area[a] > area[b];
                return a < b;
            });
            const double span = cfg.depth_max - cfg.depth_min;
            constexpr double kLayerStep = 1.0 / 20.0;  // rank 20+ reaches the near plane
            std::vector<double> d(k);
            for (int pos = 0; pos < k; ++pos) {
                const double frac = std::min(1.0, pos * kLayerStep);
                const double jitter = rng.uniform(-0.04, 0.04) * span;
                d[order[pos]] = std::clamp(cfg.depth_max - span * frac + jitter, cfg.depth_min, cfg.depth_max);
            }
            for (size_t i = 0; i < sc.depth.v.size(); ++i) sc.depth.v[i] = d[sc.regions.v[i]];
            break;
        }
    }

    // Density field.
    sc.density = DensityField(h, w);
    switch (cfg.density_mode) {
        case DensityMode::Uniform: {
            const double b = rng.uniform(cfg.beta_min, cfg.beta_max);
            for (auto& bi : sc.density.v) bi = b;
            break;
        }
        case DensityMode::SmoothGradient: {
            const double ang = rng.uniform(0.0, 2.0 * M_PI);
            const double nx = std::cos(ang), ny = std::sin(ang);
            double lo = 1e300, hi = -1e300;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double p = nx * x + ny * y;
                    lo = std::min(lo, p);
                    hi = std::max(hi, p);
                }
            const double span = std::max(hi - lo, 1e-12);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    sc.density.at(y, x) =
                        cfg.beta_min + (cfg.beta_max - cfg.beta_min) * ((nx * x + ny * y) - lo) / span;
            break;
        }
        case DensityMode::Blobs: {
            // Dense pockets smaller than typical regions, over a thin base:
            // most of every region stays visible while parts sink into fog.
            const int nblob = 6 + int(rng.below(7));  // 6..12 gaussian plumes
            std::vector<std::array<double, 4>> blobs(nblob);
            for (auto& b : blobs) {
                b[0] = rng.uniform(0.0, double(h - 1));                        // center y
                b[1] = rng.uniform(0.0, double(w - 1));                        // center x
                b[2] = rng.uniform(0.05, 0.16) * std::max(h, w);               // sigma
                b[3] = rng.uniform(0.5, 1.0) * (cfg.beta_max - cfg.beta_min);  // amplitude
            }
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    double b = cfg.beta_min;
                    for (const auto& bl : blobs) {
                        const double dy = (y - bl[0]) / bl[2], dx = (x - bl[1]) / bl[2];
                        b += bl[3] * std::exp(-0.5 * (dy * dy + dx * dx));
                    }
                    sc.density.at(y, x) = std::min(b, cfg.beta_max);
                }
            break;
        }
    }

    for (auto& ch : sc.airlight) ch = rng.uniform(cfg.airlight_min, cfg.airlight_max);
    return sc;
}

//! Convenience: scene plus its hazed rendering under its own density field.
inline Image render_hazy(const Scene& sc) {
    return apply_haze(sc.radiance, transmission(sc.depth, sc.density), sc.airlight);
}

//! Hazed rendering under a uniform density, ignoring the scene's own field.
inline Image render_hazy_uniform(const Scene& sc, double beta) {
    if (beta < 0) throw domain_error("render_hazy_uniform: negative density");
    DensityField b(sc.depth.h, sc.depth.w, beta);
    return apply_haze(sc.radiance, transmission(sc.depth, b), sc.airlight);
}

}  // namespace seghaze::scatter
