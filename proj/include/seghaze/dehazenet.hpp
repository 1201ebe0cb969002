#pragma once

#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>

#include <json.hpp>

#include "seghaze/metrics.hpp"
#include "seghaze/nn.hpp"
#include "seghaze/segbackend.hpp"

namespace seghaze::dehazenet {

using nn::Tensor;
using nn::UNet;

enum class SizeTier { Tiny, Small, Base };

inline const char* tier_name(SizeTier t) {
    switch (t) {
        case SizeTier::Tiny: return "tiny";
        case SizeTier::Small: return "small";
        case SizeTier::Base: return "base";
    }
    return "?";
}

//! Parameter budgets: tiny ~0.1M, small ~1M, base ~5M.
struct ModelConfig {
    int input_channels = 4;
    SizeTier size_tier = SizeTier::Tiny;
    int base_width = 0;  // 0 = tier default
    int depth = 0;       // 0 = tier default

    int resolved_width() const {
        if (base_width > 0) return base_width;
        switch (size_tier) {
            case SizeTier::Tiny: return 16;
            case SizeTier::Small: return 24;
            case SizeTier::Base: return 48;
        }
        return 16;
    }
    int resolved_depth() const {
        if (depth > 0) return depth;
        return size_tier == SizeTier::Tiny ? 2 : 3;
    }
};

inline UNet<float> build_model(const ModelConfig& cfg, uint64_t seed) {
    if (cfg.input_channels != 3 && cfg.input_channels != 4)
        throw config_error("build_model: input channel count must be 3 or 4");
    return UNet<float>(cfg.input_channels, cfg.resolved_width(), cfg.resolved_depth(), seed);
}

// ---------------------------------------------------------------------------
// Mask variants: what occupies the fourth channel.
// ---------------------------------------------------------------------------

enum class MaskVariant {
    HazeGray,    // luma of the hazy input (baseline)
    NohazeGray,  // luma of the paired clean image (ceiling)
    HazeSeg,     // coded segmentation of the hazy input
    NohazeSeg,   // coded segmentation of the clean image
    DehazeSeg,   // coded segmentation of a pre-dehazed input
};

inline const char* variant_name(MaskVariant v) {
    switch (v) {
        case MaskVariant::HazeGray: return "haze_gray";
        case MaskVariant::NohazeGray: return "nohaze_gray";
        case MaskVariant::HazeSeg: return "haze_seg";
        case MaskVariant::NohazeSeg: return "nohaze_seg";
        case MaskVariant::DehazeSeg: return "dehaze_seg";
    }
    return "?";
}

inline MaskVariant variant_from_name(const std::string& s) {
    for (auto v : {MaskVariant::HazeGray, MaskVariant::NohazeGray, MaskVariant::HazeSeg, MaskVariant::NohazeSeg,
                   MaskVariant::DehazeSeg})
        if (s == variant_name(v)) return v;
    throw config_error("unknown mask variant: " + s);
}

//! Whatever the chosen variant needs beyond the hazy image itself.
struct AssembleContext {
    const Image* clean = nullptr;                       // NOHAZE_* variants
    const scatter::Scene* scene = nullptr;              // oracle segmenter
    const segbackend::SegmenterSpec* segmenter = nullptr;
    const segcodec::SegMaskSet* masks = nullptr;        // precomputed masks override the segmenter
    std::function<Image(const Image&)> predehaze;       // DEHAZE_SEG stage 1
};

namespace detail {

inline Tensor<float> to_tensor(const Image& img) {
    Tensor<float> t(3, img.h, img.w);
    for (size_t i = 0; i < img.v.size(); ++i) t.v[i] = float(img.v[i]);
    return t;
}

inline Image to_image_clipped(const Tensor<float>& t) {
    Image img(t.h, t.w);
    for (size_t i = 0; i < img.v.size(); ++i) img.v[i] = clamp01(double(t.v[i]));
    return img;
}

inline Field seg_channel(const Image& source, const AssembleContext& ctx) {
    segcodec::SegMaskSet set;
    if (ctx.masks) {
        set = *ctx.masks;
    } else {
        if (!ctx.segmenter) throw config_error("segmentation variant needs a segmenter or precomputed masks");
        set = segbackend::segment(source, *ctx.segmenter, ctx.scene);
    }
    return segcodec::normalized(segcodec::encode(set));
}

}  // namespace detail

//! Stack hazy RGB with the variant's fourth channel; everything in [0,1].
inline Tensor<float> assemble_input(const Image& hazy, MaskVariant variant, const AssembleContext& ctx) {
    Field ch4;
    switch (variant) {
        case MaskVariant::HazeGray:
            ch4 = segcodec::luma(hazy);
            break;
        case MaskVariant::NohazeGray:
            if (!ctx.clean) throw config_error("nohaze_gray needs the paired clean image");
            require_same_shape(hazy, *ctx.clean, "assemble_input");
            ch4 = segcodec::luma(*ctx.clean);
            break;
        case MaskVariant::HazeSeg:
            ch4 = detail::seg_channel(hazy, ctx);
            break;
        case MaskVariant::NohazeSeg:
            if (!ctx.clean) throw config_error("nohaze_seg needs the paired clean image");
            require_same_shape(hazy, *ctx.clean, "assemble_input");
            ch4 = detail::seg_channel(*ctx.clean, ctx);
            break;
        case MaskVariant::DehazeSeg: {
            if (!ctx.predehaze) throw config_error("dehaze_seg needs a pre-dehaze model");
            const Image stage1 = ctx.predehaze(hazy);
            ch4 = detail::seg_channel(stage1, ctx);
            break;
        }
    }
    if (ch4.h != hazy.h || ch4.w != hazy.w) throw shape_error("assemble_input: channel-4 shape mismatch");

    Tensor<float> t(4, hazy.h, hazy.w);
    const size_t npx = hazy.pixels();
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < npx; ++i) t.v[size_t(c) * npx + i] = float(hazy.v[size_t(c) * npx + i]);
    for (size_t i = 0; i < npx; ++i) t.v[size_t(3) * npx + i] = float(ch4.v[i]);
    return t;
}

// ---------------------------------------------------------------------------
// Inference with automatic reflect padding to the model's spatial multiple.
// ---------------------------------------------------------------------------

namespace detail {

inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n - 2;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - m;
}

inline Tensor<float> pad_reflect(const Tensor<float>& t, int th, int tw) {
    Tensor<float> out(t.c, th, tw);
    for (int c = 0; c < t.c; ++c) {
        const float* in = t.plane(c);
        float* o = out.plane(c);
        for (int y = 0; y < th; ++y) {
            const int sy = reflect_index(y, t.h);
            for (int x = 0; x < tw; ++x) o[size_t(y) * tw + x] = in[size_t(sy) * t.w + reflect_index(x, t.w)];
        }
    }
    return out;
}

}  // namespace detail

inline Image infer(const UNet<float>& model, const Tensor<float>& input) {
    if (input.c != model.in_channels())
        throw shape_error("infer: input channel count does not match the model");
    const int m = model.spatial_multiple();
    const int h = input.h, w = input.w;
    const int ph = (h + m - 1) / m * m, pw = (w + m - 1) / m * m;
    nn::Trace<float> tr;
    Tensor<float> out;
    if (ph == h && pw == w) {
        out = model.forward(input, tr);
    } else {
        const Tensor<float> padded = detail::pad_reflect(input, ph, pw);
        Tensor<float> full = model.forward(padded, tr);
        out = Tensor<float>(3, h, w);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < h; ++y)
                std::copy(full.plane(c) + size_t(y) * pw, full.plane(c) + size_t(y) * pw + w,
                          out.plane(c) + size_t(y) * w);
    }
    return detail::to_image_clipped(out);
}

//! Dehaze with the stage-1 model, segment that result, then run the final
//! model conditioned on the improved mask.
inline Image two_stage_infer(const Image& hazy, const std::function<Image(const Image&)>& stage1,
                             const segbackend::SegmenterSpec& spec, const scatter::Scene* scene,
                             const UNet<float>& final_model) {
    AssembleContext ctx;
    ctx.segmenter = &spec;
    ctx.scene = scene;
    ctx.predehaze = stage1;
    return infer(final_model, assemble_input(hazy, MaskVariant::DehazeSeg, ctx));
}

inline Image two_stage_infer(const Image& hazy, const UNet<float>& predehaze_model,
                             const segbackend::SegmenterSpec& spec, const scatter::Scene* scene,
                             const UNet<float>& final_model) {
    auto stage1 = [&](const Image& img) {
        AssembleContext ctx;
        return infer(predehaze_model, assemble_input(img, MaskVariant::HazeGray, ctx));
    };
    return two_stage_infer(hazy, stage1, spec, scene, final_model);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

//! One assembled example: 4-channel input, 3-channel target, plus the clean
//! reference image used for validation metrics.
struct Sample {
    Tensor<float> input;
    Tensor<float> target;
    Image clean;
};

struct TrainOptions {
    int epochs = 16;
    int batch_size = 8;
    int patch = 64;
    double lr = 1e-3;
    double rms_decay = 0.9;
    double eps = 1e-8;
};

struct EpochStat {
    double train_loss = 0;
    double val_psnr = 0;
    double wall_ms = 0;
};

struct TrainRecord {
    std::vector<EpochStat> epochs;
    double final_psnr = 0;
    double final_ssim = 0;
    uint64_t seed = 0;
};

namespace detail {

inline void crop_into(const Tensor<float>& src, Tensor<float>& dst, int oy, int ox, int ph, int pw) {
    dst = Tensor<float>(src.c, ph, pw);
    for (int c = 0; c < src.c; ++c)
        for (int y = 0; y < ph; ++y)
            std::copy(src.plane(c) + size_t(oy + y) * src.w + ox,
                      src.plane(c) + size_t(oy + y) * src.w + ox + pw, dst.plane(c) + size_t(y) * pw);
}

}  // namespace detail

//! Deterministic training loop: seeded shuffling, fixed batch partition,
//! gradients averaged in sample order. Identical seeds reproduce identical
//! loss histories bit for bit.
inline std::pair<UNet<float>, TrainRecord> train(const std::vector<Sample>& train_set,
                                                 const std::vector<Sample>& val_set, const ModelConfig& cfg,
                                                 const TrainOptions& opt, uint64_t seed) {
    if (train_set.empty()) throw data_error("train: empty dataset");
    if (opt.epochs < 1 || opt.batch_size < 1) throw config_error("train: bad epoch or batch count");

    UNet<float> model = build_model(cfg, seed);
    nn::RmsProp<float> optimizer(model, opt.lr, opt.rms_decay, opt.eps);
    Rng shuffle_rng = Rng(seed).fork(0x5eed);

    TrainRecord record;
    record.seed = seed;

    std::vector<size_t> order(train_set.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    nn::Trace<float> tr;
    Tensor<float> cropped_in, cropped_tg, gout;

    auto validate = [&]() {
        if (val_set.empty()) return 0.0;
        double acc = 0;
        for (const auto& s : val_set) acc += metrics::psnr(infer(model, s.input), s.clean);
        return acc / double(val_set.size());
    };

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(order);
        double loss_acc = 0;
        size_t loss_n = 0;
        for (size_t begin = 0; begin < order.size(); begin += size_t(opt.batch_size)) {
            const size_t end = std::min(order.size(), begin + size_t(opt.batch_size));
            model.zero_grads();
            const double scale = 1.0 / double(end - begin);
            for (size_t bi = begin; bi < end; ++bi) {
                const Sample& s = train_set[order[bi]];
                const Tensor<float>* input = &s.input;
                const Tensor<float>* target = &s.target;
                if (s.input.h > opt.patch || s.input.w > opt.patch) {
                    const int ph = std::min(opt.patch, s.input.h), pw = std::min(opt.patch, s.input.w);
                    const int oy = int(shuffle_rng.below(uint64_t(s.input.h - ph + 1)));
                    const int ox = int(shuffle_rng.below(uint64_t(s.input.w - pw + 1)));
                    detail::crop_into(s.input, cropped_in, oy, ox, ph, pw);
                    detail::crop_into(s.target, cropped_tg, oy, ox, ph, pw);
                    input = &cropped_in;
                    target = &cropped_tg;
                }
                const Tensor<float> out = model.forward(*input, tr);
                const double loss = nn::l1_loss(out, *target, gout, scale);
                if (!std::isfinite(loss))
                    throw training_error("train: loss diverged at epoch " + std::to_string(epoch));
                model.backward(tr, gout);
                loss_acc += loss;
                ++loss_n;
            }
            optimizer.step(model);
        }
        EpochStat stat;
        stat.train_loss = loss_acc / double(loss_n);
        stat.val_psnr = validate();
        stat.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        record.epochs.push_back(stat);
    }

    record.final_psnr = record.epochs.back().val_psnr;
    if (!val_set.empty()) {
        double acc = 0;
        for (const auto& s : val_set) acc += metrics::ssim(infer(model, s.input), s.clean);
        record.final_ssim = acc / double(val_set.size());
    }
    return {std::move(model), std::move(record)};
}

// ---------------------------------------------------------------------------
// Checkpoint container:
//   bytes 0..7   magic "SEGHZCKP"
//   bytes 8..11  uint32 LE header length N
//   bytes 12..   N bytes of JSON (config snapshot, seed, ordered tensor table)
//   then per tensor, float32 LE blobs in table order.
// ---------------------------------------------------------------------------

inline constexpr char kCheckpointMagic[8] = {'S', 'E', 'G', 'H', 'Z', 'C', 'K', 'P'};
inline constexpr int kCheckpointVersion = 1;

inline void save_checkpoint(const std::filesystem::path& path, const UNet<float>& model, const ModelConfig& cfg,
                            uint64_t seed) {
    nlohmann::json header;
    header["format"] = "seghaze-checkpoint";
    header["version"] = kCheckpointVersion;
    header["seed"] = seed;
    header["model"] = {{"input_channels", cfg.input_channels},
                       {"size_tier", tier_name(cfg.size_tier)},
                       {"base_width", model.width()},
                       {"depth", model.depth()}};
    header["tensors"] = nlohmann::json::array();
    for (const auto& c : model.convs()) {
        header["tensors"].push_back({{"name", c.name + ".w"}, {"shape", {c.cout, c.cin, 3, 3}}});
        header["tensors"].push_back({{"name", c.name + ".b"}, {"shape", {c.cout}}});
    }
    const std::string hs = header.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open " + path.string() + " for writing");
    os.write(kCheckpointMagic, 8);
    const uint32_t n = uint32_t(hs.size());
    const uint8_t nb[4] = {uint8_t(n), uint8_t(n >> 8), uint8_t(n >> 16), uint8_t(n >> 24)};
    os.write(reinterpret_cast<const char*>(nb), 4);
    os.write(hs.data(), std::streamsize(hs.size()));
    static_assert(sizeof(float) == 4);
    for (const auto& c : model.convs()) {
        os.write(reinterpret_cast<const char*>(c.w.data()), std::streamsize(c.w.size() * 4));
        os.write(reinterpret_cast<const char*>(c.b.data()), std::streamsize(c.b.size() * 4));
    }
    if (!os) throw io_error("checkpoint write failed: " + path.string());
}

struct Checkpoint {
    UNet<float> model;
    ModelConfig config;
    uint64_t seed = 0;
};

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw not_found_error("cannot open " + path.string());
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw format_error("not a seghaze checkpoint: " + path.string());
    uint8_t nb[4];
    is.read(reinterpret_cast<char*>(nb), 4);
    const uint32_t n = uint32_t(nb[0]) | uint32_t(nb[1]) << 8 | uint32_t(nb[2]) << 16 | uint32_t(nb[3]) << 24;
    std::string hs(n, '\0');
    is.read(hs.data(), n);
    if (!is) throw format_error("truncated checkpoint header: " + path.string());
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const nlohmann::json::exception& e) {
        throw format_error("bad checkpoint header: " + std::string(e.what()));
    }
    if (header.value("version", 0) != kCheckpointVersion)
        throw format_error("unsupported checkpoint version in " + path.string());

    Checkpoint ck;
    ck.seed = header.at("seed").get<uint64_t>();
    const auto& m = header.at("model");
    ck.config.input_channels = m.at("input_channels").get<int>();
    const std::string tier = m.at("size_tier").get<std::string>();
    for (auto t : {SizeTier::Tiny, SizeTier::Small, SizeTier::Base})
        if (tier == tier_name(t)) ck.config.size_tier = t;
    ck.config.base_width = m.at("base_width").get<int>();
    ck.config.depth = m.at("depth").get<int>();
    ck.model = UNet<float>(ck.config.input_channels, ck.config.base_width, ck.config.depth, ck.seed);

    for (auto& c : ck.model.convs()) {
        is.read(reinterpret_cast<char*>(c.w.data()), std::streamsize(c.w.size() * 4));
        is.read(reinterpret_cast<char*>(c.b.data()), std::streamsize(c.b.size() * 4));
    }
    if (!is) throw format_error("truncated checkpoint blobs: " + path.string());
    return ck;
}

}  // namespace seghaze::dehazenet
