#pragma once

#include <filesystem>
#include <fstream>
#include <optional>

#include <json.hpp>

#include "seghaze/dehazenet.hpp"
#include "seghaze/io/field.hpp"
#include "seghaze/io/maskdir.hpp"
#include "seghaze/io/png.hpp"
#include "seghaze/metrics.hpp"

namespace seghaze::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kConfigVersion = 1;

//! Derive a per-item seed from the experiment seed (splitmix64 step).
inline uint64_t derive_seed(uint64_t seed, uint64_t index) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct SceneBlock {
    int train_count = 200;
    int val_count = 40;
    int height = 64;
    int width = 64;
    int k_min = 8;
    int k_max = 30;
    scatter::DepthMode depth_mode = scatter::DepthMode::LinearRamp;
    double depth_min = 1.0;
    double depth_max = 15.0;
    scatter::DensityMode density_mode = scatter::DensityMode::Blobs;
    double beta_min = 0.02;
    double beta_max = 0.25;
};

enum class IngestLayout { PairDirs, Manifest };

struct ExperimentConfig {
    uint64_t seed = 1;
    std::string dataset_label = "synthetic";
    std::string output_dir = "out";

    bool use_scenes = true;  // false: ingest dataset_root instead
    SceneBlock scenes;
    std::string dataset_root;
    IngestLayout dataset_layout = IngestLayout::PairDirs;

    segbackend::Tier tier = segbackend::Tier::Large;
    std::vector<dehazenet::MaskVariant> variants = {dehazenet::MaskVariant::HazeGray};
    dehazenet::ModelConfig model;
    dehazenet::TrainOptions train;
    std::string predehaze_checkpoint;  // stage-1 model for dehaze_seg
};

namespace detail {

inline const char* depth_mode_name(scatter::DepthMode m) {
    switch (m) {
        case scatter::DepthMode::LinearRamp: return "linear";
        case scatter::DepthMode::Radial: return "radial";
        case scatter::DepthMode::RegionConstant: return "region";
    }
    return "?";
}
inline scatter::DepthMode depth_mode_from(const std::string& s) {
    if (s == "linear") return scatter::DepthMode::LinearRamp;
    if (s == "radial") return scatter::DepthMode::Radial;
    if (s == "region") return scatter::DepthMode::RegionConstant;
    throw config_error("unknown depth mode: " + s);
}
inline const char* density_mode_name(scatter::DensityMode m) {
    switch (m) {
        case scatter::DensityMode::Uniform: return "uniform";
        case scatter::DensityMode::SmoothGradient: return "gradient";
        case scatter::DensityMode::Blobs: return "blobs";
    }
    return "?";
}
inline scatter::DensityMode density_mode_from(const std::string& s) {
    if (s == "uniform") return scatter::DensityMode::Uniform;
    if (s == "gradient") return scatter::DensityMode::SmoothGradient;
    if (s == "blobs") return scatter::DensityMode::Blobs;
    throw config_error("unknown density mode: " + s);
}
inline segbackend::Tier tier_from(const std::string& s) {
    for (auto t : {segbackend::Tier::Small, segbackend::Tier::Middle, segbackend::Tier::Large})
        if (s == segbackend::tier_name(t)) return t;
    throw config_error("unknown tier: " + s);
}
inline dehazenet::SizeTier size_tier_from(const std::string& s) {
    for (auto t : {dehazenet::SizeTier::Tiny, dehazenet::SizeTier::Small, dehazenet::SizeTier::Base})
        if (s == dehazenet::tier_name(t)) return t;
    throw config_error("unknown model size tier: " + s);
}

}  // namespace detail

inline json to_json(const SceneBlock& s) {
    return {{"train_count", s.train_count}, {"val_count", s.val_count},     {"height", s.height},
            {"width", s.width},             {"k_min", s.k_min},             {"k_max", s.k_max},
            {"depth_mode", detail::depth_mode_name(s.depth_mode)},          {"depth_min", s.depth_min},
            {"depth_max", s.depth_max},     {"density_mode", detail::density_mode_name(s.density_mode)},
            {"beta_min", s.beta_min},       {"beta_max", s.beta_max}};
}

inline SceneBlock scene_block_from_json(const json& j) {
    SceneBlock s;
    s.train_count = j.value("train_count", s.train_count);
    s.val_count = j.value("val_count", s.val_count);
    s.height = j.value("height", s.height);
    s.width = j.value("width", s.width);
    s.k_min = j.value("k_min", s.k_min);
    s.k_max = j.value("k_max", s.k_max);
    if (j.contains("depth_mode")) s.depth_mode = detail::depth_mode_from(j["depth_mode"].get<std::string>());
    s.depth_min = j.value("depth_min", s.depth_min);
    s.depth_max = j.value("depth_max", s.depth_max);
    if (j.contains("density_mode"))
        s.density_mode = detail::density_mode_from(j["density_mode"].get<std::string>());
    s.beta_min = j.value("beta_min", s.beta_min);
    s.beta_max = j.value("beta_max", s.beta_max);
    if (s.k_min < 1 || s.k_max < s.k_min) throw config_error("scene block: bad k range");
    return s;
}

inline json to_json(const ExperimentConfig& c) {
    json j;
    j["format_version"] = kConfigVersion;
    j["seed"] = c.seed;
    j["dataset_label"] = c.dataset_label;
    j["output_dir"] = c.output_dir;
    if (c.use_scenes) {
        j["scenes"] = to_json(c.scenes);
    } else {
        j["dataset"] = {{"root", c.dataset_root},
                        {"layout", c.dataset_layout == IngestLayout::PairDirs ? "pair_dirs" : "manifest"}};
    }
    j["segmenter_tier"] = segbackend::tier_name(c.tier);
    j["variants"] = json::array();
    for (auto v : c.variants) j["variants"].push_back(dehazenet::variant_name(v));
    j["model"] = {{"input_channels", c.model.input_channels},
                  {"size_tier", dehazenet::tier_name(c.model.size_tier)},
                  {"base_width", c.model.base_width},
                  {"depth", c.model.depth}};
    j["train"] = {{"epochs", c.train.epochs},   {"batch_size", c.train.batch_size}, {"patch", c.train.patch},
                  {"lr", c.train.lr},           {"rms_decay", c.train.rms_decay},   {"eps", c.train.eps}};
    if (!c.predehaze_checkpoint.empty()) j["predehaze_checkpoint"] = c.predehaze_checkpoint;
    return j;
}

inline ExperimentConfig config_from_json(const json& j) {
    if (j.value("format_version", 0) != kConfigVersion)
        throw config_error("config: missing or unsupported format_version (expected " +
                           std::to_string(kConfigVersion) + ")");
    ExperimentConfig c;
    c.seed = j.value("seed", c.seed);
    c.dataset_label = j.value("dataset_label", c.dataset_label);
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("dataset")) {
        c.use_scenes = false;
        c.dataset_root = j["dataset"].at("root").get<std::string>();
        const std::string layout = j["dataset"].value("layout", "pair_dirs");
        if (layout == "pair_dirs")
            c.dataset_layout = IngestLayout::PairDirs;
        else if (layout == "manifest")
            c.dataset_layout = IngestLayout::Manifest;
        else
            throw config_error("unknown dataset layout: " + layout);
    }
    if (j.contains("scenes")) c.scenes = scene_block_from_json(j["scenes"]);
    if (j.contains("segmenter_tier")) c.tier = detail::tier_from(j["segmenter_tier"].get<std::string>());
    if (j.contains("variants")) {
        c.variants.clear();
        for (const auto& v : j["variants"]) c.variants.push_back(dehazenet::variant_from_name(v.get<std::string>()));
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        c.model.input_channels = m.value("input_channels", 4);
        if (m.contains("size_tier")) c.model.size_tier = detail::size_tier_from(m["size_tier"].get<std::string>());
        c.model.base_width = m.value("base_width", 0);
        c.model.depth = m.value("depth", 0);
    }
    if (j.contains("train")) {
        const auto& t = j["train"];
        c.train.epochs = t.value("epochs", c.train.epochs);
        c.train.batch_size = t.value("batch_size", c.train.batch_size);
        c.train.patch = t.value("patch", c.train.patch);
        c.train.lr = t.value("lr", c.train.lr);
        c.train.rms_decay = t.value("rms_decay", c.train.rms_decay);
        c.train.eps = t.value("eps", c.train.eps);
    }
    c.predehaze_checkpoint = j.value("predehaze_checkpoint", "");
    return c;
}

inline ExperimentConfig load_config(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw not_found_error("cannot open config " + path.string());
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw format_error("bad config JSON: " + std::string(e.what()));
    }
    return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Scene batches
// ---------------------------------------------------------------------------

//! Deterministic scene batch: per-scene seed and region count derive from the
//! experiment seed and the scene index alone.
inline scatter::Scene make_scene(uint64_t experiment_seed, uint64_t index, const SceneBlock& block) {
    const uint64_t s = derive_seed(experiment_seed, index);
    Rng krng(derive_seed(s, 0));
    scatter::SceneConfig cfg;
    cfg.height = block.height;
    cfg.width = block.width;
    cfg.regions = block.k_min + int(krng.below(uint64_t(block.k_max - block.k_min + 1)));
    cfg.depth_mode = block.depth_mode;
    cfg.depth_min = block.depth_min;
    cfg.depth_max = block.depth_max;
    cfg.density_mode = block.density_mode;
    cfg.beta_min = block.beta_min;
    cfg.beta_max = block.beta_max;
    return scatter::synth_scene(derive_seed(s, 1), cfg);
}

// ---------------------------------------------------------------------------
// Dataset synthesis on disk
// ---------------------------------------------------------------------------

//! Write clean/hazy/depth/t/beta/labels per scene plus a manifest. Idempotent
//! for a fixed seed: re-running produces bit-identical files.
inline fs::path synth_dataset(const ExperimentConfig& cfg) {
    const fs::path root = cfg.output_dir;
    fs::create_directories(root);
    json manifest;
    manifest["format"] = "seghaze-dataset";
    manifest["version"] = 1;
    manifest["seed"] = cfg.seed;
    manifest["dataset_label"] = cfg.dataset_label;
    manifest["scenes_config"] = to_json(cfg.scenes);
    manifest["scenes"] = json::array();

    const int total = cfg.scenes.train_count + cfg.scenes.val_count;
    for (int i = 0; i < total; ++i) {
        const scatter::Scene sc = make_scene(cfg.seed, uint64_t(i), cfg.scenes);
        const scatter::TransmissionMap t = scatter::transmission(sc.depth, sc.density);
        const Image hazy = scatter::apply_haze(sc.radiance, t, sc.airlight);

        char stem[32];
        std::snprintf(stem, sizeof(stem), "scene_%04d", i);
        const std::string s(stem);
        io::write_png_rgb(root / (s + "_clean.png"), sc.radiance, 16);
        io::write_png_rgb(root / (s + "_hazy.png"), hazy, 16);
        io::write_labels(root / (s + "_labels.png"), sc.regions);
        io::write_field(root / (s + "_depth.f32"), sc.depth);
        io::write_field(root / (s + "_trans.f32"), t);
        io::write_field(root / (s + "_beta.f32"), sc.density);

        manifest["scenes"].push_back({{"id", s},
                                      {"split", i < cfg.scenes.train_count ? "train" : "val"},
                                      {"clean", s + "_clean.png"},
                                      {"hazy", s + "_hazy.png"},
                                      {"labels", s + "_labels.png"},
                                      {"depth", s + "_depth.f32"},
                                      {"trans", s + "_trans.f32"},
                                      {"beta", s + "_beta.f32"},
                                      {"airlight", {sc.airlight[0], sc.airlight[1], sc.airlight[2]}}});
    }
    std::ofstream os(root / "manifest.json");
    if (!os) throw io_error("cannot write dataset manifest under " + root.string());
    os << manifest.dump(2) << "\n";
    return root / "manifest.json";
}

// ---------------------------------------------------------------------------
// Dataset ingestion
// ---------------------------------------------------------------------------

struct PairEntry {
    fs::path hazy;
    fs::path clean;
    std::optional<fs::path> mask_dir;
    std::optional<fs::path> depth;
    std::optional<fs::path> beta;
    std::string split;  // "train" or "val"
};

struct PairedDataset {
    std::vector<PairEntry> entries;
    std::vector<std::string> warnings;

    size_t count(const std::string& split) const {
        size_t n = 0;
        for (const auto& e : entries) n += (e.split == split);
        return n;
    }
};

//! Folder ingestion. PairDirs expects root/hazy and root/gt with matching
//! names; Manifest expects a seghaze-dataset manifest.json. The split for
//! PairDirs is a seeded shuffle with roughly one sixth held out.
inline PairedDataset ingest(const fs::path& root, IngestLayout layout, uint64_t seed = 1) {
    PairedDataset ds;
    if (layout == IngestLayout::PairDirs) {
        const fs::path hazy_dir = root / "hazy", gt_dir = root / "gt";
        if (!fs::is_directory(hazy_dir) || !fs::is_directory(gt_dir))
            throw not_found_error("pair_dirs layout needs " + hazy_dir.string() + " and " + gt_dir.string());
        std::vector<fs::path> hazy_files;
        for (const auto& e : fs::directory_iterator(hazy_dir))
            if (e.is_regular_file() && e.path().extension() == ".png") hazy_files.push_back(e.path());
        std::sort(hazy_files.begin(), hazy_files.end());
        for (const auto& h : hazy_files) {
            const fs::path g = gt_dir / h.filename();
            if (!fs::exists(g)) {
                ds.warnings.push_back("orphan hazy file (no ground truth): " + h.string());
                continue;
            }
            const auto a = io::read_png(h);
            const auto b = io::read_png(g);
            if (a.h != b.h || a.w != b.w) {
                ds.warnings.push_back("shape mismatch: " + h.string() + " vs " + g.string());
                continue;
            }
            ds.entries.push_back({h, g, {}, {}, {}, "train"});
        }
        if (ds.entries.empty()) throw data_error("ingest: no usable pairs under " + root.string());
        // seed-deterministic split, ~1/6 validation but at least one when possible
        std::vector<size_t> idx(ds.entries.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        Rng rng(derive_seed(seed, 0x1357));
        rng.shuffle(idx);
        const size_t val_n = ds.entries.size() >= 2 ? std::max<size_t>(1, ds.entries.size() / 6) : 0;
        for (size_t i = 0; i < val_n; ++i) ds.entries[idx[i]].split = "val";
        return ds;
    }

    // Manifest layout
    const fs::path mpath = root / "manifest.json";
    std::ifstream is(mpath);
    if (!is) throw not_found_error("missing manifest: " + mpath.string());
    json manifest;
    try {
        is >> manifest;
    } catch (const json::exception& e) {
        throw format_error("bad manifest: " + std::string(e.what()));
    }
    if (manifest.value("format", "") != "seghaze-dataset")
        throw format_error("not a seghaze dataset manifest: " + mpath.string());
    for (const auto& e : manifest.at("scenes")) {
        PairEntry pe;
        pe.hazy = root / e.at("hazy").get<std::string>();
        pe.clean = root / e.at("clean").get<std::string>();
        if (e.contains("masks")) pe.mask_dir = root / e["masks"].get<std::string>();
        if (e.contains("depth")) pe.depth = root / e["depth"].get<std::string>();
        if (e.contains("beta")) pe.beta = root / e["beta"].get<std::string>();
        pe.split = e.value("split", "train");
        if (!fs::exists(pe.hazy) || !fs::exists(pe.clean)) {
            ds.warnings.push_back("missing file for entry " + e.value("id", "?"));
            continue;
        }
        ds.entries.push_back(std::move(pe));
    }
    if (ds.entries.empty()) throw data_error("ingest: manifest lists no usable pairs");
    return ds;
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

struct CellResult {
    std::string name;     // e.g. "haze_seg_large_seed1"
    dehazenet::MaskVariant variant;
    dehazenet::TrainRecord record;
    fs::path dir;
};

struct ExperimentResult {
    std::vector<CellResult> cells;
    fs::path output_dir;
    std::string table_text;
};

namespace detail {

struct RawPair {
    Image hazy;
    Image clean;
    std::optional<scatter::Scene> scene;
    std::optional<segcodec::SegMaskSet> masks;
    std::string split;
};

inline std::vector<RawPair> build_pairs(const ExperimentConfig& cfg) {
    std::vector<RawPair> pairs;
    if (cfg.use_scenes) {
        const int total = cfg.scenes.train_count + cfg.scenes.val_count;
        for (int i = 0; i < total; ++i) {
            RawPair p;
            p.scene = make_scene(cfg.seed, uint64_t(i), cfg.scenes);
            p.clean = p.scene->radiance;
            p.hazy = scatter::render_hazy(*p.scene);
            p.split = i < cfg.scenes.train_count ? "train" : "val";
            pairs.push_back(std::move(p));
        }
    } else {
        const PairedDataset ds = ingest(cfg.dataset_root, cfg.dataset_layout, cfg.seed);
        for (const auto& e : ds.entries) {
            RawPair p;
            p.hazy = io::read_image(e.hazy);
            p.clean = io::read_image(e.clean);
            if (e.mask_dir) p.masks = io::read_maskdir(*e.mask_dir);
            p.split = e.split;
            pairs.push_back(std::move(p));
        }
    }
    return pairs;
}

inline void write_record_jsonl(const fs::path& path, const dehazenet::TrainRecord& rec) {
    std::ofstream os(path);
    for (size_t e = 0; e < rec.epochs.size(); ++e) {
        json line = {{"epoch", e},
                     {"train_loss", rec.epochs[e].train_loss},
                     {"val_psnr", rec.epochs[e].val_psnr},
                     {"wall_ms", rec.epochs[e].wall_ms}};
        os << line.dump() << "\n";
    }
    if (!os) throw io_error("cannot write " + path.string());
}

inline dehazenet::TrainRecord read_record_jsonl(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw not_found_error("cannot open " + path.string());
    dehazenet::TrainRecord rec;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        rec.epochs.push_back({j.at("train_loss").get<double>(), j.at("val_psnr").get<double>(),
                              j.value("wall_ms", 0.0)});
    }
    if (!rec.epochs.empty()) rec.final_psnr = rec.epochs.back().val_psnr;
    return rec;
}

}  // namespace detail

//! Train one cell: assemble the variant's inputs, run the deterministic
//! training loop, and leave a self-describing results directory behind.
inline CellResult run_cell(const ExperimentConfig& cfg, dehazenet::MaskVariant variant,
                           const std::vector<detail::RawPair>& pairs) {
    const auto spec = segbackend::tier_spec(cfg.tier);

    std::function<Image(const Image&)> predehaze;
    dehazenet::UNet<float> stage1_model;
    if (variant == dehazenet::MaskVariant::DehazeSeg) {
        if (cfg.predehaze_checkpoint.empty())
            throw config_error("dehaze_seg requires predehaze_checkpoint in the config");
        stage1_model = dehazenet::load_checkpoint(cfg.predehaze_checkpoint).model;
        predehaze = [&stage1_model](const Image& img) {
            dehazenet::AssembleContext c;
            return dehazenet::infer(stage1_model, dehazenet::assemble_input(img, dehazenet::MaskVariant::HazeGray, c));
        };
    }

    std::vector<dehazenet::Sample> train_set, val_set;
    for (const auto& p : pairs) {
        dehazenet::AssembleContext ctx;
        ctx.clean = &p.clean;
        ctx.scene = p.scene ? &*p.scene : nullptr;
        ctx.segmenter = &spec;
        ctx.masks = p.masks ? &*p.masks : nullptr;
        ctx.predehaze = predehaze;
        dehazenet::Sample s;
        s.input = dehazenet::assemble_input(p.hazy, variant, ctx);
        s.target = dehazenet::detail::to_tensor(p.clean);
        s.clean = p.clean;
        (p.split == "val" ? val_set : train_set).push_back(std::move(s));
    }

    auto [model, record] = dehazenet::train(train_set, val_set, cfg.model, cfg.train, cfg.seed);

    CellResult cell;
    cell.variant = variant;
    cell.record = record;
    cell.name = std::string(dehazenet::variant_name(variant)) + "_" + segbackend::tier_name(cfg.tier) +
                "_seed" + std::to_string(cfg.seed);
    cell.dir = fs::path(cfg.output_dir) / cell.name;
    fs::create_directories(cell.dir);

    {
        std::ofstream os(cell.dir / "resolved_config.json");
        json j = to_json(cfg);
        j["variants"] = json::array({dehazenet::variant_name(variant)});
        os << j.dump(2) << "\n";
    }
    detail::write_record_jsonl(cell.dir / "record.jsonl", record);
    dehazenet::save_checkpoint(cell.dir / "checkpoint.shck", model, cfg.model, cfg.seed);
    {
        std::ofstream os(cell.dir / "metrics.json");
        json j = {{"dataset", cfg.dataset_label},
                  {"variant", dehazenet::variant_name(variant)},
                  {"segmenter_tier", segbackend::tier_name(cfg.tier)},
                  {"seed", cfg.seed},
                  {"epochs", record.epochs.size()},
                  {"final_psnr", record.final_psnr},
                  {"final_ssim", record.final_ssim}};
        os << j.dump(2) << "\n";
    }
    std::ofstream(cell.dir / "DONE") << "ok\n";  // completion sentinel, written last
    return cell;
}

//! Run every variant in the config against the same data and emit the
//! comparison report next to the per-cell directories.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    if (cfg.variants.empty()) throw config_error("run_experiment: no variants configured");
    const auto pairs = detail::build_pairs(cfg);

    ExperimentResult result;
    result.output_dir = cfg.output_dir;
    std::vector<metrics::RunResult> runs;
    for (const auto variant : cfg.variants) {
        CellResult cell = run_cell(cfg, variant, pairs);
        metrics::RunResult rr;
        rr.dataset = cfg.dataset_label;
        rr.variant = std::string(dehazenet::variant_name(variant)) +
                     (variant == dehazenet::MaskVariant::HazeSeg || variant == dehazenet::MaskVariant::NohazeSeg ||
                              variant == dehazenet::MaskVariant::DehazeSeg
                          ? std::string("(") + segbackend::tier_name(cfg.tier) + ")"
                          : "");
        rr.psnr_db = cell.record.final_psnr;
        rr.ssim = cell.record.final_ssim;
        for (const auto& e : cell.record.epochs) rr.loss_history.push_back(e.train_loss);
        runs.push_back(std::move(rr));
        result.cells.push_back(std::move(cell));
    }
    result.table_text = metrics::report(runs, cfg.output_dir).table_text;
    return result;
}

// ---------------------------------------------------------------------------
// Degradation harness over a seeded scene batch
// ---------------------------------------------------------------------------

struct DegradationSummary {
    std::vector<double> betas;
    std::vector<double> mean_counts;
    std::vector<double> mean_rates;  // percent
    fs::path csv_path;
};

inline DegradationSummary run_degradation(const ExperimentConfig& cfg, const std::vector<double>& betas,
                                          int scene_count) {
    if (betas.empty()) throw usage_error("degradation: empty density list");
    if (scene_count < 1) throw usage_error("degradation: need at least one scene");
    const auto spec = segbackend::tier_spec(cfg.tier);

    DegradationSummary out;
    out.betas = betas;
    out.mean_counts.assign(betas.size(), 0.0);
    out.mean_rates.assign(betas.size(), 0.0);
    for (int i = 0; i < scene_count; ++i) {
        const scatter::Scene sc = make_scene(cfg.seed, uint64_t(i), cfg.scenes);
        const auto curve = segbackend::degradation_curve(sc, betas, spec);
        for (size_t b = 0; b < betas.size(); ++b) {
            out.mean_counts[b] += double(curve.segment_counts[b]);
            out.mean_rates[b] += curve.detection_rate[b];
        }
    }
    for (size_t b = 0; b < betas.size(); ++b) {
        out.mean_counts[b] /= scene_count;
        out.mean_rates[b] /= scene_count;
    }

    fs::create_directories(cfg.output_dir);
    out.csv_path = fs::path(cfg.output_dir) / "degradation.csv";
    std::ofstream os(out.csv_path);
    os << "beta,segment_count,detection_rate_percent\n";
    for (size_t b = 0; b < betas.size(); ++b) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%.6g,%.4f,%.4f\n", out.betas[b], out.mean_counts[b], out.mean_rates[b]);
        os << buf;
    }
    if (!os) throw io_error("cannot write " + out.csv_path.string());
    return out;
}

}  // namespace seghaze::pipeline
