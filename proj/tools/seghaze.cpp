// Experiment CLI: scene synthesis, dataset ingestion, mask coding, toy
// segmentation, degradation sweeps, training and reporting.

#include <CLI11.hpp>

#include <iostream>

#include "seghaze/seghaze.hpp"

namespace fs = std::filesystem;
using namespace seghaze;

namespace {

struct ConfigArgs {
    std::string config_path;
    // overrides; negative / empty means "not set"
    int64_t seed = -1;
    std::string out;
    std::string label;
    int epochs = -1;
    std::string tier;
    std::vector<std::string> variants;
    std::string size_tier;

    void attach(CLI::App* cmd, bool with_training) {
        cmd->add_option("--config", config_path, "JSON experiment config (see docs/FORMATS.md)");
        cmd->add_option("--seed", seed, "experiment seed");
        cmd->add_option("--out", out, "output directory");
        cmd->add_option("--label", label, "dataset label used in reports");
        if (with_training) {
            cmd->add_option("--epochs", epochs, "training epochs");
            cmd->add_option("--tier", tier, "segmenter tier: small|middle|large");
            cmd->add_option("--variant", variants, "mask variant(s), repeatable");
            cmd->add_option("--model-size", size_tier, "model size tier: tiny|small|base");
        }
    }

    pipeline::ExperimentConfig resolve() const {
        pipeline::ExperimentConfig cfg;
        if (!config_path.empty()) cfg = pipeline::load_config(config_path);
        if (seed >= 0) cfg.seed = uint64_t(seed);
        if (!out.empty()) cfg.output_dir = out;
        if (!label.empty()) cfg.dataset_label = label;
        if (epochs > 0) cfg.train.epochs = epochs;
        if (!tier.empty()) cfg.tier = pipeline::detail::tier_from(tier);
        if (!size_tier.empty()) cfg.model.size_tier = pipeline::detail::size_tier_from(size_tier);
        if (!variants.empty()) {
            cfg.variants.clear();
            for (const auto& v : variants) cfg.variants.push_back(dehazenet::variant_from_name(v));
        }
        return cfg;
    }
};

std::vector<double> parse_betas(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    if (out.empty()) throw usage_error("empty density list");
    return out;
}

int cmd_synth(const ConfigArgs& args) {
    auto cfg = args.resolve();
    if (cfg.output_dir.empty()) throw usage_error("synth: --out or config output_dir required");
    const fs::path manifest = pipeline::synth_dataset(cfg);
    std::cout << "wrote dataset manifest: " << manifest << "\n";
    return 0;
}

int cmd_ingest(const std::string& root, const std::string& layout, int64_t seed, bool check_masks) {
    const auto lay = layout == "manifest" ? pipeline::IngestLayout::Manifest : pipeline::IngestLayout::PairDirs;
    if (layout != "manifest" && layout != "pair_dirs") throw usage_error("layout must be pair_dirs or manifest");
    const auto ds = pipeline::ingest(root, lay, seed < 0 ? 1 : uint64_t(seed));
    for (const auto& w : ds.warnings) std::cout << "warning: " << w << "\n";
    std::cout << "pairs: " << ds.entries.size() << " (train " << ds.count("train") << ", val "
              << ds.count("val") << ")\n";
    if (check_masks) {
        size_t with_masks = 0;
        for (const auto& e : ds.entries)
            if (e.mask_dir) {
                io::read_maskdir(*e.mask_dir);
                ++with_masks;
            }
        std::cout << "mask sets validated: " << with_masks << "\n";
    }
    return 0;
}

int cmd_encode_mask(const std::string& image, const std::string& masks, const std::string& out,
                    const std::string& policy) {
    if ((image.empty()) == (masks.empty()))
        throw usage_error("encode-mask: give exactly one of --image or --masks");
    segcodec::GrayMask gray;
    if (!masks.empty()) {
        segcodec::SegMaskSet set;
        if (fs::is_directory(masks))
            set = io::read_maskdir(masks);
        else
            set = io::read_rle(masks);
        const auto pol = policy == "additive" ? segcodec::OverlapPolicy::AdditiveSaturate
                                              : segcodec::OverlapPolicy::LastWins;
        gray = segcodec::encode(set, pol);
    } else {
        const Image img = io::read_image(image);
        const Field y = segcodec::luma(img);
        gray = segcodec::GrayMask(y.h, y.w);
        for (size_t i = 0; i < y.v.size(); ++i) gray.v[i] = uint8_t(std::lround(clamp01(y.v[i]) * 255.0));
    }
    io::write_graymask(out, gray);
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_segment(const std::string& image, const std::string& tier, const std::string& labels,
                const std::string& out, const std::string& format) {
    const auto t = pipeline::detail::tier_from(tier);
    auto spec = segbackend::tier_spec(t);
    segcodec::SegMaskSet set;
    if (spec.kind == segbackend::SegmenterKind::Oracle) {
        if (labels.empty()) throw usage_error("segment: oracle tier needs --labels");
        scatter::Scene sc;
        sc.regions = io::read_labels(labels);
        int32_t maxl = 0;
        for (auto l : sc.regions.v) maxl = std::max(maxl, l);
        sc.region_count = int(maxl) + 1;
        set = segbackend::oracle_segment(sc);
    } else {
        set = segbackend::cc_segment(io::read_image(image), spec);
    }
    if (format == "rle")
        io::write_rle(out, set);
    else
        io::write_maskdir(out, set);
    std::cout << "segments: " << set.count() << " -> " << out << "\n";
    return 0;
}

int cmd_degradation(const ConfigArgs& args, const std::string& betas_csv, int count) {
    auto cfg = args.resolve();
    if (cfg.output_dir.empty()) throw usage_error("degradation: --out or config output_dir required");
    if (cfg.tier == segbackend::Tier::Large && args.tier.empty() && args.config_path.empty())
        cfg.tier = segbackend::Tier::Middle;  // flag-less default: the CC tier the sweep is about
    const auto betas = parse_betas(betas_csv);
    const auto sum = pipeline::run_degradation(cfg, betas, count);
    std::cout << "beta,segment_count,detection_rate_percent\n";
    for (size_t i = 0; i < sum.betas.size(); ++i)
        std::cout << sum.betas[i] << "," << sum.mean_counts[i] << "," << sum.mean_rates[i] << "\n";
    std::cout << "endpoint rate: " << sum.mean_rates.back() << "% of the haze-free baseline\n";
    std::cout << "csv: " << sum.csv_path << "\n";
    return 0;
}

int cmd_train(const ConfigArgs& args) {
    auto cfg = args.resolve();
    if (cfg.output_dir.empty()) throw usage_error("train: --out or config output_dir required");
    const auto result = pipeline::run_experiment(cfg);
    std::cout << result.table_text;
    std::cout << "results under " << result.output_dir << "\n";
    return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& root, const std::string& layout,
             const std::string& variant, const std::string& out, int64_t seed) {
    const auto ck = dehazenet::load_checkpoint(checkpoint);
    const auto lay = layout == "manifest" ? pipeline::IngestLayout::Manifest : pipeline::IngestLayout::PairDirs;
    const auto ds = pipeline::ingest(root, lay, seed < 0 ? 1 : uint64_t(seed));
    const auto var = dehazenet::variant_from_name(variant);
    const auto spec = segbackend::tier_spec(segbackend::Tier::Middle);

    double psnr_acc = 0, ssim_acc = 0;
    size_t n = 0;
    for (const auto& e : ds.entries) {
        const Image hazy = io::read_image(e.hazy);
        const Image clean = io::read_image(e.clean);
        segcodec::SegMaskSet masks;
        dehazenet::AssembleContext ctx;
        ctx.clean = &clean;
        ctx.segmenter = &spec;
        if (e.mask_dir) {
            masks = io::read_maskdir(*e.mask_dir);
            ctx.masks = &masks;
        }
        const Image restored = dehazenet::infer(ck.model, dehazenet::assemble_input(hazy, var, ctx));
        psnr_acc += metrics::psnr(restored, clean);
        ssim_acc += metrics::ssim(restored, clean);
        ++n;
    }
    std::cout << "evaluated " << n << " pairs: PSNR " << psnr_acc / double(n) << " dB, SSIM "
              << ssim_acc / double(n) << "\n";
    if (!out.empty()) {
        fs::create_directories(out);
        std::ofstream os(fs::path(out) / "eval.json");
        nlohmann::json j = {{"pairs", n}, {"mean_psnr", psnr_acc / double(n)}, {"mean_ssim", ssim_acc / double(n)}};
        os << j.dump(2) << "\n";
        std::cout << "wrote " << (fs::path(out) / "eval.json") << "\n";
    }
    return 0;
}

int cmd_report(const std::vector<std::string>& roots, const std::string& out) {
    std::vector<metrics::RunResult> runs;
    auto try_cell = [&](const fs::path& dir) {
        if (!fs::exists(dir / "metrics.json")) return;
        if (!fs::exists(dir / "DONE")) {
            std::cout << "skipping unfinished cell (no sentinel): " << dir << "\n";
            return;
        }
        std::ifstream is(dir / "metrics.json");
        nlohmann::json j;
        is >> j;
        metrics::RunResult rr;
        rr.dataset = j.value("dataset", "dataset");
        rr.variant = j.value("variant", dir.filename().string());
        if (j.contains("segmenter_tier") &&
            (rr.variant == "haze_seg" || rr.variant == "nohaze_seg" || rr.variant == "dehaze_seg"))
            rr.variant += "(" + j["segmenter_tier"].get<std::string>() + ")";
        rr.psnr_db = j.value("final_psnr", 0.0);
        rr.ssim = j.value("final_ssim", 0.0);
        const auto rec = pipeline::detail::read_record_jsonl(dir / "record.jsonl");
        for (const auto& e : rec.epochs) rr.loss_history.push_back(e.train_loss);
        runs.push_back(std::move(rr));
    };
    for (const auto& root : roots) {
        try_cell(root);
        if (fs::is_directory(root))
            for (const auto& e : fs::directory_iterator(root))
                if (e.is_directory()) try_cell(e.path());
    }
    if (runs.empty()) throw data_error("report: no finished results found");
    const auto rep = metrics::report(runs, out);
    std::cout << rep.table_text;
    std::cout << "wrote " << rep.files_written.size() << " files under " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mask-guided single-image dehazing experiments"};
    app.require_subcommand(1);

    ConfigArgs synth_args, degr_args, train_args;

    auto* synth = app.add_subcommand("synth", "synthesize a paired hazy/clean dataset");
    synth_args.attach(synth, false);

    auto* ingest = app.add_subcommand("ingest", "validate a paired dataset folder");
    std::string ingest_root, ingest_layout = "pair_dirs";
    int64_t ingest_seed = -1;
    bool check_masks = false;
    ingest->add_option("--root", ingest_root, "dataset root")->required();
    ingest->add_option("--layout", ingest_layout, "pair_dirs|manifest");
    ingest->add_option("--seed", ingest_seed, "split seed");
    ingest->add_flag("--check-masks", check_masks, "load every referenced mask set");

    auto* encode = app.add_subcommand("encode-mask", "encode masks (or image luma) into a gray PNG");
    std::string enc_image, enc_masks, enc_out = "gray.png", enc_policy = "last_wins";
    encode->add_option("--image", enc_image, "image whose luma becomes the gray channel");
    encode->add_option("--masks", enc_masks, "mask directory or .rle container");
    encode->add_option("--out", enc_out, "output PNG");
    encode->add_option("--policy", enc_policy, "overlap policy: last_wins|additive");

    auto* segment = app.add_subcommand("segment", "segment an image into a mask directory");
    std::string seg_image, seg_tier = "middle", seg_labels, seg_out = "masks", seg_format = "dir";
    segment->add_option("--image", seg_image, "input image");
    segment->add_option("--tier", seg_tier, "small|middle|large");
    segment->add_option("--labels", seg_labels, "ground-truth label PNG (oracle tier)");
    segment->add_option("--out", seg_out, "output mask directory or .rle path");
    segment->add_option("--format", seg_format, "dir|rle");

    auto* degr = app.add_subcommand("degradation", "detection rate vs fog density sweep");
    std::string betas_csv = "0,0.05,0.1,0.2";
    int degr_count = 20;
    degr_args.attach(degr, true);
    degr->add_option("--betas", betas_csv, "comma-separated densities, ascending from 0");
    degr->add_option("--count", degr_count, "number of seeded scenes");

    auto* train = app.add_subcommand("train", "train the configured variants and report");
    train_args.attach(train, true);

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset folder");
    std::string eval_ckpt, eval_root, eval_layout = "pair_dirs", eval_variant = "haze_gray", eval_out;
    int64_t eval_seed = -1;
    eval->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
    eval->add_option("--root", eval_root, "dataset root")->required();
    eval->add_option("--layout", eval_layout, "pair_dirs|manifest");
    eval->add_option("--variant", eval_variant, "input assembly variant");
    eval->add_option("--out", eval_out, "directory for eval.json");
    eval->add_option("--seed", eval_seed, "split seed");

    auto* report = app.add_subcommand("report", "aggregate finished result cells into tables");
    std::vector<std::string> report_roots;
    std::string report_out = "report";
    report->add_option("--results", report_roots, "result cell dirs or their parent")->required();
    report->add_option("--out", report_out, "report output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(synth_args);
        if (ingest->parsed()) return cmd_ingest(ingest_root, ingest_layout, ingest_seed, check_masks);
        if (encode->parsed()) return cmd_encode_mask(enc_image, enc_masks, enc_out, enc_policy);
        if (segment->parsed()) return cmd_segment(seg_image, seg_tier, seg_labels, seg_out, seg_format);
        if (degr->parsed()) return cmd_degradation(degr_args, betas_csv, degr_count);
        if (train->parsed()) return cmd_train(train_args);
        if (eval->parsed()) return cmd_eval(eval_ckpt, eval_root, eval_layout, eval_variant, eval_out, eval_seed);
        if (report->parsed()) return cmd_report(report_roots, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
