#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "seghaze/dehazenet.hpp"

using namespace seghaze;
using namespace seghaze::dehazenet;

namespace fs = std::filesystem;

namespace {

scatter::Scene make_scene(uint64_t seed, int k, int hw = 16) {
    scatter::SceneConfig cfg;
    cfg.height = hw;
    cfg.width = hw;
    cfg.regions = k;
    cfg.density_mode = scatter::DensityMode::Blobs;
    return scatter::synth_scene(seed, cfg);
}

std::vector<Sample> identity_samples(int count, int hw, uint64_t seed) {
    std::vector<Sample> out;
    for (int i = 0; i < count; ++i) {
        const auto sc = make_scene(seed + uint64_t(i), 5, hw);
        AssembleContext ctx;
        Sample s;
        s.input = assemble_input(sc.radiance, MaskVariant::HazeGray, ctx);
        s.target = detail::to_tensor(sc.radiance);
        s.clean = sc.radiance;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

TEST_CASE("assemble_input") {
    const auto sc = make_scene(4, 2);
    const auto spec = segbackend::tier_spec(segbackend::Tier::Large);
    const Image hazy = scatter::render_hazy(sc);

    SECTION("haze_gray fills channel 4 with the hazy luma") {
        Image neutral(8, 8, 0.37);
        AssembleContext ctx;
        const auto t = assemble_input(neutral, MaskVariant::HazeGray, ctx);
        REQUIRE(t.c == 4);
        const size_t npx = 64;
        for (size_t i = 0; i < npx; ++i)
            REQUIRE_THAT(t.v[3 * npx + i], Catch::Matchers::WithinAbs(0.37, 1e-6));
    }
    SECTION("haze_seg with the oracle on k=2 takes exactly the two code values") {
        AssembleContext ctx;
        ctx.scene = &sc;
        ctx.segmenter = &spec;
        const auto t = assemble_input(hazy, MaskVariant::HazeSeg, ctx);
        const size_t npx = size_t(hazy.h) * hazy.w;
        std::set<float> values(t.v.begin() + 3 * npx, t.v.end());
        REQUIRE(values == std::set<float>{2.0f / 255.0f, 4.0f / 255.0f});
    }
    SECTION("nohaze_seg equals haze_seg under the oracle") {
        AssembleContext ctx;
        ctx.scene = &sc;
        ctx.segmenter = &spec;
        ctx.clean = &sc.radiance;
        const auto a = assemble_input(hazy, MaskVariant::HazeSeg, ctx);
        const auto b = assemble_input(hazy, MaskVariant::NohazeSeg, ctx);
        REQUIRE(a.v == b.v);
    }
    SECTION("channels 1-3 carry the hazy RGB") {
        AssembleContext ctx;
        const auto t = assemble_input(hazy, MaskVariant::HazeGray, ctx);
        const size_t npx = size_t(hazy.h) * hazy.w;
        for (size_t i = 0; i < 3 * npx; ++i)
            REQUIRE_THAT(double(t.v[i]), Catch::Matchers::WithinAbs(hazy.v[i], 1e-6));
    }
    SECTION("missing context throws") {
        AssembleContext empty;
        REQUIRE_THROWS_AS(assemble_input(hazy, MaskVariant::NohazeGray, empty), config_error);
        REQUIRE_THROWS_AS(assemble_input(hazy, MaskVariant::HazeSeg, empty), config_error);
        REQUIRE_THROWS_AS(assemble_input(hazy, MaskVariant::DehazeSeg, empty), config_error);
    }
}

TEST_CASE("infer") {
    ModelConfig cfg;
    cfg.base_width = 6;
    cfg.depth = 2;
    const auto model = build_model(cfg, 3);

    SECTION("output is clipped RGB of the input size") {
        Rng rng(5);
        nn::Tensor<float> input(4, 16, 16);
        for (auto& v : input.v) v = float(rng.uniform(-0.5, 1.5));
        const Image out = infer(model, input);
        REQUIRE(out.h == 16);
        REQUIRE(out.w == 16);
        for (double v : out.v) {
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
        }
    }
    SECTION("non-multiple sizes are reflect-padded and cropped back") {
        Rng rng(6);
        nn::Tensor<float> input(4, 13, 11);
        for (auto& v : input.v) v = float(rng.uniform());
        const Image out = infer(model, input);
        REQUIRE(out.h == 13);
        REQUIRE(out.w == 11);
    }
    SECTION("channel mismatch is a shape error") {
        nn::Tensor<float> input(3, 16, 16);
        REQUIRE_THROWS_AS(infer(model, input), shape_error);
    }
    SECTION("deterministic") {
        Rng rng(7);
        nn::Tensor<float> input(4, 8, 8);
        for (auto& v : input.v) v = float(rng.uniform());
        REQUIRE(infer(model, input).v == infer(model, input).v);
    }
}

TEST_CASE("training") {
    ModelConfig cfg;
    cfg.base_width = 8;
    cfg.depth = 2;
    TrainOptions opt;
    opt.epochs = 6;
    opt.batch_size = 4;
    opt.patch = 16;

    SECTION("identity task converges toward zero loss") {
        const auto train_set = identity_samples(8, 16, 100);
        const auto val_set = identity_samples(2, 16, 900);
        const auto [model, record] = train(train_set, val_set, cfg, opt, 1);
        REQUIRE(record.epochs.size() == 6);
        REQUIRE(record.epochs.back().train_loss < record.epochs.front().train_loss * 0.5);
        REQUIRE(record.final_psnr > 20.0);
    }
    SECTION("fixed seed reproduces the loss history bit for bit") {
        const auto train_set = identity_samples(6, 16, 50);
        const auto [m1, r1] = train(train_set, {}, cfg, opt, 9);
        const auto [m2, r2] = train(train_set, {}, cfg, opt, 9);
        REQUIRE(r1.epochs.size() == r2.epochs.size());
        for (size_t e = 0; e < r1.epochs.size(); ++e)
            REQUIRE(r1.epochs[e].train_loss == r2.epochs[e].train_loss);
        for (size_t i = 0; i < m1.convs().size(); ++i) REQUIRE(m1.convs()[i].w == m2.convs()[i].w);
    }
    SECTION("empty dataset is a data error") {
        REQUIRE_THROWS_AS(train({}, {}, cfg, opt, 1), data_error);
    }
    SECTION("oversized samples are cropped to the patch size") {
        auto samples = identity_samples(4, 32, 70);  // 32x32 scenes, patch 16
        const auto [model, record] = train(samples, {}, cfg, opt, 2);
        REQUIRE(record.epochs.size() == 6);
        for (const auto& e : record.epochs) REQUIRE(std::isfinite(e.train_loss));
    }
}

TEST_CASE("channel-4 sensitivity: the mask path is live after training") {
    const auto sc = make_scene(21, 6, 16);
    const auto spec = segbackend::tier_spec(segbackend::Tier::Large);
    const Image hazy = scatter::render_hazy(sc);

    AssembleContext ctx;
    ctx.scene = &sc;
    ctx.segmenter = &spec;
    std::vector<Sample> train_set;
    for (uint64_t s = 0; s < 6; ++s) {
        const auto sci = make_scene(300 + s, 6, 16);
        AssembleContext c2;
        c2.scene = &sci;
        c2.segmenter = &spec;
        Sample smp;
        smp.input = assemble_input(scatter::render_hazy(sci), MaskVariant::HazeSeg, c2);
        smp.target = detail::to_tensor(sci.radiance);
        smp.clean = sci.radiance;
        train_set.push_back(std::move(smp));
    }
    ModelConfig cfg;
    cfg.base_width = 8;
    cfg.depth = 2;
    TrainOptions opt;
    opt.epochs = 4;
    opt.batch_size = 4;
    opt.patch = 16;
    const auto [model, record] = train(train_set, {}, cfg, opt, 5);

    auto input = assemble_input(hazy, MaskVariant::HazeSeg, ctx);
    const Image base = infer(model, input);
    // permute the mask codes in channel 4
    const size_t npx = size_t(16) * 16;
    for (size_t i = 0; i < npx; ++i) {
        float& v = input.v[3 * npx + i];
        v = v > 0 ? 1.0f - v : v;
    }
    const Image perturbed = infer(model, input);
    double diff = 0;
    for (size_t i = 0; i < base.v.size(); ++i) diff = std::max(diff, std::abs(base.v[i] - perturbed.v[i]));
    REQUIRE(diff > 0.0);
}

TEST_CASE("two_stage_infer") {
    const auto sc = make_scene(31, 5, 16);
    const Image hazy = scatter::render_hazy(sc);
    ModelConfig cfg;
    cfg.base_width = 6;
    cfg.depth = 2;
    const auto final_model = build_model(cfg, 8);

    SECTION("oracle segmenter ignores stage-1 quality") {
        const auto spec = segbackend::tier_spec(segbackend::Tier::Large);
        auto blurry_stage1 = [](const Image& img) { return Image(img.h, img.w, 0.5); };
        const Image two = two_stage_infer(hazy, blurry_stage1, spec, &sc, final_model);

        AssembleContext ctx;
        ctx.scene = &sc;
        ctx.segmenter = &spec;
        const Image one = infer(final_model, assemble_input(hazy, MaskVariant::HazeSeg, ctx));
        REQUIRE(two.v == one.v);
    }
    SECTION("identity stage 1 equals single-stage haze_seg under CC") {
        const auto spec = segbackend::tier_spec(segbackend::Tier::Middle);
        auto identity = [](const Image& img) { return img; };
        const Image two = two_stage_infer(hazy, identity, spec, nullptr, final_model);

        AssembleContext ctx;
        ctx.segmenter = &spec;
        const Image one = infer(final_model, assemble_input(hazy, MaskVariant::HazeSeg, ctx));
        REQUIRE(two.v == one.v);
    }
    SECTION("model-based stage 1 runs end to end") {
        const auto stage1 = build_model(cfg, 9);
        const auto spec = segbackend::tier_spec(segbackend::Tier::Middle);
        const Image out = two_stage_infer(hazy, stage1, spec, nullptr, final_model);
        REQUIRE(out.h == 16);
        REQUIRE(out.w == 16);
    }
}

TEST_CASE("checkpoint round trip") {
    const fs::path path = fs::temp_directory_path() / "seghaze_ckpt_test.shck";
    ModelConfig cfg;
    cfg.base_width = 8;
    cfg.depth = 2;
    const auto model = build_model(cfg, 77);
    save_checkpoint(path, model, cfg, 77);

    const auto ck = load_checkpoint(path);
    REQUIRE(ck.seed == 77);
    REQUIRE(ck.config.input_channels == 4);
    REQUIRE(ck.model.param_count() == model.param_count());
    for (size_t i = 0; i < model.convs().size(); ++i) {
        REQUIRE(ck.model.convs()[i].w == model.convs()[i].w);
        REQUIRE(ck.model.convs()[i].b == model.convs()[i].b);
    }
    // inference through the reloaded model is identical
    Rng rng(3);
    nn::Tensor<float> input(4, 16, 16);
    for (auto& v : input.v) v = float(rng.uniform());
    REQUIRE(infer(ck.model, input).v == infer(model, input).v);

    SECTION("malformed file is rejected") {
        const fs::path bad = fs::temp_directory_path() / "seghaze_ckpt_bad.shck";
        std::ofstream(bad, std::ios::binary) << "NOTACKPT";
        REQUIRE_THROWS_AS(load_checkpoint(bad), format_error);
    }
}
