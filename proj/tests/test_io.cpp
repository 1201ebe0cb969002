#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "seghaze/io/field.hpp"
#include "seghaze/io/maskdir.hpp"
#include "seghaze/io/png.hpp"
#include "seghaze/rng.hpp"
#include "seghaze/scatter.hpp"
#include "seghaze/segbackend.hpp"

using namespace seghaze;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
    const fs::path p = fs::temp_directory_path() / (std::string("seghaze_io_") + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("PNG round trips") {
    const auto dir = temp_dir("png");
    Rng rng(5);

    SECTION("16-bit RGB carries images at 1/65535 precision") {
        Image img(9, 13);
        for (auto& v : img.v) v = rng.uniform();
        io::write_png_rgb(dir / "img16.png", img, 16);
        const Image back = io::read_image(dir / "img16.png");
        REQUIRE(back.h == 9);
        REQUIRE(back.w == 13);
        for (size_t i = 0; i < img.v.size(); ++i)
            REQUIRE_THAT(back.v[i], Catch::Matchers::WithinAbs(img.v[i], 0.5 / 65535.0 + 1e-9));
    }
    SECTION("8-bit RGB") {
        Image img(5, 7);
        for (auto& v : img.v) v = rng.uniform();
        io::write_png_rgb(dir / "img8.png", img, 8);
        const Image back = io::read_image(dir / "img8.png");
        for (size_t i = 0; i < img.v.size(); ++i)
            REQUIRE_THAT(back.v[i], Catch::Matchers::WithinAbs(img.v[i], 0.5 / 255.0 + 1e-9));
    }
    SECTION("gray8 masks are exact") {
        segcodec::GrayMask g(6, 6, 0);
        for (auto& v : g.v) v = uint8_t(rng.below(256));
        io::write_graymask(dir / "gray.png", g);
        const auto back = io::read_graymask(dir / "gray.png");
        REQUIRE(back.v == g.v);
    }
    SECTION("gray16 label maps are exact") {
        LabelMap labels(4, 5, 0);
        for (auto& v : labels.v) v = int32_t(rng.below(200));
        io::write_labels(dir / "labels.png", labels);
        const auto back = io::read_labels(dir / "labels.png");
        REQUIRE(back.v == labels.v);
    }
    SECTION("1-bit masks are exact") {
        std::vector<uint8_t> bits(11 * 18);
        for (auto& b : bits) b = uint8_t(rng.below(2));
        io::write_png_gray1(dir / "bit.png", 11, 18, bits.data());
        const auto png = io::read_png(dir / "bit.png");
        REQUIRE(png.h == 11);
        REQUIRE(png.w == 18);
        for (size_t i = 0; i < bits.size(); ++i) REQUIRE((png.samples[i] ? 1 : 0) == bits[i]);
    }
    SECTION("malformed PNG is a format error") {
        std::ofstream(dir / "junk.png") << "this is not a png";
        REQUIRE_THROWS_AS(io::read_png(dir / "junk.png"), format_error);
    }
    SECTION("missing file is an io error") {
        REQUIRE_THROWS_AS(io::read_png(dir / "absent.png"), io_error);
    }
}

TEST_CASE("float field container") {
    const auto dir = temp_dir("field");
    SECTION("round trip at float32 precision") {
        Field f(7, 9);
        Rng rng(2);
        for (auto& v : f.v) v = rng.uniform(0.0, 20.0);
        io::write_field(dir / "depth.f32", f);
        const Field back = io::read_field(dir / "depth.f32");
        REQUIRE(back.h == 7);
        REQUIRE(back.w == 9);
        for (size_t i = 0; i < f.v.size(); ++i)
            REQUIRE_THAT(back.v[i], Catch::Matchers::WithinRel(f.v[i], 1e-6));
    }
    SECTION("bad magic rejected") {
        std::ofstream(dir / "bad.f32", std::ios::binary) << "WRONGMAGIC-------";
        REQUIRE_THROWS_AS(io::read_field(dir / "bad.f32"), format_error);
    }
    SECTION("truncated payload rejected") {
        Field f(4, 4, 1.0);
        io::write_field(dir / "trunc.f32", f);
        fs::resize_file(dir / "trunc.f32", 24);
        REQUIRE_THROWS_AS(io::read_field(dir / "trunc.f32"), format_error);
    }
}

TEST_CASE("mask directory and RLE containers") {
    const auto dir = temp_dir("masks");
    scatter::SceneConfig cfg;
    cfg.height = 24;
    cfg.width = 24;
    cfg.regions = 9;
    const auto set = segbackend::oracle_segment(scatter::synth_scene(10, cfg));

    SECTION("maskdir round trip with manifest metadata") {
        io::write_maskdir(dir / "d", set);
        const auto back = io::read_maskdir(dir / "d");
        REQUIRE(back.h == set.h);
        REQUIRE(back.count() == set.count());
        for (size_t i = 0; i < set.count(); ++i) {
            REQUIRE(back.masks[i].id == set.masks[i].id);
            REQUIRE(back.masks[i].mask == set.masks[i].mask);
        }
        // manifest records areas in id order
        std::ifstream is(dir / "d" / "manifest.json");
        nlohmann::json j;
        is >> j;
        REQUIRE(j["masks"].size() == set.count());
        for (size_t i = 0; i < set.count(); ++i)
            REQUIRE(j["masks"][i]["area"].get<size_t>() == set.masks[i].area());
    }
    SECTION("rle round trip") {
        io::write_rle(dir / "m.rle", set);
        const auto back = io::read_rle(dir / "m.rle");
        REQUIRE(back.count() == set.count());
        for (size_t i = 0; i < set.count(); ++i) REQUIRE(back.masks[i].mask == set.masks[i].mask);
    }
    SECTION("rle rejects corrupted area") {
        io::write_rle(dir / "bad.rle", set);
        std::ifstream is(dir / "bad.rle");
        std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
        is.close();
        const auto pos = text.find("area ");
        text.replace(pos + 5, 1, "9");
        std::ofstream(dir / "bad.rle") << text;
        REQUIRE_THROWS_AS(io::read_rle(dir / "bad.rle"), format_error);
    }
    SECTION("missing manifest is a not-found error") {
        REQUIRE_THROWS_AS(io::read_maskdir(dir / "absent"), not_found_error);
    }
    SECTION("dimension mismatch in a mask file is a validation error") {
        io::write_maskdir(dir / "dm", set);
        std::vector<uint8_t> small(8 * 8, 1);
        io::write_png_gray1(dir / "dm" / "mask_001.png", 8, 8, small.data());
        REQUIRE_THROWS_AS(io::read_maskdir(dir / "dm"), validation_error);
    }
}
