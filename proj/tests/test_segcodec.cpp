#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "seghaze/rng.hpp"
#include "seghaze/segcodec.hpp"

using namespace seghaze;
using namespace seghaze::segcodec;

namespace {

SegMaskSet make_set(int h, int w, const std::vector<std::vector<uint8_t>>& masks) {
    SegMaskSet set;
    set.h = h;
    set.w = w;
    for (size_t i = 0; i < masks.size(); ++i) set.masks.push_back({int(i), masks[i]});
    return set;
}

//! Random disjoint partition of the frame into n masks (every mask nonempty).
SegMaskSet random_disjoint(Rng& rng, int h, int w, int n) {
    const size_t npx = size_t(h) * w;
    std::vector<int> owner(npx);
    for (size_t i = 0; i < npx; ++i) owner[i] = i < size_t(n) ? int(i) : int(rng.below(uint64_t(n)));
    rng.shuffle(owner);
    std::vector<std::vector<uint8_t>> masks(n, std::vector<uint8_t>(npx, 0));
    for (size_t i = 0; i < npx; ++i) masks[owner[i]][i] = 1;
    return make_set(h, w, masks);
}

}  // namespace

TEST_CASE("gray value map follows the two coding branches") {
    REQUIRE(gray_value_for_id(0) == 2);
    REQUIRE(gray_value_for_id(126) == 254);
    REQUIRE(gray_value_for_id(127) == 255);
    REQUIRE(gray_value_for_id(254) == 1);
    REQUIRE_THROWS_AS(gray_value_for_id(255), capacity_error);
    REQUIRE_THROWS_AS(gray_value_for_id(-1), capacity_error);
}

TEST_CASE("gray value map is a bijection 0..254 -> 1..255") {
    std::set<int> seen;
    for (int id = 0; id <= 254; ++id) {
        const int v = gray_value_for_id(id);
        REQUIRE(v >= 1);
        REQUIRE(v <= 255);
        REQUIRE(seen.insert(v).second);
        REQUIRE(id_for_gray_value(v) == id);
        // parity separates the two branches
        if (id < 127)
            REQUIRE(v % 2 == 0);
        else
            REQUIRE(v % 2 == 1);
    }
    REQUIRE(seen.size() == 255);
    // first branch ascends from dark to bright
    for (int id = 1; id < 127; ++id) REQUIRE(gray_value_for_id(id) > gray_value_for_id(id - 1));
}

TEST_CASE("encode") {
    SECTION("single full-frame mask codes to 2") {
        const auto set = make_set(4, 4, {std::vector<uint8_t>(16, 1)});
        const auto gray = encode(set);
        for (auto v : gray.v) REQUIRE(v == 2);
    }
    SECTION("two disjoint halves code to 2 and 4") {
        std::vector<uint8_t> left(16, 0), right(16, 0);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) (x < 2 ? left : right)[y * 4 + x] = 1;
        const auto gray = encode(make_set(4, 4, {left, right}));
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) REQUIRE(gray.at(y, x) == (x < 2 ? 2 : 4));
    }
    SECTION("overlap policies") {
        const std::vector<uint8_t> full(16, 1);
        const auto set = make_set(4, 4, {full, full});
        const auto additive = encode(set, OverlapPolicy::AdditiveSaturate);
        for (auto v : additive.v) REQUIRE(v == 6);
        const auto last = encode(set, OverlapPolicy::LastWins);
        for (auto v : last.v) REQUIRE(v == 4);
    }
    SECTION("additive saturates at 255") {
        std::vector<std::vector<uint8_t>> masks(128, std::vector<uint8_t>(4, 1));
        const auto gray = encode(make_set(2, 2, masks), OverlapPolicy::AdditiveSaturate);
        for (auto v : gray.v) REQUIRE(v == 255);
    }
    SECTION("capacity and validation errors") {
        std::vector<std::vector<uint8_t>> masks(256);
        for (int i = 0; i < 256; ++i) {
            masks[i].assign(256, 0);
            masks[i][i] = 1;
        }
        REQUIRE_THROWS_AS(encode(make_set(16, 16, masks)), capacity_error);

        auto bad = make_set(2, 2, {std::vector<uint8_t>(4, 1)});
        bad.masks[0].mask.resize(3);
        REQUIRE_THROWS_AS(encode(bad), shape_error);

        auto empty_mask = make_set(2, 2, {std::vector<uint8_t>(4, 0)});
        REQUIRE_THROWS_AS(encode(empty_mask), validation_error);
    }
    SECTION("coverage: zero exactly off-mask") {
        Rng rng(4);
        for (int trial = 0; trial < 10; ++trial) {
            const int h = 8, w = 8;
            std::vector<uint8_t> m(64, 0);
            for (int i = 0; i < 20; ++i) m[rng.below(64)] = 1;
            if (std::count(m.begin(), m.end(), 1) == 0) m[0] = 1;
            const auto gray = encode(make_set(h, w, {m}));
            for (size_t i = 0; i < m.size(); ++i) REQUIRE((gray.v[i] != 0) == (m[i] != 0));
        }
    }
}

TEST_CASE("decode inverts encode on disjoint sets") {
    SECTION("three disjoint masks round trip") {
        Rng rng(21);
        const auto set = random_disjoint(rng, 8, 8, 3);
        const auto back = decode(encode(set));
        REQUIRE(back.count() == 3);
        for (int i = 0; i < 3; ++i) {
            REQUIRE(back.masks[i].id == i);
            REQUIRE(back.masks[i].mask == set.masks[i].mask);
        }
    }
    SECTION("all-zero raster decodes to the empty set") {
        const auto set = decode(GrayMask(5, 5, 0));
        REQUIRE(set.count() == 0);
    }
    SECTION("full 255-mask partition round trips exactly") {
        const int h = 64, w = 64;
        std::vector<std::vector<uint8_t>> masks(255, std::vector<uint8_t>(size_t(h) * w, 0));
        for (size_t i = 0; i < size_t(h) * w; ++i) masks[i % 255][i] = 1;
        const auto set = make_set(h, w, masks);
        const auto back = decode(encode(set));
        REQUIRE(back.count() == 255);
        for (int i = 0; i < 255; ++i) {
            REQUIRE(back.masks[i].id == i);
            REQUIRE(back.masks[i].mask == set.masks[i].mask);
        }
    }
    SECTION("round trip property over random disjoint sets") {
        Rng rng(9001);
        for (int trial = 0; trial < 50; ++trial) {
            const int n = 1 + int(rng.below(255));
            const auto set = random_disjoint(rng, 16, 16, std::min(n, 16 * 16));
            const auto back = decode(encode(set));
            REQUIRE(back.count() == set.count());
            for (size_t i = 0; i < set.count(); ++i) {
                REQUIRE(back.masks[i].id == set.masks[i].id);
                REQUIRE(back.masks[i].mask == set.masks[i].mask);
            }
        }
    }
}

TEST_CASE("luma") {
    Image white(3, 3, 1.0);
    for (double v : luma(white).v) REQUIRE_THAT(v, Catch::Matchers::WithinAbs(1.0, 1e-12));

    Image green(3, 3, 0.0);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) green.at(1, y, x) = 1.0;
    for (double v : luma(green).v) REQUIRE_THAT(v, Catch::Matchers::WithinAbs(0.587, 1e-12));

    Image neutral(3, 3, 0.37);
    for (double v : luma(neutral).v) REQUIRE_THAT(v, Catch::Matchers::WithinAbs(0.37, 1e-12));
}

TEST_CASE("normalized scales gray codes into [0,1]") {
    GrayMask g(2, 2, 0);
    g.v = {0, 2, 254, 255};
    const Field f = normalized(g);
    REQUIRE(f.v[0] == 0.0);
    REQUIRE_THAT(f.v[1], Catch::Matchers::WithinAbs(2.0 / 255.0, 1e-12));
    REQUIRE_THAT(f.v[2], Catch::Matchers::WithinAbs(254.0 / 255.0, 1e-12));
    REQUIRE(f.v[3] == 1.0);
}
