#include <catch2/catch_amalgamated.hpp>

#include "seghaze/nn.hpp"
#include "seghaze/rng.hpp"

using namespace seghaze;
using namespace seghaze::nn;

namespace {

template <typename T>
Tensor<T> random_tensor(Rng& rng, int c, int h, int w) {
    Tensor<T> t(c, h, w);
    for (auto& v : t.v) v = T(rng.uniform());
    return t;
}

//! Expected parameter count from the architecture arithmetic, computed
//! independently of the implementation's bookkeeping.
size_t expected_params(int in_ch, int width, int depth) {
    size_t n = 0;
    auto conv = [&](int cin, int cout) { n += size_t(cin) * cout * 9 + cout; };
    for (int i = 0; i < depth; ++i) {
        const int cin = i == 0 ? in_ch : width << (i - 1);
        conv(cin, width << i);
        conv(width << i, width << i);
    }
    conv(width << (depth - 1), width << depth);
    conv(width << depth, width << depth);
    for (int i = depth - 1; i >= 0; --i) {
        conv((width << (i + 1)) + (width << i), width << i);
        conv(width << i, width << i);
    }
    conv(width, 6);  // gain + bias head
    return n;
}

}  // namespace

TEST_CASE("model construction") {
    SECTION("parameter budget arithmetic") {
        const UNet<float> m(4, 16, 2, 1);
        REQUIRE(m.param_count() == expected_params(4, 16, 2));
    }
    SECTION("4ch and 3ch models differ only in the first conv's fan-in") {
        const UNet<float> m4(4, 16, 2, 1);
        const UNet<float> m3(3, 16, 2, 1);
        REQUIRE(m4.param_count() - m3.param_count() == size_t(16) * 9);
    }
    SECTION("same seed gives identical initial parameters") {
        const UNet<float> a(4, 12, 2, 77);
        const UNet<float> b(4, 12, 2, 77);
        for (size_t i = 0; i < a.convs().size(); ++i) {
            REQUIRE(a.convs()[i].w == b.convs()[i].w);
            REQUIRE(a.convs()[i].b == b.convs()[i].b);
        }
        const UNet<float> c(4, 12, 2, 78);
        REQUIRE(a.convs()[0].w != c.convs()[0].w);
    }
    SECTION("invalid channel count is a config error") {
        REQUIRE_THROWS_AS(UNet<float>(5, 16, 2, 1), config_error);
    }
}

TEST_CASE("forward pass shape contract") {
    Rng rng(3);
    const UNet<float> m(4, 8, 2, 5);
    const auto input = random_tensor<float>(rng, 4, 16, 24);
    Trace<float> tr;
    const auto out = m.forward(input, tr);
    REQUIRE(out.c == 3);
    REQUIRE(out.h == 16);
    REQUIRE(out.w == 24);
    for (float v : out.v) REQUIRE(std::isfinite(v));

    SECTION("wrong channel count") {
        REQUIRE_THROWS_AS(m.forward(random_tensor<float>(rng, 3, 16, 16), tr), shape_error);
    }
    SECTION("non-multiple spatial dims") {
        REQUIRE_THROWS_AS(m.forward(random_tensor<float>(rng, 4, 15, 16), tr), shape_error);
    }
    SECTION("forward is deterministic") {
        Trace<float> tr2;
        const auto out2 = m.forward(input, tr2);
        REQUIRE(out.v == out2.v);
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    // double precision so the finite-difference oracle is trustworthy
    UNet<double> model(4, 6, 2, 42);
    Rng rng(9);
    const auto input = random_tensor<double>(rng, 4, 8, 8);
    const auto target = random_tensor<double>(rng, 3, 8, 8);

    auto loss_at = [&]() {
        Trace<double> tr;
        Tensor<double> g;
        return l1_loss(model.forward(input, tr), target, g);
    };

    model.zero_grads();
    Trace<double> tr;
    Tensor<double> gout;
    const auto out = model.forward(input, tr);
    l1_loss(out, target, gout);
    model.backward(tr, gout);

    const double h = 1e-6;
    Rng pick(123);
    size_t checked = 0;
    for (auto& c : model.convs()) {
        for (int rep = 0; rep < 12; ++rep) {
            const size_t k = pick.below(c.w.size());
            const double orig = c.w[k];
            c.w[k] = orig + h;
            const double lp = loss_at();
            c.w[k] = orig - h;
            const double lm = loss_at();
            c.w[k] = orig;
            const double num = (lp - lm) / (2 * h);
            const double ana = c.gw[k];
            const double rel = std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), 1e-10});
            REQUIRE(rel < 1e-3);
            ++checked;
        }
        const size_t k = pick.below(c.b.size());
        const double orig = c.b[k];
        c.b[k] = orig + h;
        const double lp = loss_at();
        c.b[k] = orig - h;
        const double lm = loss_at();
        c.b[k] = orig;
        const double num = (lp - lm) / (2 * h);
        const double rel = std::abs(num - c.gb[k]) / std::max({std::abs(num), std::abs(c.gb[k]), 1e-10});
        REQUIRE(rel < 1e-3);
        ++checked;
    }
    REQUIRE(checked >= 100);
}

TEST_CASE("layer primitives invert shapes correctly") {
    Rng rng(8);
    SECTION("avgpool/backward") {
        const auto x = random_tensor<float>(rng, 2, 6, 8);
        const auto y = avgpool2(x);
        REQUIRE(y.h == 3);
        REQUIRE(y.w == 4);
        const auto g = avgpool2_backward(y, 6, 8);
        REQUIRE(g.h == 6);
        REQUIRE(g.w == 8);
        // energy conservation: each pooled cell spreads its gradient by 1/4
        float sum_in = 0, sum_out = 0;
        for (float v : y.v) sum_in += v;
        for (float v : g.v) sum_out += v;
        REQUIRE_THAT(sum_out, Catch::Matchers::WithinRel(sum_in, 1e-5f));
    }
    SECTION("upsample/backward") {
        const auto x = random_tensor<float>(rng, 2, 3, 4);
        const auto y = upsample2(x);
        REQUIRE(y.h == 6);
        REQUIRE(y.w == 8);
        for (int c = 0; c < 2; ++c)
            for (int yy = 0; yy < 6; ++yy)
                for (int xx = 0; xx < 8; ++xx)
                    REQUIRE(y.plane(c)[yy * 8 + xx] == x.plane(c)[(yy / 2) * 4 + xx / 2]);
        const auto g = upsample2_backward(y);
        for (size_t i = 0; i < g.v.size(); ++i) REQUIRE_THAT(g.v[i], Catch::Matchers::WithinRel(4.0f * x.v[i], 1e-5f));
    }
    SECTION("leaky relu keeps the negative slope") {
        Tensor<float> x(1, 1, 4);
        x.v = {-2.0f, -0.5f, 0.0f, 3.0f};
        const auto y = leaky_relu(x);
        REQUIRE(y.v[0] == -0.2f);
        REQUIRE(y.v[3] == 3.0f);
        Tensor<float> g(1, 1, 4);
        g.v = {1, 1, 1, 1};
        const auto gi = leaky_relu_backward(x, g);
        REQUIRE(gi.v[0] == 0.1f);
        REQUIRE(gi.v[3] == 1.0f);
    }
}

TEST_CASE("rmsprop learns a small regression") {
    // single training sample; loss must fall steadily
    UNet<float> model(4, 6, 2, 11);
    Rng rng(2);
    const auto input = random_tensor<float>(rng, 4, 8, 8);
    Tensor<float> target(3, 8, 8);
    for (size_t i = 0; i < target.v.size(); ++i) target.v[i] = input.v[i];  // reproduce the RGB part

    RmsProp<float> opt(model, 1e-3);
    Trace<float> tr;
    Tensor<float> gout;
    double first = 0, last = 0;
    for (int step = 0; step < 120; ++step) {
        model.zero_grads();
        const auto out = model.forward(input, tr);
        const double loss = l1_loss(out, target, gout);
        model.backward(tr, gout);
        opt.step(model);
        if (step == 0) first = loss;
        last = loss;
    }
    REQUIRE(last < first * 0.2);
}
