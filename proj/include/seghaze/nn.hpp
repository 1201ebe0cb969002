#pragma once

#include <cmath>
#include <string>

#include "seghaze/core.hpp"
#include "seghaze/rng.hpp"

namespace seghaze::nn {

//! C x H x W tensor, planar, row-major planes.
template <typename T>
struct Tensor {
    int c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int c_, int h_, int w_, T fill = T(0)) : c(c_), h(h_), w(w_), v(size_t(c_) * h_ * w_, fill) {}

    T* plane(int ci) { return v.data() + size_t(ci) * h * w; }
    const T* plane(int ci) const { return v.data() + size_t(ci) * h * w; }
    size_t size() const { return v.size(); }
    void zero() { std::fill(v.begin(), v.end(), T(0)); }
};

inline constexpr double kLeakySlope = 0.1;

//! One 3x3 convolution, zero padding 1, plus its gradient buffers.
template <typename T>
struct Conv {
    std::string name;
    int cin = 0, cout = 0;
    std::vector<T> w, b;    // cout*cin*9, cout
    std::vector<T> gw, gb;

    void init(const std::string& name_, int cin_, int cout_, Rng& rng) {
        name = name_;
        cin = cin_;
        cout = cout_;
        w.resize(size_t(cout) * cin * 9);
        b.assign(cout, T(0));
        gw.assign(w.size(), T(0));
        gb.assign(b.size(), T(0));
        const double limit = std::sqrt(6.0 / (double(cin) * 9.0));  // He-uniform
        for (auto& x : w) x = T(rng.uniform(-limit, limit));
    }

    size_t param_count() const { return w.size() + b.size(); }
};

namespace detail {

// Scratch for zero-padded planes; reused across layers to avoid reallocation.
template <typename T>
struct Workspace {
    std::vector<T> pad_in, pad_g, acc;
};

template <typename T>
inline void pad_planes(const Tensor<T>& t, std::vector<T>& buf) {
    const int ph = t.h + 2, pw = t.w + 2;
    buf.assign(size_t(t.c) * ph * pw, T(0));
    for (int ci = 0; ci < t.c; ++ci) {
        const T* src = t.plane(ci);
        T* dst = buf.data() + size_t(ci) * ph * pw;
        for (int y = 0; y < t.h; ++y)
            std::copy(src + size_t(y) * t.w, src + size_t(y + 1) * t.w, dst + size_t(y + 1) * pw + 1);
    }
}

}  // namespace detail

namespace detail {

//! out-plane += 3x3 correlation of one padded plane; single fused pass.
template <typename T>
inline void accumulate_tap9(T* op, const T* P, const T* W, int h, int w, int pw) {
    const T w00 = W[0], w01 = W[1], w02 = W[2];
    const T w10 = W[3], w11 = W[4], w12 = W[5];
    const T w20 = W[6], w21 = W[7], w22 = W[8];
    for (int y = 0; y < h; ++y) {
        const T* r0 = P + size_t(y) * pw;
        const T* r1 = r0 + pw;
        const T* r2 = r1 + pw;
        T* o = op + size_t(y) * w;
        for (int x = 0; x < w; ++x)
            o[x] += w00 * r0[x] + w01 * r0[x + 1] + w02 * r0[x + 2] + w10 * r1[x] + w11 * r1[x + 1] +
                    w12 * r1[x + 2] + w20 * r2[x] + w21 * r2[x + 1] + w22 * r2[x + 2];
    }
}

}  // namespace detail

template <typename T>
inline void conv3x3_forward(const Tensor<T>& in, const Conv<T>& p, Tensor<T>& out,
                            detail::Workspace<T>& ws) {
    const int h = in.h, w = in.w, ph = h + 2, pw = w + 2;
    detail::pad_planes(in, ws.pad_in);
    out = Tensor<T>(p.cout, h, w);
    for (int co = 0; co < p.cout; ++co) {
        T* op = out.plane(co);
        std::fill(op, op + size_t(h) * w, p.b[co]);
        for (int ci = 0; ci < p.cin; ++ci)
            detail::accumulate_tap9(op, ws.pad_in.data() + size_t(ci) * ph * pw,
                                    p.w.data() + (size_t(co) * p.cin + ci) * 9, h, w, pw);
    }
}

//! Accumulates parameter gradients; writes input gradient when gin != nullptr.
//! Reductions run through per-column accumulator rows so the inner loops stay
//! elementwise (and vectorizable) with a fixed summation order.
template <typename T>
inline void conv3x3_backward(const Tensor<T>& in, Conv<T>& p, const Tensor<T>& gout, Tensor<T>* gin,
                             detail::Workspace<T>& ws) {
    const int h = in.h, w = in.w, ph = h + 2, pw = w + 2;
    detail::pad_planes(in, ws.pad_in);
    ws.acc.assign(size_t(3) * w, T(0));
    T* a0 = ws.acc.data();
    T* a1 = a0 + w;
    T* a2 = a1 + w;

    for (int co = 0; co < p.cout; ++co) {
        const T* g = gout.plane(co);
        std::fill(a0, a0 + w, T(0));
        for (int y = 0; y < h; ++y) {
            const T* gr = g + size_t(y) * w;
            for (int x = 0; x < w; ++x) a0[x] += gr[x];
        }
        T gb_acc = T(0);
        for (int x = 0; x < w; ++x) gb_acc += a0[x];
        p.gb[co] += gb_acc;

        for (int ci = 0; ci < p.cin; ++ci) {
            const T* P = ws.pad_in.data() + size_t(ci) * ph * pw;
            T* gwp = p.gw.data() + (size_t(co) * p.cin + ci) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                std::fill(a0, a0 + 3 * w, T(0));
                for (int y = 0; y < h; ++y) {
                    const T* r = P + size_t(y + ky) * pw;
                    const T* gr = g + size_t(y) * w;
                    for (int x = 0; x < w; ++x) {
                        a0[x] += gr[x] * r[x];
                        a1[x] += gr[x] * r[x + 1];
                        a2[x] += gr[x] * r[x + 2];
                    }
                }
                T s0 = T(0), s1 = T(0), s2 = T(0);
                for (int x = 0; x < w; ++x) {
                    s0 += a0[x];
                    s1 += a1[x];
                    s2 += a2[x];
                }
                gwp[ky * 3] += s0;
                gwp[ky * 3 + 1] += s1;
                gwp[ky * 3 + 2] += s2;
            }
        }
    }

    if (!gin) return;
    detail::pad_planes(gout, ws.pad_g);
    *gin = Tensor<T>(p.cin, h, w);
    for (int ci = 0; ci < p.cin; ++ci) {
        T* gp = gin->plane(ci);
        for (int co = 0; co < p.cout; ++co) {
            const T* W = p.w.data() + (size_t(co) * p.cin + ci) * 9;
            T flipped[9];
            for (int k = 0; k < 9; ++k) flipped[k] = W[8 - k];  // transposed conv
            detail::accumulate_tap9(gp, ws.pad_g.data() + size_t(co) * ph * pw, flipped, h, w, pw);
        }
    }
}

template <typename T>
inline Tensor<T> leaky_relu(const Tensor<T>& x) {
    Tensor<T> out(x.c, x.h, x.w);
    for (size_t i = 0; i < x.v.size(); ++i) out.v[i] = x.v[i] > T(0) ? x.v[i] : T(kLeakySlope) * x.v[i];
    return out;
}

template <typename T>
inline Tensor<T> leaky_relu_backward(const Tensor<T>& pre, const Tensor<T>& gout) {
    Tensor<T> gin(pre.c, pre.h, pre.w);
    for (size_t i = 0; i < pre.v.size(); ++i)
        gin.v[i] = pre.v[i] > T(0) ? gout.v[i] : T(kLeakySlope) * gout.v[i];
    return gin;
}

template <typename T>
inline Tensor<T> avgpool2(const Tensor<T>& x) {
    Tensor<T> out(x.c, x.h / 2, x.w / 2);
    for (int c = 0; c < x.c; ++c) {
        const T* in = x.plane(c);
        T* o = out.plane(c);
        for (int y = 0; y < out.h; ++y)
            for (int xx = 0; xx < out.w; ++xx) {
                const size_t base = size_t(2 * y) * x.w + 2 * xx;
                o[size_t(y) * out.w + xx] =
                    T(0.25) * (in[base] + in[base + 1] + in[base + x.w] + in[base + x.w + 1]);
            }
    }
    return out;
}

template <typename T>
inline Tensor<T> avgpool2_backward(const Tensor<T>& gout, int h, int w) {
    Tensor<T> gin(gout.c, h, w);
    for (int c = 0; c < gout.c; ++c) {
        const T* g = gout.plane(c);
        T* o = gin.plane(c);
        for (int y = 0; y < gout.h; ++y)
            for (int xx = 0; xx < gout.w; ++xx) {
                const T v = T(0.25) * g[size_t(y) * gout.w + xx];
                const size_t base = size_t(2 * y) * w + 2 * xx;
                o[base] = o[base + 1] = o[base + w] = o[base + w + 1] = v;
            }
    }
    return gin;
}

template <typename T>
inline Tensor<T> upsample2(const Tensor<T>& x) {
    Tensor<T> out(x.c, x.h * 2, x.w * 2);
    for (int c = 0; c < x.c; ++c) {
        const T* in = x.plane(c);
        T* o = out.plane(c);
        for (int y = 0; y < out.h; ++y)
            for (int xx = 0; xx < out.w; ++xx) o[size_t(y) * out.w + xx] = in[size_t(y / 2) * x.w + xx / 2];
    }
    return out;
}

template <typename T>
inline Tensor<T> upsample2_backward(const Tensor<T>& gout) {
    Tensor<T> gin(gout.c, gout.h / 2, gout.w / 2);
    for (int c = 0; c < gout.c; ++c) {
        const T* g = gout.plane(c);
        T* o = gin.plane(c);
        for (int y = 0; y < gout.h; ++y)
            for (int xx = 0; xx < gout.w; ++xx) o[size_t(y / 2) * gin.w + xx / 2] += g[size_t(y) * gout.w + xx];
    }
    return gin;
}

template <typename T>
inline Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b) {
    Tensor<T> out(a.c + b.c, a.h, a.w);
    std::copy(a.v.begin(), a.v.end(), out.v.begin());
    std::copy(b.v.begin(), b.v.end(), out.v.begin() + a.v.size());
    return out;
}

// ---------------------------------------------------------------------------
// U-shaped encoder-decoder. The encoder widens with the input channel count
// (3 or 4); the decoder shape never depends on it. Output is a residual
// correction added to the RGB part of the input.
// ---------------------------------------------------------------------------

template <typename T>
struct Trace {
    Tensor<T> input;
    std::vector<Tensor<T>> e_pre1, e_act1, e_pre2, e_act2, pooled;
    Tensor<T> b_pre1, b_act1, b_pre2, b_act2;
    std::vector<Tensor<T>> up, cat, d_pre1, d_act1, d_pre2, d_act2;
    Tensor<T> out_pre;
};

template <typename T>
class UNet {
public:
    UNet() = default;

    UNet(int in_channels, int width, int depth, uint64_t seed)
        : in_channels_(in_channels), width_(width), depth_(depth) {
        if (in_channels != 3 && in_channels != 4)
            throw config_error("UNet: input channel count must be 3 or 4");
        if (width < 1 || depth < 1 || depth > 6) throw config_error("UNet: bad width/depth");
        Rng rng(seed);
        for (int i = 0; i < depth; ++i) {
            const int cin = i == 0 ? in_channels : width << (i - 1);
            const int cw = width << i;
            convs_.emplace_back();
            convs_.back().init("enc" + std::to_string(i) + "a", cin, cw, rng);
            convs_.emplace_back();
            convs_.back().init("enc" + std::to_string(i) + "b", cw, cw, rng);
        }
        {
            const int cin = width << (depth - 1), cw = width << depth;
            convs_.emplace_back();
            convs_.back().init("bota", cin, cw, rng);
            convs_.emplace_back();
            convs_.back().init("botb", cw, cw, rng);
        }
        for (int i = depth - 1; i >= 0; --i) {
            const int cu = width << (i + 1);  // channels arriving from below
            const int cw = width << i;
            convs_.emplace_back();
            convs_.back().init("dec" + std::to_string(i) + "a", cu + cw, cw, rng);
            convs_.emplace_back();
            convs_.back().init("dec" + std::to_string(i) + "b", cw, cw, rng);
        }
        // gain-and-bias head: 3 gain + 3 offset channels applied to the RGB
        // input, so the scattering inversion (a per-pixel gain) is direct
        convs_.emplace_back();
        convs_.back().init("out", width, 6, rng);
    }

    int in_channels() const { return in_channels_; }
    int width() const { return width_; }
    int depth() const { return depth_; }
    int spatial_multiple() const { return 1 << depth_; }

    std::vector<Conv<T>>& convs() { return convs_; }
    const std::vector<Conv<T>>& convs() const { return convs_; }

    size_t param_count() const {
        size_t n = 0;
        for (const auto& c : convs_) n += c.param_count();
        return n;
    }

    void zero_grads() {
        for (auto& c : convs_) {
            std::fill(c.gw.begin(), c.gw.end(), T(0));
            std::fill(c.gb.begin(), c.gb.end(), T(0));
        }
    }

    //! Forward pass. h and w must be multiples of 2^depth (callers pad).
    Tensor<T> forward(const Tensor<T>& input, Trace<T>& tr) const {
        if (input.c != in_channels_) throw shape_error("UNet: input has " + std::to_string(input.c) +
                                                       " channels, model expects " + std::to_string(in_channels_));
        if (input.h % spatial_multiple() != 0 || input.w % spatial_multiple() != 0)
            throw shape_error("UNet: spatial dims must be multiples of " + std::to_string(spatial_multiple()));

        detail::Workspace<T> ws;
        tr.input = input;
        tr.e_pre1.assign(depth_, {});
        tr.e_act1.assign(depth_, {});
        tr.e_pre2.assign(depth_, {});
        tr.e_act2.assign(depth_, {});
        tr.pooled.assign(depth_, {});
        tr.up.assign(depth_, {});
        tr.cat.assign(depth_, {});
        tr.d_pre1.assign(depth_, {});
        tr.d_act1.assign(depth_, {});
        tr.d_pre2.assign(depth_, {});
        tr.d_act2.assign(depth_, {});

        const Tensor<T>* prev = &tr.input;
        for (int i = 0; i < depth_; ++i) {
            conv3x3_forward(*prev, enc(i, 0), tr.e_pre1[i], ws);
            tr.e_act1[i] = leaky_relu(tr.e_pre1[i]);
            conv3x3_forward(tr.e_act1[i], enc(i, 1), tr.e_pre2[i], ws);
            tr.e_act2[i] = leaky_relu(tr.e_pre2[i]);
            tr.pooled[i] = avgpool2(tr.e_act2[i]);
            prev = &tr.pooled[i];
        }
        conv3x3_forward(*prev, bot(0), tr.b_pre1, ws);
        tr.b_act1 = leaky_relu(tr.b_pre1);
        conv3x3_forward(tr.b_act1, bot(1), tr.b_pre2, ws);
        tr.b_act2 = leaky_relu(tr.b_pre2);
        prev = &tr.b_act2;
        for (int i = depth_ - 1; i >= 0; --i) {
            tr.up[i] = upsample2(*prev);
            tr.cat[i] = concat(tr.up[i], tr.e_act2[i]);
            conv3x3_forward(tr.cat[i], dec(i, 0), tr.d_pre1[i], ws);
            tr.d_act1[i] = leaky_relu(tr.d_pre1[i]);
            conv3x3_forward(tr.d_act1[i], dec(i, 1), tr.d_pre2[i], ws);
            tr.d_act2[i] = leaky_relu(tr.d_pre2[i]);
            prev = &tr.d_act2[i];
        }
        conv3x3_forward(*prev, convs_.back(), tr.out_pre, ws);

        // out_c = (1 + gain_c) * in_c + bias_c; identity at zero head output
        Tensor<T> out(3, input.h, input.w);
        const size_t npx = size_t(input.h) * input.w;
        for (int c = 0; c < 3; ++c)
            for (size_t i = 0; i < npx; ++i) {
                const T g = tr.out_pre.v[size_t(c) * npx + i];
                const T d = tr.out_pre.v[size_t(c + 3) * npx + i];
                out.v[size_t(c) * npx + i] = (T(1) + g) * input.v[size_t(c) * npx + i] + d;
            }
        return out;
    }

    //! Accumulate parameter gradients for d(loss)/d(output) = gout.
    void backward(const Trace<T>& tr, const Tensor<T>& gout) {
        detail::Workspace<T> ws;
        // through the gain-and-bias head: d gain_c = gout_c * in_c, d bias_c = gout_c
        Tensor<T> ghead(6, gout.h, gout.w);
        const size_t npx = size_t(gout.h) * gout.w;
        for (int c = 0; c < 3; ++c)
            for (size_t i = 0; i < npx; ++i) {
                ghead.v[size_t(c) * npx + i] =
                    gout.v[size_t(c) * npx + i] * tr.input.v[size_t(c) * npx + i];
                ghead.v[size_t(c + 3) * npx + i] = gout.v[size_t(c) * npx + i];
            }
        Tensor<T> g;
        conv3x3_backward(tr.d_act2[0], convs_.back(), ghead, &g, ws);

        std::vector<Tensor<T>> g_skip(depth_);
        for (int i = 0; i < depth_; ++i) {
            Tensor<T> ga = leaky_relu_backward(tr.d_pre2[i], g);
            Tensor<T> gb;
            conv3x3_backward(tr.d_act1[i], dec(i, 1), ga, &gb, ws);
            Tensor<T> gc = leaky_relu_backward(tr.d_pre1[i], gb);
            Tensor<T> gcat;
            conv3x3_backward(tr.cat[i], dec(i, 0), gc, &gcat, ws);

            const int cu = tr.up[i].c;
            Tensor<T> gup(cu, gcat.h, gcat.w);
            std::copy(gcat.v.begin(), gcat.v.begin() + gup.v.size(), gup.v.begin());
            g_skip[i] = Tensor<T>(gcat.c - cu, gcat.h, gcat.w);
            std::copy(gcat.v.begin() + gup.v.size(), gcat.v.end(), g_skip[i].v.begin());
            g = upsample2_backward(gup);  // grad into the level below
        }

        Tensor<T> ga = leaky_relu_backward(tr.b_pre2, g);
        Tensor<T> gb;
        conv3x3_backward(tr.b_act1, bot(1), ga, &gb, ws);
        Tensor<T> gc = leaky_relu_backward(tr.b_pre1, gb);
        conv3x3_backward(tr.pooled[depth_ - 1], bot(0), gc, &g, ws);

        for (int i = depth_ - 1; i >= 0; --i) {
            Tensor<T> gpool = avgpool2_backward(g, tr.e_act2[i].h, tr.e_act2[i].w);
            for (size_t j = 0; j < gpool.v.size(); ++j) gpool.v[j] += g_skip[i].v[j];
            Tensor<T> g2 = leaky_relu_backward(tr.e_pre2[i], gpool);
            Tensor<T> g3;
            conv3x3_backward(tr.e_act1[i], enc(i, 1), g2, &g3, ws);
            Tensor<T> g4 = leaky_relu_backward(tr.e_pre1[i], g3);
            const Tensor<T>& in = i == 0 ? tr.input : tr.pooled[i - 1];
            conv3x3_backward(in, enc(i, 0), g4, i == 0 ? nullptr : &g, ws);
        }
    }

private:
    Conv<T>& enc(int level, int which) { return convs_[size_t(2 * level + which)]; }
    const Conv<T>& enc(int level, int which) const { return convs_[size_t(2 * level + which)]; }
    Conv<T>& bot(int which) { return convs_[size_t(2 * depth_ + which)]; }
    const Conv<T>& bot(int which) const { return convs_[size_t(2 * depth_ + which)]; }
    // decoder convs are stored in processing order, deepest level first
    Conv<T>& dec(int level, int which) { return convs_[size_t(2 * depth_ + 2 + 2 * (depth_ - 1 - level) + which)]; }
    const Conv<T>& dec(int level, int which) const {
        return convs_[size_t(2 * depth_ + 2 + 2 * (depth_ - 1 - level) + which)];
    }

    int in_channels_ = 3;
    int width_ = 16;
    int depth_ = 2;
    std::vector<Conv<T>> convs_;
};

//! Mean absolute error; fills gout with the loss gradient scaled by `scale`
//! (callers pass 1/batch so batch gradients average).
template <typename T>
inline double l1_loss(const Tensor<T>& out, const Tensor<T>& target, Tensor<T>& gout, double scale = 1.0) {
    if (out.v.size() != target.v.size()) throw shape_error("l1_loss: size mismatch");
    gout = Tensor<T>(out.c, out.h, out.w);
    const double g = scale / double(out.v.size());
    double acc = 0;
    for (size_t i = 0; i < out.v.size(); ++i) {
        const double d = double(out.v[i]) - double(target.v[i]);
        acc += std::abs(d);
        gout.v[i] = T(d >= 0 ? g : -g);
    }
    return acc / double(out.v.size());
}

//! RMSProp: per-parameter adaptive scaling, no momentum, fixed step.
template <typename T>
class RmsProp {
public:
    RmsProp(UNet<T>& model, double lr = 1e-3, double decay = 0.9, double eps = 1e-8)
        : lr_(lr), decay_(decay), eps_(eps) {
        for (const auto& c : model.convs()) {
            vw_.emplace_back(c.w.size(), T(0));
            vb_.emplace_back(c.b.size(), T(0));
        }
    }

    void step(UNet<T>& model) {
        auto update = [&](std::vector<T>& p, const std::vector<T>& g, std::vector<T>& v) {
            for (size_t i = 0; i < p.size(); ++i) {
                v[i] = T(decay_) * v[i] + T(1.0 - decay_) * g[i] * g[i];
                p[i] -= T(lr_) * g[i] / (std::sqrt(v[i]) + T(eps_));
            }
        };
        auto& convs = model.convs();
        for (size_t ci = 0; ci < convs.size(); ++ci) {
            update(convs[ci].w, convs[ci].gw, vw_[ci]);
            update(convs[ci].b, convs[ci].gb, vb_[ci]);
        }
    }

private:
    double lr_, decay_, eps_;
    std::vector<std::vector<T>> vw_, vb_;
};

}  // namespace seghaze::nn
