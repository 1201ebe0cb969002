#pragma once

#include <cstdint>
#include <vector>

namespace seghaze {

// Deterministic PRNG used everywhere a seed appears in the public API.
// splitmix64 seeding + xoshiro256** stream; identical output on every
// platform, unlike the stdlib distributions.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t z = seed;
        for (auto& si : s_) {
            z += 0x9e3779b97f4a7c15ULL;
            uint64_t t = z;
            t = (t ^ (t >> 30)) * 0xbf58476d1ce4e5b9ULL;
            t = (t ^ (t >> 27)) * 0x94d049bb133111ebULL;
            si = t ^ (t >> 31);
        }
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    //! Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    //! Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    //! Uniform integer in [0, n). Rejection-free modulo is acceptable here:
    //! n is always tiny compared to 2^64, so the bias is unobservable.
    uint64_t below(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    //! Derive an independent stream, e.g. one per scene index.
    Rng fork(uint64_t stream) const {
        Rng r(*this);
        r.s_[0] ^= 0x5851f42d4c957f2dULL * (stream + 1);
        r.s_[2] ^= 0x14057b7ef767814fULL * (stream + 1);
        r.next_u64();
        r.next_u64();
        return r;
    }

    template <typename T>
    void shuffle(std::vector<T>& xs) {
        for (size_t i = xs.size(); i > 1; --i) {
            size_t j = size_t(below(i));
            std::swap(xs[i - 1], xs[j]);
        }
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

}  // namespace seghaze
