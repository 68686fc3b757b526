#pragma once

#include <array>
#include <cstdint>

namespace wcmdp {

/// xoshiro256** seeded through splitmix64. Self-contained so that streams are
/// identical across platforms and standard library implementations; the
/// (seed, stream) constructor gives order-independent per-replication streams.
class Rng {
  public:
    explicit Rng(uint64_t seed) : Rng(seed, 0) {}

    Rng(uint64_t seed, uint64_t stream) {
        uint64_t sm = seed * 0x9e3779b97f4a7c15ULL + (stream + 1) * 0xbf58476d1ce4e5b9ULL;
        for (auto& word : state_) word = splitmix64(sm);
    }

    uint64_t next() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Index sampled from an unnormalized nonnegative weight row via a CDF
    /// scan. Rows here are short (|S| states), so linear is fine.
    int categorical(const double* weights, int count) {
        double total = 0.0;
        for (int k = 0; k < count; ++k) total += weights[k];
        double u = uniform01() * total;
        for (int k = 0; k < count; ++k) {
            u -= weights[k];
            if (u < 0.0) return k;
        }
        return count - 1;  // guard against roundoff at u ~ total
    }

  private:
    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<uint64_t, 4> state_;
};

}  // namespace wcmdp
