#ifndef UWDIFF_CORE_RNG_HPP_
#define UWDIFF_CORE_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace uwdiff {

// splitmix64 finalizer. Also used as the seed-mixing primitive for
// per-item dataset seeds, so the exact constants are part of the
// on-disk reproducibility contract.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Per-item seed for dataset synthesis: item_seed(global, i) is stable
// under reordering and parallel processing of items.
inline uint64_t item_seed(uint64_t global_seed, uint64_t index) {
    return splitmix64(splitmix64(global_seed) ^ splitmix64(index));
}

// xoshiro256** with a splitmix64-expanded seed. All stochastic code in
// the library draws from this generator; std::random distributions are
// avoided because their output is implementation-defined.
class Rng {
  public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& word : s_) {
            x = splitmix64(x);
            word = x;
        }
        has_cached_normal_ = false;
        cached_normal_ = 0.0;
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

    // Uniform in [0,1) with 53 bits of mantissa.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). One multiply-shift draw per call; the
    // (negligible for small n) modulo bias is accepted in exchange for a
    // fixed draw count, which keeps seeded streams reproducible.
    uint64_t uniform_below(uint64_t n) {
        return static_cast<uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Uniform integer in [lo, hi] inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(uniform_below(static_cast<uint64_t>(hi - lo + 1)));
    }

    // Standard normal via Box-Muller; consumes two uniforms per pair and
    // caches the second variate.
    double normal() {
        if (has_cached_normal_) {
            has_cached_normal_ = false;
            return cached_normal_;
        }
        const double u1 = 1.0 - uniform();  // (0,1], keeps log finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        cached_normal_ = r * std::sin(theta);
        has_cached_normal_ = true;
        return r * std::cos(theta);
    }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s_[4];
    bool has_cached_normal_;
    double cached_normal_;
};

}  // namespace uwdiff

#endif  // UWDIFF_CORE_RNG_HPP_
