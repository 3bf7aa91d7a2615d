#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace fundliq {

// Deterministic PRNG used by the synthetic generator: xoshiro256++ (256-bit
// integer state), seeded through SplitMix64. Implemented here rather than via
// std::mt19937 so that generated universes are bit-identical across standard
// libraries and platforms. Independent streams are derived per entity by
// mixing (seed, stream tag, entity index) through SplitMix64, so adding a
// fund or stock never perturbs the draws of existing entities.

inline uint64_t splitmix64_next(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
  public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64_next(sm);
    }

    // Stream for one entity: tag distinguishes draw purposes (e.g. "flows"),
    // index distinguishes entities within a purpose.
    static Rng stream(uint64_t seed, uint64_t tag, uint64_t index) {
        uint64_t sm = seed;
        uint64_t a = splitmix64_next(sm);
        sm = a ^ (tag * 0x9e3779b97f4a7c15ULL + 0x165667b19e3779f9ULL);
        uint64_t b = splitmix64_next(sm);
        sm = b ^ (index + 0x27d4eb2f165667c5ULL);
        return Rng(splitmix64_next(sm));
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    // Box-Muller with a cached spare; draw order is part of the generator's
    // determinism contract.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = u01();
        } while (u1 <= 0.0);
        u2 = u01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586477 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Normal truncated to +/- bound standard deviations (redraw).
    double normal_trunc(double bound) {
        double z;
        do {
            z = normal();
        } while (std::fabs(z) > bound);
        return z;
    }

    // Uniform over [lo, hi] in log space.
    double log_uniform(double lo, double hi) {
        return lo * std::exp(u01() * std::log(hi / lo));
    }

    uint64_t below(uint64_t n) { return next_u64() % n; }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// FNV-1a 64-bit digest, used for output/config fingerprints in sidecars.
// Not cryptographic; collision resistance is not a requirement here.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(uint64_t value);

}  // namespace fundliq
