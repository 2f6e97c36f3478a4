#pragma once

#include <cstdint>
#include <string_view>

namespace lra {

/// Counter-based deterministic generator (SplitMix64). The state advances by
/// the fixed Weyl increment 0x9E3779B97F4A7C15 and each output is a bijective
/// mix of the counter, so identical seeds give identical sequences on every
/// platform. Independent sub-streams are derived from (seed, label) pairs.
class Rng {
  public:
    explicit Rng(uint64_t seed) {
        base_ = mix(seed ^ 0x5851F42D4C957F2DULL);
        state_ = base_;
    }

    /// Independent stream keyed by (this stream's base, label).
    Rng substream(uint64_t label) const { return Rng(mix(base_ ^ mix(label + 0x632BE59BD9B4E019ULL)), tag{}); }
    Rng substream(std::string_view label) const { return substream(fnv1a(label)); }
    Rng substream(std::string_view label, uint64_t trial) const {
        return substream(fnv1a(label) ^ (trial * 0x9E3779B97F4A7C15ULL + 1));
    }

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal via Box-Muller (two uniforms per draw, no cached state).
    double gaussian();

    /// Uniform integer in [0, n) by rejection.
    int uniform_int(int n);

    static uint64_t fnv1a(std::string_view s) {
        uint64_t h = 0xCBF29CE484222325ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001B3ULL;
        }
        return h;
    }

  private:
    struct tag {};
    Rng(uint64_t base, tag) : base_(base), state_(base) {}

    static uint64_t mix(uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    uint64_t base_;
    uint64_t state_;
};

}  // namespace lra
