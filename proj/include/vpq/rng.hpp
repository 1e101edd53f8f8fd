#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace vpq {

// Deterministic PRNG used everywhere instead of <random> distributions, whose
// output is implementation-defined. The generator is xoshiro256++ seeded via
// SplitMix64; all derived quantities (uniforms, bounded ints, normals) are
// produced by the documented recipes below so that runs are reproducible
// bit-for-bit across compilers.
//
// Stream derivation: a run has one global seed; each component draws from
// Rng(mix64(seed, stream_id)). Stream ids are listed in `streams` below.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Combines a seed with a stream/index tag into a fresh 64-bit seed.
inline std::uint64_t mix64(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t s = seed ^ (tag * 0x9E3779B97F4A7C15ULL);
    splitmix64(s);
    return splitmix64(s);
}

namespace streams {
constexpr std::uint64_t kData = 1;  // dataset / environment simulation
constexpr std::uint64_t kInit = 2;  // parameter initialization
constexpr std::uint64_t kRem = 3;   // mixture-weight draws
constexpr std::uint64_t kBatch = 4; // minibatch index sampling
constexpr std::uint64_t kEval = 5;  // evaluation rollouts
} // namespace streams

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; never returns zero, safe for logs and normalization.
    double uniform_open0() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Unbiased integer in [0, bound), bound > 0 (Lemire rejection).
    std::uint64_t uniform_int(std::uint64_t bound) {
        while (true) {
            const std::uint64_t x = next_u64();
            const unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
            const auto lo = static_cast<std::uint64_t>(m);
            if (lo >= bound || lo >= (0ULL - bound) % bound) {
                return static_cast<std::uint64_t>(m >> 64);
            }
        }
    }

    // Standard normal via the Marsaglia polar method; the spare value of each
    // accepted pair is cached, so draws come in a fixed deterministic order.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline Rng derived_rng(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix64(seed, stream));
}

} // namespace vpq
