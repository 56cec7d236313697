#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>

namespace iatfp {

// splitmix64 finalizer; the mixing core of all seeding and stream derivation.
constexpr uint64_t mix64(uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr uint64_t hash_combine(uint64_t seed, uint64_t value) noexcept {
    return mix64(seed ^ (mix64(value) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

uint64_t hash_bytes(uint64_t seed, std::span<const unsigned char> bytes) noexcept;

// Named sub-stream tags so independent random streams never alias.
namespace stream {
inline constexpr uint64_t split = 0x53504C49u;   // dataset splitting
inline constexpr uint64_t init = 0x494E4954u;    // weight initialization
inline constexpr uint64_t augment = 0x415547u;   // augmentation draws
inline constexpr uint64_t dropout = 0x44524Fu;   // dropout masks
inline constexpr uint64_t batches = 0x424154u;   // batch shuffling
} // namespace stream

// xoshiro256** with explicit integer-only uniform derivations, so every draw
// is identical across platforms and standard-library versions.
class Rng {
public:
    explicit Rng(uint64_t seed) noexcept {
        uint64_t s = seed;
        for (auto& word : state_) {
            s += 0x9e3779b97f4a7c15ULL;
            word = mix64(s);
        }
    }

    uint64_t next_u64() noexcept {
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

    // [0, 1) with 53 random bits
    double uniform() noexcept { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + uniform() * (hi - lo); }

    // [0, n) by 128-bit multiply-shift
    uint64_t bounded(uint64_t n) noexcept {
        return uint64_t((static_cast<__uint128_t>(next_u64()) * n) >> 64);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    // Marsaglia polar method; the spare deviate is discarded so the draw
    // count per call is the rejection count alone.
    double normal() noexcept;

    // mean 1/lambda parameterized by the mean directly
    double exponential(double mean) noexcept;

    // shape/scale; Marsaglia-Tsang for shape >= 1 with the boost for shape < 1
    double gamma(double shape, double scale) noexcept;

    // packet-per-burst counts on {1, 2, ...} with the given mean
    uint64_t geometric_count(double mean) noexcept;

private:
    static constexpr uint64_t rotl(uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::array<uint64_t, 4> state_{};
};

} // namespace iatfp
