#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace iatfp {

// round-half-up: .5 always rounds toward +infinity; floor(x + 0.5) would
// double-round values one ulp below a half-integer boundary
inline int64_t round_half_up(double x) noexcept {
    const double f = std::floor(x);
    return static_cast<int64_t>(f) + ((x - f >= 0.5) ? 1 : 0);
}

// floor division for signed integers
constexpr int64_t floor_div(int64_t num, int64_t den) noexcept {
    int64_t q = num / den;
    if ((num % den != 0) && ((num < 0) != (den < 0))) {
        --q;
    }
    return q;
}

// round-half-up of the exact rational num/den, den > 0, in integer arithmetic
constexpr int64_t round_half_up_ratio(int64_t num, int64_t den) noexcept {
    return floor_div(2 * num + den, 2 * den);
}

// FNV-1a, used for golden hashes and cache keys
constexpr uint64_t fnv1a64(std::span<const unsigned char> bytes,
                           uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(uint64_t value);

std::vector<unsigned char> read_binary_file(const std::string& path);
void write_binary_file(const std::string& path, std::span<const unsigned char> bytes);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

} // namespace iatfp
