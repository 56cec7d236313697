#include "iatfp/rng.hpp"

#include <cmath>

namespace iatfp {

uint64_t hash_bytes(uint64_t seed, std::span<const unsigned char> bytes) noexcept {
    uint64_t h = seed;
    for (unsigned char b : bytes) {
        h = hash_combine(h, b);
    }
    return hash_combine(h, bytes.size());
}

double Rng::normal() noexcept {
    for (;;) {
        const double u = 2.0 * uniform() - 1.0;
        const double v = 2.0 * uniform() - 1.0;
        const double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) {
            return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }
}

double Rng::exponential(double mean) noexcept {
    // 1 - uniform() lies in (0, 1], keeping the log finite
    return -mean * std::log(1.0 - uniform());
}

double Rng::gamma(double shape, double scale) noexcept {
    if (shape < 1.0) {
        const double u = uniform();
        return gamma(shape + 1.0, scale) * std::pow(u > 0.0 ? u : 0x1.0p-53, 1.0 / shape);
    }
    // Marsaglia & Tsang squeeze
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) {
            return d * v * scale;
        }
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
            return d * v * scale;
        }
    }
}

uint64_t Rng::geometric_count(double mean) noexcept {
    if (mean <= 1.0) {
        return 1;
    }
    const double p = 1.0 / mean;
    const double u = 1.0 - uniform(); // (0, 1]
    const double draws = std::floor(std::log(u) / std::log1p(-p));
    if (draws >= 9.0e18 || !(draws >= 0.0)) {
        return UINT64_C(9000000000000000000);
    }
    return 1 + static_cast<uint64_t>(draws);
}

} // namespace iatfp
