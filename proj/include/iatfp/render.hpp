#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "iatfp/iat.hpp"

namespace iatfp::render {

struct Rgb {
    uint8_t r = 0;
    uint8_t g = 0;
    uint8_t b = 0;

    bool operator==(const Rgb&) const = default;
};

inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kBlack{0, 0, 0};

enum class YScale { linear_autoscale, log_fixed };

std::string to_string(YScale scale);
YScale y_scale_from_string(const std::string& name);

struct PlotStyle {
    int width = 150;
    int height = 150;
    int margin = 4; // per side
    Rgb background = kWhite;
    Rgb line_color = kBlack;
    YScale y_scale = YScale::linear_autoscale;
    double log_min = 1e-6; // seconds, log_fixed only
    double log_max = 10.0;
    double autoscale_pad = 0.05;

    void validate() const;

    // Stable digest of every field, for cache keys; identical styles hash
    // identically across runs and platforms.
    uint64_t fingerprint() const;

    bool operator==(const PlotStyle&) const = default;
};

struct FingerprintImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels; // row-major RGB, 3 bytes per pixel

    static FingerprintImage filled(int width, int height, Rgb color);

    Rgb at(int x, int y) const {
        const size_t i = 3 * (static_cast<size_t>(y) * static_cast<size_t>(width) +
                              static_cast<size_t>(x));
        return Rgb{pixels[i], pixels[i + 1], pixels[i + 2]};
    }

    void set(int x, int y, Rgb color) {
        const size_t i = 3 * (static_cast<size_t>(y) * static_cast<size_t>(width) +
                              static_cast<size_t>(x));
        pixels[i] = color.r;
        pixels[i + 1] = color.g;
        pixels[i + 2] = color.b;
    }

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }

    bool operator==(const FingerprintImage&) const = default;
};

struct Point {
    int x = 0;
    int y = 0;

    bool operator==(const Point&) const = default;
};

// One pixel coordinate per window value. Column k is a pure function of
// (k, W, width, margin); the row maps the value range onto the margin-inset
// band with larger values higher.
std::vector<Point> scale_window(const iat::IatWindow& window, const PlotStyle& style);

// Rounded-DDA segment: steps = max(|dx|, |dy|), point i at the half-up
// rounding of the exact parametric position. Both endpoints are drawn.
void draw_line(FingerprintImage& image, Point a, Point b, Rgb color);

// Background fill plus the 99 segments joining consecutive scaled points,
// drawn in index order. Pure function of (window, style).
FingerprintImage rasterize(const iat::IatWindow& window, const PlotStyle& style);

// Binary PPM: "P6\n{w} {h}\n255\n" + raw RGB. decode accepts exactly what
// encode produces (plus arbitrary whitespace between header tokens).
std::vector<uint8_t> encode_ppm(const FingerprintImage& image);
FingerprintImage decode_ppm(std::span<const unsigned char> bytes);

} // namespace iatfp::render
