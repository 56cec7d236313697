#include "iatfp/render.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "iatfp/errors.hpp"
#include "iatfp/util.hpp"

namespace iatfp::render {

std::string to_string(YScale scale) {
    return scale == YScale::linear_autoscale ? "linear_autoscale" : "log_fixed";
}

YScale y_scale_from_string(const std::string& name) {
    if (name == "linear_autoscale") return YScale::linear_autoscale;
    if (name == "log_fixed") return YScale::log_fixed;
    raise(Errc::config_invalid, "unknown y_scale '" + name + "'");
}

void PlotStyle::validate() const {
    if (width < 1 || height < 1) {
        raise(Errc::config_invalid, "image dimensions must be positive");
    }
    if (margin < 0 || 2 * margin >= std::min(width, height)) {
        raise(Errc::config_invalid, "margin*2 must be smaller than both dimensions");
    }
    if (!(log_min > 0.0) || !(log_min < log_max)) {
        raise(Errc::config_invalid, "log bounds must satisfy 0 < min < max");
    }
    if (!(autoscale_pad >= 0.0) || !std::isfinite(autoscale_pad)) {
        raise(Errc::config_invalid, "autoscale_pad must be a finite non-negative fraction");
    }
}

uint64_t PlotStyle::fingerprint() const {
    char buf[256];
    const int n = std::snprintf(
        buf, sizeof buf, "%d|%d|%d|%u,%u,%u|%u,%u,%u|%s|%.17g|%.17g|%.17g", width, height,
        margin, background.r, background.g, background.b, line_color.r, line_color.g,
        line_color.b, to_string(y_scale).c_str(), log_min, log_max, autoscale_pad);
    return fnv1a64(std::span(reinterpret_cast<const unsigned char*>(buf),
                             static_cast<size_t>(n)));
}

FingerprintImage FingerprintImage::filled(int width, int height, Rgb color) {
    FingerprintImage img;
    img.width = width;
    img.height = height;
    img.pixels.resize(3 * static_cast<size_t>(width) * static_cast<size_t>(height));
    for (size_t i = 0; i < img.pixels.size(); i += 3) {
        img.pixels[i] = color.r;
        img.pixels[i + 1] = color.g;
        img.pixels[i + 2] = color.b;
    }
    return img;
}

std::vector<Point> scale_window(const iat::IatWindow& window, const PlotStyle& style) {
    style.validate();
    const size_t n = window.values.size();
    if (n < 2) {
        raise(Errc::config_invalid, "window must hold at least 2 values to plot");
    }

    // Value range for the vertical mapping.
    double lo = 0.0;
    double hi = 0.0;
    if (style.y_scale == YScale::linear_autoscale) {
        double vmin = window.values[0];
        double vmax = window.values[0];
        for (double v : window.values) {
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        }
        const double span = vmax - vmin;
        if (span == 0.0) {
            lo = vmin - 0.5;
            hi = vmin + 0.5;
        } else {
            lo = vmin - style.autoscale_pad * span;
            hi = vmax + style.autoscale_pad * span;
        }
    } else {
        lo = std::log10(style.log_min);
        hi = std::log10(style.log_max);
    }

    const double x_extent = style.width - 1 - 2 * style.margin;
    const double y_extent = style.height - 1 - 2 * style.margin;

    std::vector<Point> points;
    points.reserve(n);
    for (size_t k = 0; k < n; ++k) {
        double v = window.values[k];
        if (style.y_scale == YScale::log_fixed) {
            if (!(v > 0.0)) {
                raise(Errc::non_positive_value,
                      "log scale needs positive values, got " + std::to_string(v) +
                          " at index " + std::to_string(k));
            }
            v = std::log10(std::clamp(v, style.log_min, style.log_max));
        }
        const double t = (v - lo) / (hi - lo);
        Point p;
        p.x = style.margin + static_cast<int>(round_half_up(
                                 static_cast<double>(k) * x_extent /
                                 static_cast<double>(n - 1)));
        p.y = style.margin + static_cast<int>(round_half_up((1.0 - t) * y_extent));
        points.push_back(p);
    }
    return points;
}

void draw_line(FingerprintImage& image, Point a, Point b, Rgb color) {
    const int64_t dx = b.x - a.x;
    const int64_t dy = b.y - a.y;
    const int64_t steps = std::max(std::llabs(dx), std::llabs(dy));
    if (steps == 0) {
        image.set(a.x, a.y, color);
        return;
    }
    for (int64_t i = 0; i <= steps; ++i) {
        const int x = a.x + static_cast<int>(round_half_up_ratio(i * dx, steps));
        const int y = a.y + static_cast<int>(round_half_up_ratio(i * dy, steps));
        image.set(x, y, color);
    }
}

FingerprintImage rasterize(const iat::IatWindow& window, const PlotStyle& style) {
    const auto points = scale_window(window, style);
    FingerprintImage img = FingerprintImage::filled(style.width, style.height,
                                                    style.background);
    for (size_t k = 0; k + 1 < points.size(); ++k) {
        draw_line(img, points[k], points[k + 1], style.line_color);
    }
    return img;
}

std::vector<uint8_t> encode_ppm(const FingerprintImage& image) {
    char header[64];
    const int n = std::snprintf(header, sizeof header, "P6\n%d %d\n255\n", image.width,
                                image.height);
    std::vector<uint8_t> out;
    out.reserve(static_cast<size_t>(n) + image.pixels.size());
    out.insert(out.end(), header, header + n);
    out.insert(out.end(), image.pixels.begin(), image.pixels.end());
    return out;
}

namespace {

// Reads one whitespace-delimited unsigned decimal token.
size_t parse_uint(std::span<const unsigned char> bytes, size_t pos, int& value) {
    while (pos < bytes.size() && std::isspace(bytes[pos])) {
        ++pos;
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
        raise(Errc::io_failure, "malformed ppm header");
    }
    int64_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
        v = v * 10 + (bytes[pos] - '0');
        if (v > 1 << 20) {
            raise(Errc::io_failure, "ppm dimension out of range");
        }
        ++pos;
    }
    value = static_cast<int>(v);
    return pos;
}

} // namespace

FingerprintImage decode_ppm(std::span<const unsigned char> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
        raise(Errc::io_failure, "not a binary ppm (missing P6 magic)");
    }
    int width = 0;
    int height = 0;
    int maxval = 0;
    size_t pos = 2;
    pos = parse_uint(bytes, pos, width);
    pos = parse_uint(bytes, pos, height);
    pos = parse_uint(bytes, pos, maxval);
    if (maxval != 255) {
        raise(Errc::io_failure, "only 8-bit ppm supported");
    }
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
        raise(Errc::io_failure, "malformed ppm header");
    }
    ++pos; // single whitespace byte separates header from raster

    FingerprintImage img;
    img.width = width;
    img.height = height;
    const size_t want = 3 * static_cast<size_t>(width) * static_cast<size_t>(height);
    if (bytes.size() - pos < want) {
        raise(Errc::io_failure, "ppm raster truncated");
    }
    img.pixels.assign(bytes.begin() + static_cast<ptrdiff_t>(pos),
                      bytes.begin() + static_cast<ptrdiff_t>(pos + want));
    return img;
}

} // namespace iatfp::render
