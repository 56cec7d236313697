#include "iatfp/augment.hpp"

#include <algorithm>
#include <cmath>

#include "iatfp/errors.hpp"
#include "iatfp/util.hpp"

namespace iatfp::augment {

std::string to_string(FillMode) { return "nearest_edge"; }

FillMode fill_mode_from_string(const std::string& name) {
    if (name == "nearest_edge") return FillMode::nearest_edge;
    raise(Errc::config_invalid, "unknown fill mode '" + name + "'");
}

void AugmentParams::validate() const {
    if (!(shear_range >= 0.0 && shear_range < 1.0)) {
        raise(Errc::config_invalid, "shear_range must lie in [0, 1)");
    }
    if (!(zoom_range >= 0.0 && zoom_range < 1.0)) {
        raise(Errc::config_invalid, "zoom_range must lie in [0, 1)");
    }
}

render::FingerprintImage hflip(const render::FingerprintImage& image) {
    render::FingerprintImage out;
    out.width = image.width;
    out.height = image.height;
    out.pixels.resize(image.pixels.size());
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            out.set(x, y, image.at(image.width - 1 - x, y));
        }
    }
    return out;
}

render::FingerprintImage affine_sample(const render::FingerprintImage& image,
                                       const Affine2x3& m, FillMode) {
    const double det = m.a00 * m.a11 - m.a01 * m.a10;
    if (std::abs(det) <= 1e-9) {
        raise(Errc::singular_transform,
              "affine matrix is not invertible (|det| = " + std::to_string(std::abs(det)) +
                  ")");
    }
    const double i00 = m.a11 / det;
    const double i01 = -m.a01 / det;
    const double i10 = -m.a10 / det;
    const double i11 = m.a00 / det;
    const double cx = (image.width - 1) / 2.0;
    const double cy = (image.height - 1) / 2.0;

    render::FingerprintImage out;
    out.width = image.width;
    out.height = image.height;
    out.pixels.resize(image.pixels.size());
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const double u = (x - cx) - m.b0;
            const double v = (y - cy) - m.b1;
            const double sx = i00 * u + i01 * v + cx;
            const double sy = i10 * u + i11 * v + cy;
            const int isx = static_cast<int>(std::clamp<int64_t>(
                round_half_up(sx), 0, image.width - 1));
            const int isy = static_cast<int>(std::clamp<int64_t>(
                round_half_up(sy), 0, image.height - 1));
            out.set(x, y, image.at(isx, isy));
        }
    }
    return out;
}

DrawnTransform draw_transform(const AugmentParams& params, Rng& rng) {
    params.validate();
    const double s = rng.uniform(-params.shear_range, params.shear_range);
    const double zx = rng.uniform(1.0 - params.zoom_range, 1.0 + params.zoom_range);
    const double zy = rng.uniform(1.0 - params.zoom_range, 1.0 + params.zoom_range);

    DrawnTransform t;
    // zoom composed after vertical shear (y' = y + s*x)
    t.matrix.a00 = zx;
    t.matrix.a01 = 0.0;
    t.matrix.a10 = zy * s;
    t.matrix.a11 = zy;
    t.flip = params.horizontal_flip && rng.bernoulli(0.5);
    return t;
}

render::FingerprintImage augment_image(const render::FingerprintImage& image,
                                       const AugmentParams& params, uint64_t epoch,
                                       uint64_t sample_index) {
    Rng rng(hash_combine(
        hash_combine(hash_combine(params.seed, stream::augment), epoch), sample_index));
    const DrawnTransform t = draw_transform(params, rng);
    render::FingerprintImage out = affine_sample(image, t.matrix, params.fill);
    if (t.flip) {
        out = hflip(out);
    }
    return out;
}

} // namespace iatfp::augment
