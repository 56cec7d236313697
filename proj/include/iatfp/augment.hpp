#pragma once

#include <cstdint>
#include <string>

#include "iatfp/render.hpp"
#include "iatfp/rng.hpp"

namespace iatfp::augment {

enum class FillMode { nearest_edge };

std::string to_string(FillMode mode);
FillMode fill_mode_from_string(const std::string& name);

struct AugmentParams {
    double shear_range = 0.2; // vertical shear factor bound
    double zoom_range = 0.2;  // per-axis zoom in [1-r, 1+r]
    bool horizontal_flip = true;
    FillMode fill = FillMode::nearest_edge;
    uint64_t seed = 0;

    void validate() const;

    bool operator==(const AugmentParams&) const = default;
};

// Forward map dest = M * src + b in center-relative coordinates.
struct Affine2x3 {
    double a00 = 1.0, a01 = 0.0;
    double a10 = 0.0, a11 = 1.0;
    double b0 = 0.0, b1 = 0.0;

    bool operator==(const Affine2x3&) const = default;
};

struct DrawnTransform {
    Affine2x3 matrix;
    bool flip = false;
};

// pixel (x, y) <- source (width-1-x, y)
render::FingerprintImage hflip(const render::FingerprintImage& image);

// Inverse-mapping nearest-neighbor resample about the image center
// ((w-1)/2, (h-1)/2); out-of-bounds source coordinates clamp to the edge.
// Output dimensions equal input dimensions.
render::FingerprintImage affine_sample(const render::FingerprintImage& image,
                                       const Affine2x3& matrix,
                                       FillMode fill = FillMode::nearest_edge);

// Draw order is fixed: shear s ~ U[-r,+r], zoom zx then zy ~ U[1-z,1+z],
// then the flip coin (only when horizontal_flip). Composed matrix is
// zoom after shear: [[zx, 0], [zy*s, zy]].
DrawnTransform draw_transform(const AugmentParams& params, Rng& rng);

// One independently-seeded draw per (seed, epoch, sample) so results do not
// depend on processing order. Applies the affine first, then the flip.
render::FingerprintImage augment_image(const render::FingerprintImage& image,
                                       const AugmentParams& params, uint64_t epoch,
                                       uint64_t sample_index);

} // namespace iatfp::augment
