#pragma once

#include "viewadapt/image.hpp"

#include <array>

namespace viewadapt::inpaint {

using warpcore::Image;
using warpcore::ValidityMask;

struct InpaintParams {
    int radius = 5;           // neighborhood for the weighted average, pixels
    int band = 0;             // narrow-band width outside the hole; 0 = radius
    std::array<std::uint8_t, 3> fallback_color = {127, 127, 127};
};

inline void validate(const InpaintParams& p) {
    if (p.radius < 1) throw std::invalid_argument("inpaint: radius must be >= 1");
    if (p.band < 0) throw std::invalid_argument("inpaint: band must be >= 0");
}

struct InpaintResult {
    Image image;
    bool used_fallback = false;  // set when the mask had no valid pixel at all
};

/// Telea fast-marching inpainting. Mask-true pixels pass through bit-exact;
/// mask-false pixels fill in ascending distance-to-boundary order as a
/// normalized weighted average of already-known pixels within `radius`,
/// weight = direction * geometric-distance * level-set-distance.
/// An all-false mask yields a fallback_color fill with used_fallback set.
InpaintResult inpaint_telea(const Image& img, const ValidityMask& mask,
                            const InpaintParams& params = {});

/// Convenience wrapper: returns the input untouched (zero-cost) for an
/// all-true mask, otherwise runs inpaint_telea.
InpaintResult adapt_and_fill(const Image& img, const ValidityMask& mask,
                             const InpaintParams& params = {});

/// Distance-to-known-boundary field from the upwind Eikonal solve, exposed
/// for verification; entries are 0 on known pixels and the fast-marching
/// distance on holes.
std::vector<double> fmm_distance_field(const ValidityMask& mask);

}  // namespace viewadapt::inpaint
