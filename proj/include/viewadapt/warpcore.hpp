#pragma once

#include "viewadapt/camgeom.hpp"
#include "viewadapt/image.hpp"

#include <utility>

namespace viewadapt::warpcore {

using camgeom::CameraModel;
using camgeom::Mat3;
using camgeom::Plane;
using camgeom::Vec2;
using camgeom::Vec3;

/// 3x3 projective map between pixel coordinates, normalized so h(2,2) = 1
/// whenever that entry is nonzero.
struct Homography {
    Mat3 h = Mat3::Identity();
};

inline Homography normalized(Mat3 m) {
    if (m(2, 2) != 0.0) m /= m(2, 2);
    return Homography{m};
}

/// Forward-splat footprint. radius 1 paints the nearest pixel, 2 a 2x2
/// block around the continuous hit, 3 a 3x3 block around the nearest pixel.
struct SplatParams {
    int radius = 1;   // one of {1, 2, 3}
    double z_eps = 1e-4;  // meters; depth ties within z_eps resolved by source index
};

inline void validate(const SplatParams& p) {
    if (p.radius < 1 || p.radius > 3) throw std::invalid_argument("splat: radius must be 1, 2 or 3");
    if (!(p.z_eps > 0.0)) throw std::invalid_argument("splat: z_eps must be positive");
}

/// Pixel map induced by a world plane between two cameras: src pixels of
/// plane points land on their dst pixels. Throws when the plane passes
/// within 1e-9 m of either optical center.
Homography plane_homography(const CameraModel& src, const CameraModel& dst, const Plane& plane);

/// Inverse warp with bilinear sampling. Each dst pixel samples src at
/// H^-1 (u, v, 1); pixels whose source point leaves the src image or whose
/// homogeneous w is <= 0 come back black with mask false.
std::pair<Image, ValidityMask> warp_homography(const Image& img, const Homography& h);

/// Z-buffered forward splat accumulator; lets callers fuse several source
/// views into a single target render before resolving to an image.
class SplatBuffer {
public:
    SplatBuffer(const CameraModel& dst, SplatParams params);

    /// Splats every valid-depth pixel of one source view. view_index feeds
    /// the deterministic tie-break (lower (view, pixel) index wins ties).
    void add_view(const Image& img, const DepthMap& depth, const CameraModel& src, int view_index);

    std::pair<Image, ValidityMask> resolve() const;

private:
    CameraModel dst_;
    SplatParams params_;
    std::vector<float> zbuf_;
    std::vector<std::uint64_t> order_;
    std::vector<std::uint8_t> color_;
    std::vector<std::uint8_t> hit_;
};

/// Point-cloud reprojection of a single RGB-D view into camera dst.
std::pair<Image, ValidityMask> reproject_depth(const Image& img, const DepthMap& depth,
                                               const CameraModel& src, const CameraModel& dst,
                                               const SplatParams& splat = {});

}  // namespace viewadapt::warpcore
