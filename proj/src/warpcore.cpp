#include "viewadapt/warpcore.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace viewadapt::warpcore {

namespace {

constexpr double kCenterTol = 1e-9;

// Plane {n.X = d} re-expressed in a camera frame: n_c = R n_w, d_c = d + n_c.t.
void plane_in_camera(const Plane& plane, const camgeom::Pose& pose, Vec3* n_cam, double* d_cam) {
    *n_cam = pose.rotation * plane.normal;
    *d_cam = plane.offset + n_cam->dot(pose.translation);
}

// Bilinear sample at (x, y) with edge-clamped taps; caller guarantees the
// point lies inside the pixel coverage [-0.5, w-0.5) x [-0.5, h-0.5).
void sample_bilinear(const Image& img, double x, double y, std::uint8_t out[3]) {
    const int x0f = static_cast<int>(std::floor(x));
    const int y0f = static_cast<int>(std::floor(y));
    const float ax = static_cast<float>(x - x0f);
    const float ay = static_cast<float>(y - y0f);
    const int x0 = std::clamp(x0f, 0, img.width - 1);
    const int x1 = std::clamp(x0f + 1, 0, img.width - 1);
    const int y0 = std::clamp(y0f, 0, img.height - 1);
    const int y1 = std::clamp(y0f + 1, 0, img.height - 1);
    const std::uint8_t* p00 = img.at(x0, y0);
    const std::uint8_t* p10 = img.at(x1, y0);
    const std::uint8_t* p01 = img.at(x0, y1);
    const std::uint8_t* p11 = img.at(x1, y1);
    for (int c = 0; c < 3; ++c) {
        const float top = p00[c] + ax * (float(p10[c]) - float(p00[c]));
        const float bot = p01[c] + ax * (float(p11[c]) - float(p01[c]));
        const float v = top + ay * (bot - top);
        out[c] = static_cast<std::uint8_t>(std::lround(v));
    }
}

}  // namespace

Homography plane_homography(const CameraModel& src, const CameraModel& dst, const Plane& plane) {
    camgeom::validate(plane);
    Vec3 n_src, n_dst;
    double d_src = 0.0, d_dst = 0.0;
    plane_in_camera(plane, src.pose, &n_src, &d_src);
    plane_in_camera(plane, dst.pose, &n_dst, &d_dst);
    if (std::abs(d_src) <= kCenterTol || std::abs(d_dst) <= kCenterTol)
        throw std::invalid_argument("plane_homography: plane passes through an optical center");

    const camgeom::Pose rel = camgeom::relative_pose(src.pose, dst.pose);
    const Mat3 euclid = rel.rotation + rel.translation * n_src.transpose() / d_src;
    const Mat3 h = camgeom::intrinsic_matrix(dst.intrinsics) * euclid *
                   camgeom::intrinsic_matrix(src.intrinsics).inverse();
    return normalized(h);
}

std::pair<Image, ValidityMask> warp_homography(const Image& img, const Homography& h) {
    if (h.h.determinant() == 0.0) throw std::invalid_argument("warp_homography: singular homography");
    Mat3 inv = h.h.inverse();
    if (inv(2, 2) != 0.0) inv /= inv(2, 2);

    Image out(img.width, img.height);
    ValidityMask mask(img.width, img.height);
    const double xmax = img.width - 0.5;
    const double ymax = img.height - 0.5;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const Vec3 q = inv * Vec3(x, y, 1.0);
            if (!(q.z() > 0.0)) continue;
            const double sx = q.x() / q.z();
            const double sy = q.y() / q.z();
            if (sx < -0.5 || sx >= xmax || sy < -0.5 || sy >= ymax) continue;
            sample_bilinear(img, sx, sy, out.at(x, y));
            mask.set(x, y, true);
        }
    }
    return {std::move(out), std::move(mask)};
}

SplatBuffer::SplatBuffer(const CameraModel& dst, SplatParams params)
    : dst_(dst), params_(params) {
    validate(params_);
    const size_t n = static_cast<size_t>(dst.intrinsics.width) * dst.intrinsics.height;
    zbuf_.assign(n, std::numeric_limits<float>::infinity());
    order_.assign(n, std::numeric_limits<std::uint64_t>::max());
    color_.assign(n * 3, 0);
    hit_.assign(n, 0);
}

void SplatBuffer::add_view(const Image& img, const DepthMap& depth, const CameraModel& src,
                           int view_index) {
    if (img.width != depth.width || img.height != depth.height ||
        img.width != src.intrinsics.width || img.height != src.intrinsics.height)
        throw std::invalid_argument("splat: image/depth dimensions do not match source intrinsics");

    const camgeom::Pose rel = camgeom::relative_pose(src.pose, dst_.pose);
    const int dw = dst_.intrinsics.width;
    const int dh = dst_.intrinsics.height;
    const float z_eps = static_cast<float>(params_.z_eps);

    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (!depth.valid_at(x, y)) continue;
            const Vec3 pt_src = camgeom::unproject(x, y, depth.at(x, y), src.intrinsics);
            const Vec3 pt_dst = camgeom::transform(rel, pt_src);
            const auto uv = camgeom::project(pt_dst, dst_.intrinsics);
            if (!uv) continue;

            int u0, u1, v0, v1;
            if (params_.radius == 2) {
                u0 = static_cast<int>(std::floor(uv->x()));
                v0 = static_cast<int>(std::floor(uv->y()));
                u1 = u0 + 1;
                v1 = v0 + 1;
            } else {
                const int cu = static_cast<int>(std::lround(uv->x()));
                const int cv = static_cast<int>(std::lround(uv->y()));
                const int half = params_.radius / 2;  // 0 for 1x1, 1 for 3x3
                u0 = cu - half;
                u1 = cu + half;
                v0 = cv - half;
                v1 = cv + half;
            }

            const float zf = static_cast<float>(pt_dst.z());
            const std::uint64_t key = (static_cast<std::uint64_t>(view_index) << 40) |
                                      (static_cast<std::uint64_t>(y) * img.width + x);
            const std::uint8_t* rgb = img.at(x, y);
            for (int v = std::max(v0, 0); v <= std::min(v1, dh - 1); ++v) {
                for (int u = std::max(u0, 0); u <= std::min(u1, dw - 1); ++u) {
                    const size_t k = static_cast<size_t>(v) * dw + u;
                    bool take = false;
                    if (!hit_[k]) {
                        take = true;
                    } else if (zf < zbuf_[k] - z_eps) {
                        take = true;
                    } else if (std::abs(zf - zbuf_[k]) <= z_eps && key < order_[k]) {
                        take = true;
                    }
                    if (take) {
                        hit_[k] = 1;
                        zbuf_[k] = zf;
                        order_[k] = key;
                        color_[k * 3 + 0] = rgb[0];
                        color_[k * 3 + 1] = rgb[1];
                        color_[k * 3 + 2] = rgb[2];
                    }
                }
            }
        }
    }
}

std::pair<Image, ValidityMask> SplatBuffer::resolve() const {
    Image out(dst_.intrinsics.width, dst_.intrinsics.height);
    ValidityMask mask(out.width, out.height);
    const size_t n = hit_.size();
    for (size_t k = 0; k < n; ++k) {
        if (!hit_[k]) continue;
        mask.bits[k] = 1;
        out.pixels[k * 3 + 0] = color_[k * 3 + 0];
        out.pixels[k * 3 + 1] = color_[k * 3 + 1];
        out.pixels[k * 3 + 2] = color_[k * 3 + 2];
    }
    return {std::move(out), std::move(mask)};
}

std::pair<Image, ValidityMask> reproject_depth(const Image& img, const DepthMap& depth,
                                               const CameraModel& src, const CameraModel& dst,
                                               const SplatParams& splat) {
    SplatBuffer buf(dst, splat);
    buf.add_view(img, depth, src, 0);
    return buf.resolve();
}

}  // namespace viewadapt::warpcore
