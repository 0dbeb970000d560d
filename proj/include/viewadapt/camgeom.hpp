#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace viewadapt::camgeom {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

constexpr double kOrthoTol = 1e-9;
constexpr double kDefaultZMin = 1e-6;

/// Pinhole intrinsics. Integer pixel coordinates address pixel centers;
/// pixel (i, j) covers [i-0.5, i+0.5) x [j-0.5, j+0.5).
struct Intrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;
};

/// Rigid world-to-camera map, X_cam = R * X_world + t.
/// Camera axes: +x right, +y down, +z forward along the optical axis.
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
};

struct CameraModel {
    std::string id;
    Intrinsics intrinsics;
    Pose pose;
};

struct CameraRig {
    std::vector<CameraModel> cameras;
};

/// Plane {X : normal . X = offset} with unit normal, world frame.
struct Plane {
    Vec3 normal = Vec3::UnitZ();
    double offset = 0.0;
};

inline bool is_rotation(const Mat3& r, double tol = kOrthoTol) {
    return (r.transpose() * r - Mat3::Identity()).norm() <= tol &&
           std::abs(r.determinant() - 1.0) <= tol;
}

/// Nearest rotation matrix in the Frobenius sense (via SVD).
inline Mat3 orthonormalized(const Mat3& r) {
    Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    Mat3 v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
    return u * v.transpose();
}

inline void validate(const Intrinsics& k) {
    if (!(k.fx > 0.0) || !(k.fy > 0.0)) throw std::invalid_argument("intrinsics: focal lengths must be positive");
    if (k.width < 1 || k.height < 1) throw std::invalid_argument("intrinsics: sensor size must be at least 1x1");
    if (!(k.cx >= 0.0 && k.cx < k.width) || !(k.cy >= 0.0 && k.cy < k.height))
        throw std::invalid_argument("intrinsics: principal point outside sensor");
}

inline void validate(const Pose& p) {
    if (!is_rotation(p.rotation)) throw std::invalid_argument("pose: rotation is not orthonormal");
    if (!p.translation.allFinite()) throw std::invalid_argument("pose: translation not finite");
}

inline void validate(const Plane& p) {
    if (std::abs(p.normal.norm() - 1.0) > kOrthoTol) throw std::invalid_argument("plane: normal must be unit length");
}

inline void validate(const CameraRig& rig) {
    if (rig.cameras.empty()) throw std::invalid_argument("rig: must contain at least one camera");
    for (size_t i = 0; i < rig.cameras.size(); ++i)
        for (size_t j = i + 1; j < rig.cameras.size(); ++j)
            if (rig.cameras[i].id == rig.cameras[j].id)
                throw std::invalid_argument("rig: duplicate camera id '" + rig.cameras[i].id + "'");
}

inline Vec3 transform(const Pose& p, const Vec3& x) { return p.rotation * x + p.translation; }

/// a then b composed: result maps X to a(b(X)).
inline Pose compose(const Pose& a, const Pose& b) {
    Pose out;
    out.rotation = a.rotation * b.rotation;
    out.translation = a.rotation * b.translation + a.translation;
    if ((out.rotation.transpose() * out.rotation - Mat3::Identity()).norm() > kOrthoTol)
        out.rotation = orthonormalized(out.rotation);
    return out;
}

inline Pose inverse(const Pose& p) {
    Pose out;
    out.rotation = p.rotation.transpose();
    out.translation = -(p.rotation.transpose() * p.translation);
    return out;
}

/// T with X_dst = T(X_src) for world-to-camera poses src, dst.
inline Pose relative_pose(const Pose& src, const Pose& dst) {
    return compose(dst, inverse(src));
}

/// Optical center in world coordinates.
inline Vec3 camera_center(const Pose& p) { return -(p.rotation.transpose() * p.translation); }

inline Mat3 intrinsic_matrix(const Intrinsics& k) {
    Mat3 m;
    m << k.fx, 0.0, k.cx, 0.0, k.fy, k.cy, 0.0, 0.0, 1.0;
    return m;
}

/// Pinhole projection of a camera-frame point. Empty when the point sits at
/// or behind the optical center (z <= z_min); callers skip such points.
inline std::optional<Vec2> project(const Vec3& point_cam, const Intrinsics& k,
                                   double z_min = kDefaultZMin) {
    if (!(point_cam.z() > z_min)) return std::nullopt;
    return Vec2(k.fx * point_cam.x() / point_cam.z() + k.cx,
                k.fy * point_cam.y() / point_cam.z() + k.cy);
}

/// Camera-frame point for a pixel at z-depth `depth` (meters along +z).
inline Vec3 unproject(double u, double v, double depth, const Intrinsics& k) {
    if (!(depth > 0.0) || !std::isfinite(depth)) throw std::invalid_argument("unproject: depth must be finite and positive");
    return Vec3((u - k.cx) / k.fx * depth, (v - k.cy) / k.fy * depth, depth);
}

/// World-to-camera pose for a camera at `center` aimed at `target`.
/// Image "down" (+y) follows world -z with the forward component removed.
inline Pose look_at(const Vec3& center, const Vec3& target) {
    const Vec3 f = target - center;
    if (f.norm() < 1e-9) throw std::invalid_argument("look_at: camera center coincides with target");
    const Vec3 z = f.normalized();
    Vec3 down = Vec3(0.0, 0.0, -1.0);
    Vec3 y = down - down.dot(z) * z;
    if (y.norm() < 1e-9) {
        // looking straight up or down; fall back to world +x as image "right"
        y = Vec3::UnitY() - Vec3::UnitY().dot(z) * z;
    }
    y.normalize();
    const Vec3 x = y.cross(z);
    Mat3 cam_to_world;
    cam_to_world.col(0) = x;
    cam_to_world.col(1) = y;
    cam_to_world.col(2) = z;
    Pose p;
    p.rotation = cam_to_world.transpose();
    p.translation = -(p.rotation * center);
    return p;
}

/// Plain-text rig serialization; doubles carry 17 significant digits so the
/// round trip is bit-exact.
std::string serialize_rig(const CameraRig& rig);
CameraRig parse_rig(const std::string& text);
void save_rig(const CameraRig& rig, const std::string& path);
CameraRig load_rig(const std::string& path);

}  // namespace viewadapt::camgeom
