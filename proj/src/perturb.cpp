#include "viewadapt/perturb.hpp"

#include "viewadapt/rng.hpp"

#include <Eigen/Geometry>

#include <cmath>

namespace viewadapt::perturb {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

// Uniform direction on the unit sphere from two uniform draws.
Vec3 sample_direction(rng::CounterRng& gen) {
    const double z = 2.0 * gen.next_double() - 1.0;
    const double phi = 2.0 * M_PI * gen.next_double();
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return Vec3(r * std::cos(phi), r * std::sin(phi), z);
}

}  // namespace

Pose sample_delta(const PerturbationSpec& spec, std::uint64_t draw_index) {
    validate(spec.level);
    rng::CounterRng gen(spec.seed, draw_index);

    const Vec3 t_dir = sample_direction(gen);
    const double t_mag = gen.uniform(0.5 * spec.level.t_max, spec.level.t_max);
    const Vec3 axis = sample_direction(gen);
    const double angle = gen.uniform(0.5 * spec.level.r_max_deg, spec.level.r_max_deg) * kDegToRad;

    Pose delta;
    delta.rotation = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    delta.translation = t_mag * t_dir;
    return delta;
}

CameraModel apply_perturbation(const CameraModel& cam, const Pose& delta, bool retarget,
                               const Vec3& target) {
    camgeom::validate(cam.pose);
    const Vec3 center = camgeom::camera_center(cam.pose) + delta.translation;

    CameraModel out = cam;
    if (retarget) {
        out.pose = camgeom::look_at(center, target);
        return out;
    }
    camgeom::Mat3 cam_to_world = delta.rotation * cam.pose.rotation.transpose();
    if (!camgeom::is_rotation(cam_to_world)) cam_to_world = camgeom::orthonormalized(cam_to_world);
    out.pose.rotation = cam_to_world.transpose();
    out.pose.translation = -(out.pose.rotation * center);
    return out;
}

CameraModel perturb_camera(const CameraModel& cam, const PerturbationSpec& spec,
                           std::uint64_t draw_index, const Vec3& target) {
    const Pose delta = sample_delta(spec, draw_index);
    return apply_perturbation(cam, delta, spec.retarget, target);
}

}  // namespace viewadapt::perturb
