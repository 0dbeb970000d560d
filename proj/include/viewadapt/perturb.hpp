#pragma once

#include "viewadapt/camgeom.hpp"

#include <cstdint>

namespace viewadapt::perturb {

using camgeom::CameraModel;
using camgeom::Pose;
using camgeom::Vec3;

/// Severity of a random camera-pose deviation. The ceilings (0.15 m, 60
/// degrees) bound every level.
struct PerturbationLevel {
    std::string name;
    double t_max = 0.15;      // meters
    double r_max_deg = 60.0;  // degrees
};

inline const PerturbationLevel kSmall{"small", 0.05, 15.0};
inline const PerturbationLevel kMedium{"medium", 0.10, 30.0};
inline const PerturbationLevel kLarge{"large", 0.15, 60.0};

inline void validate(const PerturbationLevel& lvl) {
    if (!(lvl.t_max > 0.0 && lvl.t_max <= 0.15))
        throw std::invalid_argument("perturb: t_max must lie in (0, 0.15]");
    if (!(lvl.r_max_deg > 0.0 && lvl.r_max_deg <= 60.0))
        throw std::invalid_argument("perturb: r_max must lie in (0, 60] degrees");
}

struct PerturbationSpec {
    PerturbationLevel level;
    std::uint64_t seed = 0;
    bool retarget = false;  // re-aim the perturbed camera at a fixed workspace point
};

/// Bounded random pose delta, deterministic in (spec.seed, draw_index).
/// Translation: uniform direction, magnitude uniform in [t_max/2, t_max].
/// Rotation: uniform axis, angle uniform in [r_max/2, r_max].
Pose sample_delta(const PerturbationSpec& spec, std::uint64_t draw_index);

/// Applies a delta in world coordinates: the optical center moves by the
/// delta translation and the orientation pre-rotates by the delta rotation.
/// With retarget the rotation is replaced by a look-at towards `target`.
CameraModel apply_perturbation(const CameraModel& cam, const Pose& delta, bool retarget,
                               const Vec3& target);

/// Convenience: sample_delta + apply_perturbation for one camera.
CameraModel perturb_camera(const CameraModel& cam, const PerturbationSpec& spec,
                           std::uint64_t draw_index, const Vec3& target);

}  // namespace viewadapt::perturb
