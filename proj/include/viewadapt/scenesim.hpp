#pragma once

#include "viewadapt/camgeom.hpp"
#include "viewadapt/image.hpp"

#include <array>
#include <optional>
#include <variant>

namespace viewadapt::scenesim {

using camgeom::CameraModel;
using camgeom::CameraRig;
using camgeom::Plane;
using camgeom::Vec3;
using warpcore::DepthMap;
using warpcore::Image;

using Rgb = std::array<std::uint8_t, 3>;

/// Infinite work plane with a two-tone checker texture.
struct CheckerTable {
    Plane plane;
    double cell = 0.08;  // meters
    Rgb color_a = {200, 200, 200};
    Rgb color_b = {150, 150, 150};
};

struct Sphere {
    Vec3 center = Vec3::Zero();
    double radius = 0.03;
    Rgb albedo = {200, 40, 40};
};

/// Axis-aligned box.
struct BoxPrim {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();
    Rgb albedo = {40, 80, 200};
};

using Primitive = std::variant<Sphere, BoxPrim>;

struct DirectionalLight {
    Vec3 to_light = Vec3(0.3, -0.25, 0.92).normalized();  // unit, surface -> light
    double ambient = 0.35;
};

struct SceneDescription {
    std::optional<CheckerTable> table;
    std::vector<Primitive> objects;
    DirectionalLight light;
    Rgb background = {45, 45, 50};
};

struct RenderOutput {
    Image image;
    DepthMap depth;  // z-depth along the optical axis; 0 where nothing is hit
};

void validate(const SceneDescription& scene);

/// One ray per pixel center, nearest hit, Lambertian shading
/// albedo * (ambient + (1 - ambient) * max(0, n . l)); no shadows.
RenderOutput render(const SceneDescription& scene, const CameraModel& cam);

std::vector<RenderOutput> render_rig(const SceneDescription& scene, const CameraRig& rig);

/// View-independent shade of a surface patch; normals facing away from the
/// ray are flipped, so surfaces are double sided.
Rgb shade(const Rgb& albedo, const Vec3& normal, const Vec3& ray_dir, const DirectionalLight& light);

/// Distance from a world point to the nearest scene surface (meters);
/// the geometric residual oracle used by the rendering tests.
double surface_distance(const SceneDescription& scene, const Vec3& point);

struct SceneSampleParams {
    double table_height = 0.0;
    double checker_cell = 0.08;
    double workspace_half = 0.16;  // object centers confined to this square
    int min_objects = 3;
    int max_objects = 5;
    double min_size = 0.03;   // sphere radius / box half-extent range
    double max_size = 0.06;
};

/// Deterministic pseudo-random tabletop scene; same seed, same scene.
SceneDescription sample_scene(std::uint64_t seed, const SceneSampleParams& params = {});

/// Fixed saturated palette that object colors are drawn from.
const std::vector<Rgb>& object_palette();

// Plain-text scene serialization (17 significant digits, exact round trip).
std::string serialize_scene(const SceneDescription& scene);
SceneDescription parse_scene(const std::string& text);
void save_scene(const SceneDescription& scene, const std::string& path);
SceneDescription load_scene(const std::string& path);

}  // namespace viewadapt::scenesim
