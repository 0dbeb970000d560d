#pragma once

#include "viewadapt/camgeom.hpp"
#include "viewadapt/image.hpp"
#include "viewadapt/inpaint.hpp"
#include "viewadapt/nvslink.hpp"
#include "viewadapt/scenesim.hpp"
#include "viewadapt/warpcore.hpp"

#include <cstdint>
#include <optional>
#include <variant>

namespace viewadapt::adapt {

using camgeom::CameraModel;
using camgeom::CameraRig;
using camgeom::Plane;
using camgeom::Vec3;
using inpaint::InpaintParams;
using scenesim::Rgb;
using warpcore::DepthMap;
using warpcore::Image;
using warpcore::SplatParams;
using warpcore::ValidityMask;
using Vec2 = Eigen::Vector2d;

struct ViewObservation {
    std::string camera_id;
    Image image;
    std::optional<DepthMap> depth;
};

/// Time-stamped multi-camera observation set.
struct FrameSet {
    std::int64_t timestamp = 0;
    std::vector<ViewObservation> views;
};

// --- adaptation methods ----------------------------------------------------

struct IdentityMethod {};

struct HomographyMethod {
    Plane plane;
    InpaintParams inpaint;
};

struct DepthReprojectionMethod {
    SplatParams splat;
    InpaintParams inpaint;
    bool fuse_all_views = true;  // false: use only the first observed view
};

struct RemoteNvsMethod {
    nvslink::Endpoint endpoint;
    int timeout_ms = nvslink::kDefaultTimeoutMs;
    InpaintParams inpaint;  // used by the geometric fallback
    bool fallback_enabled = true;
    SplatParams fallback_splat;
    std::optional<Plane> fallback_plane;  // homography fallback when depth is absent
};

using AdapterMethod =
    std::variant<IdentityMethod, HomographyMethod, DepthReprojectionMethod, RemoteNvsMethod>;

std::string method_name(const AdapterMethod& method);

enum class AdaptErrorKind { MissingDepth, MissingPlane, RemoteFailure, IdMismatch, BadInput };

struct AdaptError : std::runtime_error {
    AdaptErrorKind kind;
    AdaptError(AdaptErrorKind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

struct AdaptOutput {
    FrameSet frames;                  // one synthesized view per train camera, rig order
    std::vector<ValidityMask> masks;  // pre-fill validity per view (all-true when holeless)
    double synth_latency_ms = 0.0;
    double remote_latency_ms = -1.0;  // round trip of the remote call, when one was made
    std::string method_used;  // method name, "+fallback:<name>" after a remote failure
};

/// The adaptation map: synthesizes one view per train_rig camera from the
/// observed test views, holes filled by inpainting. Output count follows
/// train_rig regardless of how many views were observed.
AdaptOutput adapt(const FrameSet& frames, const CameraRig& test_rig, const CameraRig& train_rig,
                  const AdapterMethod& method);

// --- toy viewpoint-sensitive servo policy ----------------------------------

/// Commanded tabletop displacement; done signals the policy believes the
/// proxy has arrived.
struct Action {
    double dx = 0.0;
    double dy = 0.0;
    bool done = false;
};

struct TaskSpec {
    std::string instruction;
    Rgb target_color = {200, 40, 40};
    double success_radius = 0.01;  // meters
};

/// Fixed affine pixel-to-world calibration for the canonical camera. The
/// policy's entire viewpoint sensitivity lives here: the map is only valid
/// for the exact camera it was fit on.
struct PixelToWorldMap {
    Eigen::Matrix<double, 2, 3> pixel_to_world = Eigen::Matrix<double, 2, 3>::Zero();
    double residual_px = 0.0;    // max pixel residual of the grid fit
    double plane_height = 0.0;   // world z the map is valid on
    std::uint64_t checksum() const;
};

/// Least-squares fit of (u, v, 1) -> (x, y) over an n x n world grid of
/// half-extent grid_half at height plane_height, projected through `cam`.
PixelToWorldMap calibrate_pixel_map(const CameraModel& cam, double plane_height,
                                    double grid_half = 0.06, int grid_n = 7);

Vec2 map_pixel(const PixelToWorldMap& map, double u, double v);

struct Detection {
    bool found = false;
    double u = 0.0;
    double v = 0.0;
    int pixel_count = 0;
};

/// Chromaticity-based color segmentation (shading-invariant): centroid of
/// pixels whose normalized RGB lies within tolerance of the target color.
Detection segment_target(const Image& view, const Rgb& target_color);

constexpr double kDefaultStepCap = 0.05;  // meters per action

/// Maps the detected target through the calibration and steps the proxy
/// toward it (capped); no detection yields a zero action.
Action servo_policy(const Image& view, const TaskSpec& task, const PixelToWorldMap& calib,
                    const Vec2& proxy_xy, double step_cap = kDefaultStepCap);

// --- closed-loop episodes ----------------------------------------------------

struct ViewQuality {
    std::string view_id;
    double psnr_masked = 0.0;
    double psnr_full = 0.0;
    double ssim = 0.0;
    double fill_fraction = 0.0;  // fraction of pixels that had to be inpainted
};

struct FrameRow {
    int frame = 0;
    std::string method;
    double synth_ms = 0.0;
    double policy_ms = 0.0;
    bool detected = false;
    Action action;
    Vec2 proxy_after = Vec2::Zero();
    std::vector<ViewQuality> views;
};

struct StepOptions {
    std::string policy_view_id = "agent";
    double step_cap = kDefaultStepCap;
    bool compute_quality = true;
};

/// Synthesize-then-act: runs the adaptation and the frozen policy on one
/// observation set; capture and execution stay with the episode driver.
/// oracle_scene (when given) provides ground-truth train views for quality.
std::pair<Action, FrameRow> run_step(const FrameSet& frames, const CameraRig& test_rig,
                                     const CameraRig& train_rig, const AdapterMethod& method,
                                     const PixelToWorldMap& calib, const TaskSpec& task,
                                     const Vec2& proxy_xy, const StepOptions& opts,
                                     const scenesim::SceneDescription* oracle_scene);

struct EpisodeSetup {
    scenesim::SceneDescription scene;  // without the proxy marker
    TaskSpec task;
    Vec2 target_xy = Vec2::Zero();
    Vec2 proxy_start = Vec2::Zero();
};

struct TaskSceneParams {
    double table_height = 0.0;
    double target_radius = 0.025;
    double target_rho_min = 0.055;
    double target_rho_max = 0.095;
    int max_distractors = 2;
    double distractor_clearance = 0.06;  // keeps sight lines to the target open
    double proxy_start_radius = 0.13;
    Rgb target_color = {200, 40, 40};
};

/// Deterministic reach-task scene: one target sphere in an annulus around
/// the workspace center plus a few non-occluding distractors.
EpisodeSetup sample_task_scene(std::uint64_t seed, const TaskSceneParams& params = {});

struct EpisodeOptions {
    int max_steps = 25;
    StepOptions step;
    bool render_proxy_marker = true;
    double proxy_marker_radius = 0.012;
    Rgb proxy_marker_color = {240, 240, 240};
};

struct EpisodeResult {
    bool success = false;
    int steps = 0;
    std::vector<FrameRow> rows;
};

/// Closed loop: render test views, adapt, run the policy, move the proxy;
/// success when the proxy lands within the task's success radius of the
/// target. Fully deterministic given the setup.
EpisodeResult run_episode(const EpisodeSetup& setup, const CameraRig& test_rig,
                          const CameraRig& train_rig, const AdapterMethod& method,
                          const PixelToWorldMap& calib, const EpisodeOptions& opts = {});

// --- canonical desk-scale rig ------------------------------------------------

/// The fixed dual-camera training rig: a scene-facing "agent" camera and a
/// closer "wrist" camera, both aimed at the workspace center.
CameraRig default_train_rig(int image_size = 256);
Vec3 default_workspace_center();

}  // namespace viewadapt::adapt
