#include "viewadapt/adapt.hpp"

#include "viewadapt/metrics.hpp"
#include "viewadapt/rng.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>

namespace viewadapt::adapt {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

const CameraModel& rig_camera(const CameraRig& rig, const std::string& id, const char* role) {
    for (const CameraModel& cam : rig.cameras)
        if (cam.id == id) return cam;
    throw AdaptError(AdaptErrorKind::BadInput,
                     std::string(role) + " rig has no camera '" + id + "'");
}

void check_views(const FrameSet& frames, const CameraRig& test_rig) {
    if (frames.views.empty()) throw AdaptError(AdaptErrorKind::BadInput, "frame set has no views");
    for (const ViewObservation& v : frames.views) {
        const CameraModel& cam = rig_camera(test_rig, v.camera_id, "test");
        if (v.image.width != cam.intrinsics.width || v.image.height != cam.intrinsics.height)
            throw AdaptError(AdaptErrorKind::BadInput,
                             "view '" + v.camera_id + "' does not match its intrinsics");
    }
    for (size_t i = 0; i < frames.views.size(); ++i)
        for (size_t j = i + 1; j < frames.views.size(); ++j)
            if (frames.views[i].camera_id == frames.views[j].camera_id)
                throw AdaptError(AdaptErrorKind::BadInput, "duplicate camera id in frame set");
}

AdaptOutput adapt_identity(const FrameSet& frames, const CameraRig& train_rig) {
    AdaptOutput out;
    out.frames.timestamp = frames.timestamp;
    for (const CameraModel& cam : train_rig.cameras) {
        const ViewObservation* match = nullptr;
        for (const ViewObservation& v : frames.views)
            if (v.camera_id == cam.id) match = &v;
        if (!match)
            throw AdaptError(AdaptErrorKind::IdMismatch,
                             "identity adaptation: no observed view for train camera '" + cam.id + "'");
        out.frames.views.push_back(*match);
        out.masks.emplace_back(match->image.width, match->image.height, true);
    }
    return out;
}


// Source preference per destination camera: the destination's own view (or
// the geometrically closest one) composites first and wins depth ties, which
// keeps the degenerate test-rig == train-rig case exact.
std::vector<const ViewObservation*> order_sources(const std::vector<const ViewObservation*>& views,
                                                  const CameraRig& test_rig,
                                                  const CameraModel& dst) {
    std::vector<std::pair<double, const ViewObservation*>> scored;
    for (const ViewObservation* v : views) {
        const CameraModel& src = rig_camera(test_rig, v->camera_id, "test");
        const double dist = (src.pose.rotation - dst.pose.rotation).norm() +
                            (camgeom::camera_center(src.pose) - camgeom::camera_center(dst.pose)).norm();
        scored.emplace_back(dist, v);
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<const ViewObservation*> out;
    for (const auto& [d, v] : scored) out.push_back(v);
    return out;
}
AdaptOutput adapt_homography(const FrameSet& frames, const CameraRig& test_rig,
                             const CameraRig& train_rig, const HomographyMethod& method) {
    AdaptOutput out;
    out.frames.timestamp = frames.timestamp;
    std::vector<const ViewObservation*> all_views;
    for (const ViewObservation& v : frames.views) all_views.push_back(&v);
    for (const CameraModel& dst : train_rig.cameras) {
        Image acc(dst.intrinsics.width, dst.intrinsics.height);
        ValidityMask mask(dst.intrinsics.width, dst.intrinsics.height);
        for (const ViewObservation* view_ptr : order_sources(all_views, test_rig, dst)) {
            const ViewObservation& view = *view_ptr;
            const CameraModel& src = rig_camera(test_rig, view.camera_id, "test");
            warpcore::Homography h;
            try {
                h = warpcore::plane_homography(src, dst, method.plane);
            } catch (const std::invalid_argument& e) {
                throw AdaptError(AdaptErrorKind::MissingPlane, e.what());
            }
            auto [warped, wmask] = warpcore::warp_homography(view.image, h);
            if (warped.width != acc.width || warped.height != acc.height)
                throw AdaptError(AdaptErrorKind::BadInput, "homography: dimension mismatch");
            // earlier views take precedence; later ones only fill holes
            for (int y = 0; y < acc.height; ++y)
                for (int x = 0; x < acc.width; ++x)
                    if (!mask.at(x, y) && wmask.at(x, y)) {
                        std::memcpy(acc.at(x, y), warped.at(x, y), 3);
                        mask.set(x, y, true);
                    }
        }
        out.frames.views.push_back(
            {dst.id, inpaint::adapt_and_fill(acc, mask, method.inpaint).image, std::nullopt});
        out.masks.push_back(std::move(mask));
    }
    return out;
}

bool same_camera(const CameraModel& a, const CameraModel& b) {
    return a.intrinsics.fx == b.intrinsics.fx && a.intrinsics.fy == b.intrinsics.fy &&
           a.intrinsics.cx == b.intrinsics.cx && a.intrinsics.cy == b.intrinsics.cy &&
           a.intrinsics.width == b.intrinsics.width && a.intrinsics.height == b.intrinsics.height &&
           (a.pose.rotation - b.pose.rotation).cwiseAbs().maxCoeff() == 0.0 &&
           (a.pose.translation - b.pose.translation).cwiseAbs().maxCoeff() == 0.0;
}

AdaptOutput adapt_depth(const FrameSet& frames, const CameraRig& test_rig,
                        const CameraRig& train_rig, const DepthReprojectionMethod& method) {
    std::vector<const ViewObservation*> sources;
    for (const ViewObservation& v : frames.views) {
        if (!v.depth)
            throw AdaptError(AdaptErrorKind::MissingDepth,
                             "depth reprojection: view '" + v.camera_id + "' has no depth");
        sources.push_back(&v);
        if (!method.fuse_all_views) break;
    }

    AdaptOutput out;
    out.frames.timestamp = frames.timestamp;
    for (const CameraModel& dst : train_rig.cameras) {
        // a source captured by this exact camera already is the requested
        // view; reprojecting it is the identity and fusing others could only
        // disturb silhouette pixels
        const ViewObservation* own = nullptr;
        for (const ViewObservation* v : sources)
            if (same_camera(rig_camera(test_rig, v->camera_id, "test"), dst)) own = v;

        warpcore::SplatBuffer buf(dst, method.splat);
        if (own) {
            buf.add_view(own->image, *own->depth, dst, 0);
        } else {
            const std::vector<const ViewObservation*> ordered = order_sources(sources, test_rig, dst);
            for (size_t i = 0; i < ordered.size(); ++i) {
                const CameraModel& src = rig_camera(test_rig, ordered[i]->camera_id, "test");
                buf.add_view(ordered[i]->image, *ordered[i]->depth, src, static_cast<int>(i));
            }
        }
        auto [img, mask] = buf.resolve();
        out.frames.views.push_back(
            {dst.id, inpaint::adapt_and_fill(img, mask, method.inpaint).image, std::nullopt});
        out.masks.push_back(std::move(mask));
    }
    return out;
}

AdaptOutput adapt_remote(const FrameSet& frames, const CameraRig& test_rig,
                         const CameraRig& train_rig, const RemoteNvsMethod& method) {
    nvslink::NvsRequest req;
    req.request_id = static_cast<std::uint64_t>(frames.timestamp);
    for (const ViewObservation& v : frames.views) {
        const CameraModel& cam = rig_camera(test_rig, v.camera_id, "test");
        req.sources.push_back({cam.intrinsics, cam.pose, v.image});
    }
    for (const CameraModel& cam : train_rig.cameras)
        req.targets.push_back({cam.intrinsics, cam.pose});

    const nvslink::RemoteResult res = nvslink::synthesize_remote(method.endpoint, req, method.timeout_ms);
    const double remote_ms = res.latency_ms;
    std::string failure;
    if (res.status != nvslink::RemoteStatus::Ok) {
        failure = std::string(nvslink::to_string(res.status)) +
                  (res.detail.empty() ? "" : ": " + res.detail);
    } else if (res.response.status != nvslink::ProtoCode::Ok) {
        failure = std::string("server: ") + nvslink::to_string(res.response.status) + " " +
                  res.response.message;
    } else if (res.response.images.size() != train_rig.cameras.size()) {
        failure = "server returned the wrong image count";
    } else {
        for (size_t i = 0; i < train_rig.cameras.size(); ++i) {
            const auto& k = train_rig.cameras[i].intrinsics;
            if (res.response.images[i].width != k.width || res.response.images[i].height != k.height)
                failure = "server returned mismatched image dimensions";
        }
    }

    if (failure.empty()) {
        AdaptOutput out;
        out.frames.timestamp = frames.timestamp;
        out.remote_latency_ms = remote_ms;
        for (size_t i = 0; i < train_rig.cameras.size(); ++i) {
            const Image& img = res.response.images[i];
            out.frames.views.push_back({train_rig.cameras[i].id, img, std::nullopt});
            out.masks.emplace_back(img.width, img.height, true);
        }
        return out;
    }

    if (!method.fallback_enabled)
        throw AdaptError(AdaptErrorKind::RemoteFailure, "remote synthesis failed: " + failure);

    const bool have_depth = std::all_of(frames.views.begin(), frames.views.end(),
                                        [](const ViewObservation& v) { return v.depth.has_value(); });
    AdaptOutput out;
    if (have_depth) {
        out = adapt_depth(frames, test_rig, train_rig,
                          DepthReprojectionMethod{method.fallback_splat, method.inpaint, true});
        out.remote_latency_ms = remote_ms;
        out.method_used = "+fallback:depth-reprojection";
    } else if (method.fallback_plane) {
        out = adapt_homography(frames, test_rig, train_rig,
                               HomographyMethod{*method.fallback_plane, method.inpaint});
        out.remote_latency_ms = remote_ms;
        out.method_used = "+fallback:homography";
    } else {
        throw AdaptError(AdaptErrorKind::RemoteFailure,
                         "remote synthesis failed and no fallback is available: " + failure);
    }
    return out;
}

}  // namespace

std::string method_name(const AdapterMethod& method) {
    if (std::holds_alternative<IdentityMethod>(method)) return "identity";
    if (std::holds_alternative<HomographyMethod>(method)) return "homography";
    if (std::holds_alternative<DepthReprojectionMethod>(method)) return "depth-reprojection";
    return "remote-nvs";
}

AdaptOutput adapt(const FrameSet& frames, const CameraRig& test_rig, const CameraRig& train_rig,
                  const AdapterMethod& method) {
    camgeom::validate(test_rig);
    camgeom::validate(train_rig);
    check_views(frames, test_rig);

    const auto t0 = Clock::now();
    AdaptOutput out;
    if (const auto* m = std::get_if<HomographyMethod>(&method)) {
        out = adapt_homography(frames, test_rig, train_rig, *m);
    } else if (const auto* m = std::get_if<DepthReprojectionMethod>(&method)) {
        out = adapt_depth(frames, test_rig, train_rig, *m);
    } else if (const auto* m = std::get_if<RemoteNvsMethod>(&method)) {
        out = adapt_remote(frames, test_rig, train_rig, *m);
    } else {
        out = adapt_identity(frames, train_rig);
    }
    out.method_used = method_name(method) + out.method_used;
    out.synth_latency_ms = ms_since(t0);
    return out;
}

// --- policy ------------------------------------------------------------------

std::uint64_t PixelToWorldMap::checksum() const {
    // FNV-1a over the map coefficients and the plane height
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c) mix(pixel_to_world(r, c));
    mix(plane_height);
    return h;
}

PixelToWorldMap calibrate_pixel_map(const CameraModel& cam, double plane_height, double grid_half,
                                    int grid_n) {
    if (grid_n < 2) throw std::invalid_argument("calibration: grid must be at least 2x2");
    const int n = grid_n * grid_n;
    Eigen::MatrixXd px(n, 3);   // (u, v, 1)
    Eigen::MatrixXd world(n, 3);  // (x, y, 1)
    int row = 0;
    for (int iy = 0; iy < grid_n; ++iy) {
        for (int ix = 0; ix < grid_n; ++ix) {
            const double x = -grid_half + 2.0 * grid_half * ix / (grid_n - 1);
            const double y = -grid_half + 2.0 * grid_half * iy / (grid_n - 1);
            const Vec3 cam_pt = camgeom::transform(cam.pose, Vec3(x, y, plane_height));
            const auto uv = camgeom::project(cam_pt, cam.intrinsics);
            if (!uv)
                throw std::invalid_argument("calibration: grid point behind the camera");
            px(row, 0) = uv->x();
            px(row, 1) = uv->y();
            px(row, 2) = 1.0;
            world(row, 0) = x;
            world(row, 1) = y;
            world(row, 2) = 1.0;
            ++row;
        }
    }

    PixelToWorldMap map;
    map.plane_height = plane_height;
    const Eigen::Matrix<double, 3, 2> fwd =
        px.colPivHouseholderQr().solve(world.leftCols<2>());
    map.pixel_to_world = fwd.transpose();

    // pixel-space residual via the inverse fit
    const Eigen::Matrix<double, 3, 2> inv =
        world.colPivHouseholderQr().solve(px.leftCols<2>());
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector2d pred = inv.transpose() * world.row(i).transpose();
        worst = std::max(worst, (pred - px.row(i).head<2>().transpose()).norm());
    }
    map.residual_px = worst;
    return map;
}

Vec2 map_pixel(const PixelToWorldMap& map, double u, double v) {
    return map.pixel_to_world * Vec3(u, v, 1.0);
}

Detection segment_target(const Image& view, const Rgb& target_color) {
    const double ts = double(target_color[0]) + target_color[1] + target_color[2];
    const double tr = target_color[0] / ts;
    const double tg = target_color[1] / ts;
    const double tb = target_color[2] / ts;

    double su = 0.0, sv = 0.0;
    int count = 0;
    for (int y = 0; y < view.height; ++y) {
        for (int x = 0; x < view.width; ++x) {
            const std::uint8_t* p = view.at(x, y);
            const double s = double(p[0]) + p[1] + p[2];
            if (s < 60.0) continue;  // too dark to trust the chromaticity
            const double d = std::abs(p[0] / s - tr) + std::abs(p[1] / s - tg) +
                             std::abs(p[2] / s - tb);
            if (d > 0.10) continue;
            su += x;
            sv += y;
            ++count;
        }
    }
    Detection det;
    if (count >= 5) {
        det.found = true;
        det.u = su / count;
        det.v = sv / count;
        det.pixel_count = count;
    }
    return det;
}

Action servo_policy(const Image& view, const TaskSpec& task, const PixelToWorldMap& calib,
                    const Vec2& proxy_xy, double step_cap) {
    const Detection det = segment_target(view, task.target_color);
    Action action;
    if (!det.found) return action;

    const Vec2 target = map_pixel(calib, det.u, det.v);
    const Vec2 delta = target - proxy_xy;
    const double dist = delta.norm();
    action.done = dist < task.success_radius;
    if (dist > 1e-12) {
        const double step = std::min(step_cap, dist);
        action.dx = delta.x() / dist * step;
        action.dy = delta.y() / dist * step;
    }
    return action;
}

// --- episodes ------------------------------------------------------------------

std::pair<Action, FrameRow> run_step(const FrameSet& frames, const CameraRig& test_rig,
                                     const CameraRig& train_rig, const AdapterMethod& method,
                                     const PixelToWorldMap& calib, const TaskSpec& task,
                                     const Vec2& proxy_xy, const StepOptions& opts,
                                     const scenesim::SceneDescription* oracle_scene) {
    const AdaptOutput adapted = adapt(frames, test_rig, train_rig, method);

    const Image* policy_view = nullptr;
    for (const ViewObservation& v : adapted.frames.views)
        if (v.camera_id == opts.policy_view_id) policy_view = &v.image;
    if (!policy_view)
        throw AdaptError(AdaptErrorKind::BadInput,
                         "policy view '" + opts.policy_view_id + "' missing from adapted frames");

    const auto t0 = Clock::now();
    const Action action = servo_policy(*policy_view, task, calib, proxy_xy, opts.step_cap);
    const double policy_ms = ms_since(t0);

    FrameRow row;
    row.frame = static_cast<int>(frames.timestamp);
    row.method = adapted.method_used;
    row.synth_ms = adapted.synth_latency_ms;
    row.policy_ms = policy_ms;
    row.detected = segment_target(*policy_view, task.target_color).found;
    row.action = action;

    if (opts.compute_quality && oracle_scene) {
        for (size_t i = 0; i < train_rig.cameras.size(); ++i) {
            const Image oracle = scenesim::render(*oracle_scene, train_rig.cameras[i]).image;
            const Image& synth = adapted.frames.views[i].image;
            ViewQuality q;
            q.view_id = train_rig.cameras[i].id;
            q.fill_fraction = 1.0 - adapted.masks[i].true_fraction();
            q.psnr_full = benchkit::psnr(synth, oracle);
            q.psnr_masked = adapted.masks[i].any_true() ? benchkit::psnr(synth, oracle, &adapted.masks[i])
                                                        : 0.0;
            q.ssim = benchkit::ssim(synth, oracle);
            row.views.push_back(q);
        }
    }
    return {action, row};
}

EpisodeSetup sample_task_scene(std::uint64_t seed, const TaskSceneParams& params) {
    rng::CounterRng gen(seed, /*stream=*/1);
    EpisodeSetup setup;
    setup.scene.table = scenesim::CheckerTable{};
    setup.scene.table->plane = Plane{Vec3::UnitZ(), params.table_height};

    const double rho = gen.uniform(params.target_rho_min, params.target_rho_max);
    const double phi = gen.uniform(0.0, 2.0 * M_PI);
    setup.target_xy = Vec2(rho * std::cos(phi), rho * std::sin(phi));
    const Rgb target_color = params.target_color;
    setup.scene.objects.push_back(
        scenesim::Sphere{Vec3(setup.target_xy.x(), setup.target_xy.y(),
                              params.table_height + params.target_radius),
                         params.target_radius, target_color});

    // distractors from the rest of the palette, never touching the target's
    // sight lines
    const auto& palette = scenesim::object_palette();
    const int n_distractors = static_cast<int>(gen.next_u32() % (params.max_distractors + 1));
    struct Spot {
        double x, y, r;
    };
    std::vector<Spot> spots{{setup.target_xy.x(), setup.target_xy.y(),
                             params.target_radius + params.distractor_clearance}};
    for (int i = 0; i < n_distractors; ++i) {
        for (int attempt = 0; attempt < 64; ++attempt) {
            const double x = gen.uniform(-0.13, 0.13);
            const double y = gen.uniform(-0.13, 0.13);
            const double r = gen.uniform(0.02, 0.035);
            Rgb color = palette[gen.next_u32() % palette.size()];
            if (color == target_color) color = palette[(gen.next_u32() % (palette.size() - 1) + 1) % palette.size()];
            bool clear = true;
            for (const Spot& s : spots) {
                const double dx = x - s.x, dy = y - s.y;
                if (std::sqrt(dx * dx + dy * dy) < r + s.r + 0.01) {
                    clear = false;
                    break;
                }
            }
            if (!clear) continue;
            setup.scene.objects.push_back(
                scenesim::Sphere{Vec3(x, y, params.table_height + r), r, color});
            spots.push_back({x, y, r});
            break;
        }
    }

    const double psi = gen.uniform(0.0, 2.0 * M_PI);
    setup.proxy_start =
        Vec2(params.proxy_start_radius * std::cos(psi), params.proxy_start_radius * std::sin(psi));

    setup.task.instruction = "reach the red sphere";
    setup.task.target_color = target_color;
    return setup;
}

EpisodeResult run_episode(const EpisodeSetup& setup, const CameraRig& test_rig,
                          const CameraRig& train_rig, const AdapterMethod& method,
                          const PixelToWorldMap& calib, const EpisodeOptions& opts) {
    const std::uint64_t calib_checksum = calib.checksum();

    scenesim::SceneDescription scene = setup.scene;
    const double table_z = scene.table ? scene.table->plane.offset : 0.0;
    size_t proxy_index = 0;
    if (opts.render_proxy_marker) {
        proxy_index = scene.objects.size();
        scene.objects.push_back(scenesim::Sphere{Vec3::Zero(), opts.proxy_marker_radius,
                                                 opts.proxy_marker_color});
    }

    Vec2 proxy = setup.proxy_start;
    EpisodeResult result;
    int stalls = 0;
    for (int step = 0; step < opts.max_steps; ++step) {
        if (opts.render_proxy_marker) {
            std::get<scenesim::Sphere>(scene.objects[proxy_index]).center =
                Vec3(proxy.x(), proxy.y(), table_z + opts.proxy_marker_radius);
        }

        FrameSet frames;
        frames.timestamp = step;
        for (const CameraModel& cam : test_rig.cameras) {
            scenesim::RenderOutput r = scenesim::render(scene, cam);
            frames.views.push_back({cam.id, std::move(r.image), std::move(r.depth)});
        }

        auto [action, row] = run_step(frames, test_rig, train_rig, method, calib, setup.task,
                                      proxy, opts.step, &scene);
        proxy += Vec2(action.dx, action.dy);
        row.proxy_after = proxy;
        result.rows.push_back(std::move(row));
        result.steps = step + 1;

        if ((proxy - setup.target_xy).norm() < setup.task.success_radius) {
            result.success = true;
            break;
        }
        if (action.done) break;  // the policy believes it has arrived
        const bool stalled = !action.done && action.dx == 0.0 && action.dy == 0.0;
        stalls = stalled ? stalls + 1 : 0;
        if (stalls >= 3) break;  // lost sight of the target, give up
    }

    if (calib.checksum() != calib_checksum)
        throw std::logic_error("episode: policy calibration changed while running");
    return result;
}

CameraRig default_train_rig(int image_size) {
    const double c = (image_size - 1) / 2.0;
    CameraRig rig;

    CameraModel agent;
    agent.id = "agent";
    agent.intrinsics = {265.0 * image_size / 256.0, 265.0 * image_size / 256.0, c, c,
                        image_size, image_size};
    agent.pose = camgeom::look_at(Vec3(0.0, -0.20, 0.70), default_workspace_center());
    rig.cameras.push_back(agent);

    CameraModel wrist;
    wrist.id = "wrist";
    wrist.intrinsics = {200.0 * image_size / 256.0, 200.0 * image_size / 256.0, c, c,
                        image_size, image_size};
    wrist.pose = camgeom::look_at(Vec3(0.28, 0.12, 0.35), Vec3(0.0, 0.02, 0.0));
    rig.cameras.push_back(wrist);
    return rig;
}

Vec3 default_workspace_center() { return Vec3::Zero(); }

}  // namespace viewadapt::adapt
