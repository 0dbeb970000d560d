#include "viewadapt/adapt.hpp"
#include "viewadapt/benchkit.hpp"
#include "viewadapt/nvslink.hpp"
#include "viewadapt/perturb.hpp"
#include "viewadapt/scenesim.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <thread>

namespace {

namespace va = viewadapt;
namespace fs = std::filesystem;

std::atomic<bool> g_stop{false};
void handle_signal(int) { g_stop = true; }

va::camgeom::CameraRig rig_or_default(const std::string& path, int image_size) {
    if (path.empty()) return va::adapt::default_train_rig(image_size);
    return va::camgeom::load_rig(path);
}

struct ViewArg {
    std::string camera_id;
    std::string image_path;
    std::string depth_path;
};

ViewArg parse_view_arg(const std::string& arg) {
    ViewArg v;
    const auto first = arg.find(':');
    if (first == std::string::npos)
        throw CLI::ValidationError("--view", "expected <camera_id>:<image.ppm>[:<depth.dpth>]");
    v.camera_id = arg.substr(0, first);
    const auto second = arg.find(':', first + 1);
    if (second == std::string::npos) {
        v.image_path = arg.substr(first + 1);
    } else {
        v.image_path = arg.substr(first + 1, second - first - 1);
        v.depth_path = arg.substr(second + 1);
    }
    return v;
}

int cmd_render_dataset(const std::string& out_dir, const std::string& rig_path,
                       std::uint64_t seed_base, int count, int image_size) {
    const va::camgeom::CameraRig rig = rig_or_default(rig_path, image_size);
    for (int i = 0; i < count; ++i) {
        const std::uint64_t seed = seed_base + i;
        const va::scenesim::SceneDescription scene = va::scenesim::sample_scene(seed);
        const fs::path dir = fs::path(out_dir) / ("scene_" + std::to_string(seed));
        fs::create_directories(dir);
        va::scenesim::save_scene(scene, (dir / "scene.txt").string());
        va::camgeom::save_rig(rig, (dir / "cameras.txt").string());
        for (const auto& cam : rig.cameras) {
            const va::scenesim::RenderOutput r = va::scenesim::render(scene, cam);
            va::warpcore::save_ppm(r.image, (dir / ("view_" + cam.id + ".ppm")).string());
            va::warpcore::save_depth(r.depth, (dir / ("view_" + cam.id + ".dpth")).string());
        }
        std::cout << dir.string() << "\n";
    }
    return 0;
}

int cmd_perturb(const std::string& rig_path, const std::string& out_path,
                const std::string& camera_id, const std::string& level_name, std::uint64_t seed,
                bool retarget, const std::vector<double>& target, int image_size) {
    va::camgeom::CameraRig rig = rig_or_default(rig_path, image_size);
    const std::map<std::string, va::perturb::PerturbationLevel> levels = {
        {"small", va::perturb::kSmall},
        {"medium", va::perturb::kMedium},
        {"large", va::perturb::kLarge}};
    if (!levels.count(level_name))
        throw CLI::ValidationError("--level", "must be one of small, medium, large");
    const va::perturb::PerturbationSpec spec{levels.at(level_name), seed, retarget};
    const va::camgeom::Vec3 tgt(target[0], target[1], target[2]);
    bool found = false;
    for (auto& cam : rig.cameras) {
        if (cam.id != camera_id) continue;
        cam = va::perturb::perturb_camera(cam, spec, /*draw_index=*/0, tgt);
        found = true;
    }
    if (!found) throw CLI::ValidationError("--camera", "no camera '" + camera_id + "' in the rig");
    va::camgeom::save_rig(rig, out_path);
    std::cout << "wrote " << out_path << " (level " << level_name << ", seed " << seed << ")\n";
    return 0;
}

int cmd_adapt(const std::string& test_rig_path, const std::string& train_rig_path,
              const std::vector<std::string>& view_args, const std::string& method_name,
              const std::vector<double>& plane_arg, int splat_radius, int inpaint_radius,
              const std::string& endpoint, int timeout_ms, const std::string& out_dir,
              int image_size) {
    static const std::vector<std::string> known_methods = {"identity", "homography",
                                                            "depth-reprojection", "remote-nvs"};
    if (std::find(known_methods.begin(), known_methods.end(), method_name) == known_methods.end())
        throw CLI::ValidationError(
            "--method", "must be identity, homography, depth-reprojection or remote-nvs");

    const va::camgeom::CameraRig test_rig = rig_or_default(test_rig_path, image_size);
    const va::camgeom::CameraRig train_rig = rig_or_default(train_rig_path, image_size);

    va::adapt::FrameSet frames;
    for (const std::string& arg : view_args) {
        const ViewArg v = parse_view_arg(arg);
        va::adapt::ViewObservation obs;
        obs.camera_id = v.camera_id;
        obs.image = va::warpcore::load_ppm(v.image_path);
        if (!v.depth_path.empty()) obs.depth = va::warpcore::load_depth(v.depth_path);
        frames.views.push_back(std::move(obs));
    }

    va::inpaint::InpaintParams inpaint;
    inpaint.radius = inpaint_radius;
    va::warpcore::SplatParams splat;
    splat.radius = splat_radius;

    va::adapt::AdapterMethod method;
    if (method_name == "identity") {
        method = va::adapt::IdentityMethod{};
    } else if (method_name == "homography") {
        va::camgeom::Plane plane;
        plane.normal = va::camgeom::Vec3(plane_arg[0], plane_arg[1], plane_arg[2]).normalized();
        plane.offset = plane_arg[3];
        method = va::adapt::HomographyMethod{plane, inpaint};
    } else if (method_name == "depth-reprojection") {
        method = va::adapt::DepthReprojectionMethod{splat, inpaint, true};
    } else if (method_name == "remote-nvs") {
        va::adapt::RemoteNvsMethod m;
        const auto colon = endpoint.rfind(':');
        if (colon == std::string::npos)
            throw CLI::ValidationError("--endpoint", "expected host:port");
        m.endpoint = {endpoint.substr(0, colon), std::stoi(endpoint.substr(colon + 1))};
        m.timeout_ms = timeout_ms;
        m.inpaint = inpaint;
        m.fallback_splat = splat;
        method = m;
    } else {
        throw CLI::ValidationError(
            "--method", "must be identity, homography, depth-reprojection or remote-nvs");
    }

    const va::adapt::AdaptOutput out = va::adapt::adapt(frames, test_rig, train_rig, method);
    fs::create_directories(out_dir);
    for (size_t i = 0; i < out.frames.views.size(); ++i) {
        const auto& view = out.frames.views[i];
        va::warpcore::save_ppm(view.image, (fs::path(out_dir) / ("view_" + view.camera_id + ".ppm")).string());
        va::warpcore::save_mask(out.masks[i],
                                (fs::path(out_dir) / ("view_" + view.camera_id + "_mask.pbm")).string());
    }
    std::cout << "method " << out.method_used << ", synthesis " << out.synth_latency_ms
              << " ms, views " << out.frames.views.size() << "\n";
    return 0;
}

int cmd_bench(const std::string& config_path, const std::string& out_dir) {
    const va::benchkit::BenchConfig config = va::benchkit::load_config(config_path);
    const va::benchkit::BenchResult result = va::benchkit::run_benchmark(config);
    va::benchkit::write_reports(result, config, out_dir);
    std::cout << result.summary;
    std::cout << "reports written to " << out_dir << "\n";
    return 0;
}

int cmd_serve(const std::string& mode_name, const std::string& scene_path,
              const std::string& bind) {
    va::nvslink::ServerMode mode;
    if (mode_name == "echo") {
        mode = va::nvslink::EchoMode{};
    } else if (mode_name == "oracle") {
        if (scene_path.empty()) throw CLI::ValidationError("--scene", "oracle mode needs a scene file");
        mode = va::nvslink::OracleMode{va::scenesim::load_scene(scene_path)};
    } else if (mode_name == "geom") {
        if (scene_path.empty()) throw CLI::ValidationError("--scene", "geom mode needs a scene file");
        mode = va::nvslink::GeomBaselineMode{va::scenesim::load_scene(scene_path), {}, {}};
    } else {
        throw CLI::ValidationError("--mode", "must be echo, oracle or geom");
    }

    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--bind", "expected host:port");
    const std::string host = bind.substr(0, colon);
    const int port = std::stoi(bind.substr(colon + 1));

    va::nvslink::MockNvsServer server(std::move(mode));
    server.start(host, port);
    std::cout << "mock nvs server (" << mode_name << ") listening on " << host << ":"
              << server.port() << "\n";
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    std::cout << "stopped\n";
    return 0;
}

int cmd_servo_eval(std::uint64_t seed, const std::string& method_name,
                   const std::string& level_name, std::uint64_t perturb_seed, bool retarget,
                   const std::string& out_dir, int image_size) {
    va::benchkit::BenchConfig config;
    config.image_size = image_size;
    const va::camgeom::CameraRig train_rig = va::adapt::default_train_rig(image_size);

    va::adapt::TaskSceneParams task_params;
    va::adapt::EpisodeSetup setup = va::adapt::sample_task_scene(seed, task_params);

    va::camgeom::CameraRig test_rig = train_rig;
    if (level_name != "none") {
        const std::map<std::string, va::perturb::PerturbationLevel> levels = {
            {"small", va::perturb::kSmall},
            {"medium", va::perturb::kMedium},
            {"large", va::perturb::kLarge}};
        if (!levels.count(level_name))
            throw CLI::ValidationError("--level", "must be none, small, medium or large");
        const va::perturb::PerturbationSpec spec{levels.at(level_name), perturb_seed, retarget};
        for (auto& cam : test_rig.cameras)
            if (cam.id == "agent")
                cam = va::perturb::perturb_camera(cam, spec, 0, va::adapt::default_workspace_center());
    }

    const va::camgeom::CameraModel* agent = nullptr;
    for (const auto& cam : train_rig.cameras)
        if (cam.id == "agent") agent = &cam;
    const va::adapt::PixelToWorldMap calib = va::adapt::calibrate_pixel_map(
        *agent, task_params.table_height + task_params.target_radius);

    std::unique_ptr<va::nvslink::MockNvsServer> server;
    va::adapt::AdapterMethod method;
    if (method_name == "identity") {
        method = va::adapt::IdentityMethod{};
    } else if (method_name == "homography") {
        method = va::adapt::HomographyMethod{setup.scene.table->plane, {}};
    } else if (method_name == "depth-reprojection") {
        method = va::adapt::DepthReprojectionMethod{{}, {}, true};
    } else if (method_name == "oracle-nvs") {
        server = std::make_unique<va::nvslink::MockNvsServer>(va::nvslink::OracleMode{setup.scene});
        server->start();
        va::adapt::RemoteNvsMethod m;
        m.endpoint = server->endpoint();
        method = m;
    } else {
        throw CLI::ValidationError("--method",
                                   "must be identity, homography, depth-reprojection or oracle-nvs");
    }

    // re-run the loop manually so each step's view can be dumped
    fs::create_directories(out_dir);
    va::adapt::EpisodeOptions opts;
    va::scenesim::SceneDescription scene = setup.scene;
    const size_t proxy_index = scene.objects.size();
    scene.objects.push_back(va::scenesim::Sphere{va::camgeom::Vec3::Zero(),
                                                 opts.proxy_marker_radius, opts.proxy_marker_color});
    va::adapt::Vec2 proxy = setup.proxy_start;
    std::ofstream report(fs::path(out_dir) / "report.csv");
    report << "frame,method,detected,dx,dy,done,proxy_x,proxy_y,dist_to_target\n";
    bool success = false;
    int steps = 0;
    for (int step = 0; step < opts.max_steps; ++step) {
        std::get<va::scenesim::Sphere>(scene.objects[proxy_index]).center =
            va::camgeom::Vec3(proxy.x(), proxy.y(), opts.proxy_marker_radius);
        va::adapt::FrameSet frames;
        frames.timestamp = step;
        for (const auto& cam : test_rig.cameras) {
            va::scenesim::RenderOutput r = va::scenesim::render(scene, cam);
            va::warpcore::save_ppm(r.image, (fs::path(out_dir) / ("step_" + std::to_string(step) +
                                                                  "_test_" + cam.id + ".ppm"))
                                                .string());
            frames.views.push_back({cam.id, std::move(r.image), std::move(r.depth)});
        }
        auto [action, row] = va::adapt::run_step(frames, test_rig, train_rig, method, calib,
                                                 setup.task, proxy, opts.step, &scene);
        const va::adapt::AdaptOutput adapted = va::adapt::adapt(frames, test_rig, train_rig, method);
        for (const auto& v : adapted.frames.views)
            va::warpcore::save_ppm(v.image, (fs::path(out_dir) / ("step_" + std::to_string(step) +
                                                                  "_adapted_" + v.camera_id + ".ppm"))
                                                .string());
        proxy += va::adapt::Vec2(action.dx, action.dy);
        const double dist = (proxy - setup.target_xy).norm();
        report << step << "," << row.method << "," << (row.detected ? 1 : 0) << "," << action.dx
               << "," << action.dy << "," << (action.done ? 1 : 0) << "," << proxy.x() << ","
               << proxy.y() << "," << dist << "\n";
        steps = step + 1;
        if (dist < setup.task.success_radius) {
            success = true;
            break;
        }
        if (action.done) break;
    }
    if (server) server->stop();
    std::cout << (success ? "success" : "failure") << " after " << steps << " steps; frames in "
              << out_dir << "\n";
    return success ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"camera viewpoint adaptation toolkit"};
    app.require_subcommand(1);

    // render-dataset
    auto* render = app.add_subcommand("render-dataset", "render synthetic RGB-D scene datasets");
    std::string out_dir = "dataset";
    std::string rig_path;
    std::uint64_t seed_base = 0;
    int count = 1;
    int image_size = 256;
    render->add_option("--out", out_dir, "output directory");
    render->add_option("--rig", rig_path, "camera rig file (default: built-in dual-camera rig)");
    render->add_option("--seed-base", seed_base, "first scene seed");
    render->add_option("--count", count, "number of scenes");
    render->add_option("--image-size", image_size, "square image size for the default rig");

    // perturb
    auto* pert = app.add_subcommand("perturb", "write a rig with one camera pose perturbed");
    std::string pert_rig, pert_out = "perturbed_rig.txt", pert_camera = "agent", pert_level = "large";
    std::uint64_t pert_seed = 0;
    bool pert_retarget = true;
    std::vector<double> pert_target = {0.0, 0.0, 0.0};
    pert->add_option("--rig", pert_rig, "input rig file (default: built-in rig)");
    pert->add_option("--out", pert_out, "output rig file");
    pert->add_option("--camera", pert_camera, "camera id to perturb");
    pert->add_option("--level", pert_level, "small | medium | large");
    pert->add_option("--seed", pert_seed, "perturbation seed");
    pert->add_flag("--retarget,!--no-retarget", pert_retarget, "re-aim at the target point");
    pert->add_option("--target", pert_target, "look-at target (x y z)")->expected(3);
    pert->add_option("--image-size", image_size, "square image size for the default rig");

    // adapt
    auto* ad = app.add_subcommand("adapt", "synthesize train-rig views from observed views");
    std::string test_rig_path, train_rig_path, method_name = "depth-reprojection";
    std::vector<std::string> view_args;
    std::vector<double> plane_arg = {0.0, 0.0, 1.0, 0.0};
    int splat_radius = 1, inpaint_radius = 5, timeout_ms = va::nvslink::kDefaultTimeoutMs;
    std::string endpoint = "127.0.0.1:7447", adapt_out = "adapted";
    ad->add_option("--test-rig", test_rig_path, "rig the views were captured with");
    ad->add_option("--train-rig", train_rig_path, "rig to synthesize");
    ad->add_option("--view", view_args, "<camera_id>:<image.ppm>[:<depth.dpth>] (repeatable)")
        ->required();
    ad->add_option("--method", method_name,
                   "identity | homography | depth-reprojection | remote-nvs");
    ad->add_option("--plane", plane_arg, "work plane nx ny nz offset (homography)")->expected(4);
    ad->add_option("--splat-radius", splat_radius, "forward-splat footprint (1, 2, 3)");
    ad->add_option("--inpaint-radius", inpaint_radius, "hole-filling radius");
    ad->add_option("--endpoint", endpoint, "remote NVS endpoint host:port");
    ad->add_option("--timeout", timeout_ms, "remote NVS timeout (ms)");
    ad->add_option("--out", adapt_out, "output directory");
    ad->add_option("--image-size", image_size, "square image size for the default rig");

    // bench
    auto* bench = app.add_subcommand("bench", "run the benchmark matrix from a config file");
    std::string config_path, bench_out = "bench_out";
    bench->add_option("--config", config_path, "benchmark config JSON")->required();
    bench->add_option("--out", bench_out, "report output directory");

    // serve-mock-nvs
    auto* serve = app.add_subcommand("serve-mock-nvs", "run the mock view-synthesis service");
    std::string serve_mode = "echo", serve_scene, serve_bind = "127.0.0.1:7447";
    serve->add_option("--mode", serve_mode, "echo | oracle | geom");
    serve->add_option("--scene", serve_scene, "scene file (oracle/geom modes)");
    serve->add_option("--bind", serve_bind, "bind address host:port");

    // servo-eval
    auto* servo = app.add_subcommand("servo-eval", "run one episode and dump per-step frames");
    std::uint64_t servo_seed = 0, servo_pseed = 0;
    std::string servo_method = "depth-reprojection", servo_level = "large", servo_out = "servo_out";
    bool servo_retarget = true;
    servo->add_option("--seed", servo_seed, "task scene seed");
    servo->add_option("--method", servo_method,
                      "identity | homography | depth-reprojection | oracle-nvs");
    servo->add_option("--level", servo_level, "none | small | medium | large");
    servo->add_option("--perturb-seed", servo_pseed, "perturbation seed");
    servo->add_flag("--retarget,!--no-retarget", servo_retarget, "re-aim the perturbed camera");
    servo->add_option("--out", servo_out, "output directory");
    servo->add_option("--image-size", image_size, "square image size");

    CLI11_PARSE(app, argc, argv);

    try {
        if (render->parsed())
            return cmd_render_dataset(out_dir, rig_path, seed_base, count, image_size);
        if (pert->parsed())
            return cmd_perturb(pert_rig, pert_out, pert_camera, pert_level, pert_seed,
                               pert_retarget, pert_target, image_size);
        if (ad->parsed())
            return cmd_adapt(test_rig_path, train_rig_path, view_args, method_name, plane_arg,
                             splat_radius, inpaint_radius, endpoint, timeout_ms, adapt_out,
                             image_size);
        if (bench->parsed()) return cmd_bench(config_path, bench_out);
        if (serve->parsed()) return cmd_serve(serve_mode, serve_scene, serve_bind);
        if (servo->parsed())
            return cmd_servo_eval(servo_seed, servo_method, servo_level, servo_pseed,
                                  servo_retarget, servo_out, image_size);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
