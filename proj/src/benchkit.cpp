#include "viewadapt/benchkit.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>

namespace viewadapt::benchkit {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
    throw std::runtime_error("config: field '" + field + "': " + what);
}

template <typename T>
T get_field(const json& j, const std::string& field, T fallback) {
    if (!j.contains(field)) return fallback;
    try {
        return j.at(field).get<T>();
    } catch (const json::exception& e) {
        config_error(field, e.what());
    }
}

const std::vector<std::string> kKnownMethods = {"identity", "homography", "depth-reprojection",
                                                "oracle-nvs", "remote-nvs"};

void validate_config(const BenchConfig& c) {
    if (c.episodes < 1) config_error("episodes", "must be >= 1");
    if (c.max_steps < 1) config_error("max_steps", "must be >= 1");
    if (c.methods.empty()) config_error("methods", "must not be empty");
    for (const std::string& m : c.methods)
        if (std::find(kKnownMethods.begin(), kKnownMethods.end(), m) == kKnownMethods.end())
            config_error("methods", "unknown method '" + m + "'");
    if (c.levels.empty()) config_error("levels", "must not be empty");
    for (const std::string& l : c.levels) {
        if (l == "none") continue;
        if (!c.level_table.count(l)) config_error("levels", "level '" + l + "' missing from level_table");
    }
    for (const auto& [name, lvl] : c.level_table) {
        try {
            perturb::validate(lvl);
        } catch (const std::exception& e) {
            config_error("level_table." + name, e.what());
        }
    }
    if (c.quality_scenes < 0) config_error("quality_scenes", "must be >= 0");
    if (c.quality_scenes > 0 && c.quality_level != "none" && !c.level_table.count(c.quality_level))
        config_error("quality_level", "level '" + c.quality_level + "' missing from level_table");
    if (c.quality_stride < 0) config_error("quality_stride", "must be >= 0");
    if (c.image_size < 32) config_error("image_size", "must be >= 32");
    if (!(c.success_radius > 0.0)) config_error("success_radius", "must be positive");
    try {
        warpcore::validate(c.splat);
        inpaint::validate(c.inpaint);
    } catch (const std::exception& e) {
        config_error("splat/inpaint", e.what());
    }
    if (c.nvs_timeout_ms < 1) config_error("nvs.timeout_ms", "must be >= 1");
}

}  // namespace

BenchConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw std::runtime_error("config: top level must be a JSON object");

    static const std::vector<std::string> known = {
        "episodes",       "max_steps",      "scene_seed_base", "perturb_seed_base",
        "methods",        "levels",         "level_table",     "perturb_camera",
        "retarget",       "record_latency", "quality_scenes",  "quality_level",
        "quality_stride", "image_size",     "success_radius",  "splat_radius",
        "splat_z_eps",    "inpaint_radius", "nvs",             "rigs",
        "task"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end())
            config_error(key, "unknown key");
    }

    BenchConfig c;
    c.episodes = get_field(j, "episodes", c.episodes);
    c.max_steps = get_field(j, "max_steps", c.max_steps);
    c.scene_seed_base = get_field(j, "scene_seed_base", c.scene_seed_base);
    c.perturb_seed_base = get_field(j, "perturb_seed_base", c.perturb_seed_base);
    c.methods = get_field(j, "methods", c.methods);
    c.levels = get_field(j, "levels", c.levels);
    if (j.contains("level_table")) {
        if (!j["level_table"].is_object()) config_error("level_table", "must be an object");
        c.level_table.clear();
        for (const auto& [name, bounds] : j["level_table"].items()) {
            if (!bounds.is_array() || bounds.size() != 2)
                config_error("level_table." + name, "must be [t_max_m, r_max_deg]");
            c.level_table[name] =
                perturb::PerturbationLevel{name, bounds[0].get<double>(), bounds[1].get<double>()};
        }
    }
    c.perturb_camera = get_field(j, "perturb_camera", c.perturb_camera);
    c.retarget = get_field(j, "retarget", c.retarget);
    c.record_latency = get_field(j, "record_latency", c.record_latency);
    c.quality_scenes = get_field(j, "quality_scenes", c.quality_scenes);
    c.quality_level = get_field(j, "quality_level", c.quality_level);
    c.quality_stride = get_field(j, "quality_stride", c.quality_stride);
    c.image_size = get_field(j, "image_size", c.image_size);
    c.success_radius = get_field(j, "success_radius", c.success_radius);
    c.splat.radius = get_field(j, "splat_radius", c.splat.radius);
    c.splat.z_eps = get_field(j, "splat_z_eps", c.splat.z_eps);
    c.inpaint.radius = get_field(j, "inpaint_radius", c.inpaint.radius);
    if (j.contains("nvs")) {
        const json& n = j["nvs"];
        if (!n.is_object()) config_error("nvs", "must be an object");
        c.nvs_endpoint = get_field(n, "endpoint", c.nvs_endpoint);
        c.nvs_timeout_ms = get_field(n, "timeout_ms", c.nvs_timeout_ms);
    }
    if (j.contains("rigs")) {
        const json& n = j["rigs"];
        if (!n.is_object()) config_error("rigs", "must be an object");
        c.train_rig_path = get_field(n, "train", c.train_rig_path);
    }
    if (j.contains("task")) {
        const json& n = j["task"];
        if (!n.is_object()) config_error("task", "must be an object");
        c.task_instruction = get_field(n, "instruction", c.task_instruction);
        c.success_radius = get_field(n, "success_radius", c.success_radius);
        if (n.contains("target_color")) {
            const json& col = n["target_color"];
            if (!col.is_array() || col.size() != 3) config_error("task.target_color", "must be [r, g, b]");
            for (int i = 0; i < 3; ++i) c.task_target_color[i] = col[i].get<std::uint8_t>();
        }
    }
    validate_config(c);
    return c;
}

BenchConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("config: cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const BenchConfig& c) {
    json j;
    j["episodes"] = c.episodes;
    j["max_steps"] = c.max_steps;
    j["scene_seed_base"] = c.scene_seed_base;
    j["perturb_seed_base"] = c.perturb_seed_base;
    j["methods"] = c.methods;
    j["levels"] = c.levels;
    json table = json::object();
    for (const auto& [name, lvl] : c.level_table) table[name] = {lvl.t_max, lvl.r_max_deg};
    j["level_table"] = table;
    j["perturb_camera"] = c.perturb_camera;
    j["retarget"] = c.retarget;
    j["record_latency"] = c.record_latency;
    j["quality_scenes"] = c.quality_scenes;
    j["quality_level"] = c.quality_level;
    j["quality_stride"] = c.quality_stride;
    j["image_size"] = c.image_size;
    j["success_radius"] = c.success_radius;
    j["splat_radius"] = c.splat.radius;
    j["splat_z_eps"] = c.splat.z_eps;
    j["inpaint_radius"] = c.inpaint.radius;
    j["nvs"] = {{"endpoint", c.nvs_endpoint}, {"timeout_ms", c.nvs_timeout_ms}};
    if (!c.train_rig_path.empty()) j["rigs"] = {{"train", c.train_rig_path}};
    j["task"] = {{"instruction", c.task_instruction},
                 {"target_color", {c.task_target_color[0], c.task_target_color[1], c.task_target_color[2]}},
                 {"success_radius", c.success_radius}};
    return j.dump(2) + "\n";
}

namespace {

struct MethodContext {
    adapt::AdapterMethod method;
    std::unique_ptr<nvslink::MockNvsServer> server;  // oracle-nvs "auto" endpoint
};

nvslink::Endpoint parse_endpoint(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos)
        throw std::runtime_error("config: nvs.endpoint must be host:port or \"auto\"");
    nvslink::Endpoint ep;
    ep.host = text.substr(0, colon);
    ep.port = std::stoi(text.substr(colon + 1));
    return ep;
}

// Builds the adapter for one scene; oracle-nvs spawns a scene-specific mock.
MethodContext make_method(const std::string& name, const BenchConfig& config,
                          const scenesim::SceneDescription& scene) {
    MethodContext ctx;
    if (name == "identity") {
        ctx.method = adapt::IdentityMethod{};
    } else if (name == "homography") {
        if (!scene.table) throw std::runtime_error("homography method needs a work plane");
        ctx.method = adapt::HomographyMethod{scene.table->plane, config.inpaint};
    } else if (name == "depth-reprojection") {
        ctx.method = adapt::DepthReprojectionMethod{config.splat, config.inpaint, true};
    } else if (name == "oracle-nvs") {
        if (config.nvs_endpoint == "auto") {
            ctx.server = std::make_unique<nvslink::MockNvsServer>(nvslink::OracleMode{scene});
            ctx.server->start();
        }
        adapt::RemoteNvsMethod m;
        m.endpoint = ctx.server ? ctx.server->endpoint() : parse_endpoint(config.nvs_endpoint);
        m.timeout_ms = config.nvs_timeout_ms;
        m.inpaint = config.inpaint;
        m.fallback_enabled = false;  // the benchmark must exercise the remote path
        ctx.method = m;
    } else if (name == "remote-nvs") {
        adapt::RemoteNvsMethod m;
        m.endpoint = parse_endpoint(config.nvs_endpoint);
        m.timeout_ms = config.nvs_timeout_ms;
        m.inpaint = config.inpaint;
        m.fallback_splat = config.splat;
        if (scene.table) m.fallback_plane = scene.table->plane;
        ctx.method = m;
    } else {
        throw std::runtime_error("unknown method '" + name + "'");
    }
    return ctx;
}

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

std::string fmt_g(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

BenchResult run_benchmark(const BenchConfig& config) {
    validate_config(config);
    BenchResult result;

    const camgeom::CameraRig train_rig = config.train_rig_path.empty()
                                             ? adapt::default_train_rig(config.image_size)
                                             : camgeom::load_rig(config.train_rig_path);
    bool designated_found = false;
    for (const auto& cam : train_rig.cameras) designated_found |= cam.id == config.perturb_camera;
    if (!designated_found)
        throw std::runtime_error("config: perturb_camera '" + config.perturb_camera +
                                 "' is not in the rig");

    const camgeom::CameraModel* canonical_agent = nullptr;
    for (const auto& cam : train_rig.cameras)
        if (cam.id == "agent") canonical_agent = &cam;
    if (!canonical_agent) throw std::runtime_error("rig has no agent camera");

    adapt::TaskSceneParams task_params;
    task_params.target_color = config.task_target_color;
    const adapt::PixelToWorldMap calib = adapt::calibrate_pixel_map(
        *canonical_agent, task_params.table_height + task_params.target_radius);
    const std::uint64_t calib_checksum = calib.checksum();

    for (const std::string& method_name : config.methods) {
        for (const std::string& level_name : config.levels) {
            CellStats cell;
            cell.method = method_name;
            cell.level = level_name;

            std::vector<double> psnr_full, psnr_masked, ssims, fills, synths, steps;
            int successes = 0;

            for (int episode = 0; episode < config.episodes; ++episode) {
                const std::uint64_t scene_seed = config.scene_seed_base + episode;
                adapt::EpisodeSetup setup = adapt::sample_task_scene(scene_seed, task_params);
                setup.task.success_radius = config.success_radius;
                setup.task.instruction = config.task_instruction;

                camgeom::CameraRig test_rig = train_rig;
                EpisodeRow row;
                row.method = method_name;
                row.level = level_name;
                row.scene_seed = scene_seed;
                row.episode = episode;
                row.retarget = config.retarget;
                if (level_name != "none") {
                    const perturb::PerturbationLevel& lvl = config.level_table.at(level_name);
                    row.perturb_seed = config.perturb_seed_base + episode;
                    row.t_max = lvl.t_max;
                    row.r_max_deg = lvl.r_max_deg;
                    perturb::PerturbationSpec spec{lvl, row.perturb_seed, config.retarget};
                    for (auto& cam : test_rig.cameras)
                        if (cam.id == config.perturb_camera)
                            cam = perturb::perturb_camera(cam, spec, /*draw_index=*/0,
                                                          adapt::default_workspace_center());
                }

                MethodContext ctx = make_method(method_name, config, setup.scene);
                adapt::EpisodeOptions opts;
                opts.max_steps = config.max_steps;
                opts.step.compute_quality = config.quality_stride > 0;

                const adapt::EpisodeResult ep =
                    adapt::run_episode(setup, test_rig, train_rig, ctx.method, calib, opts);
                if (ctx.server) ctx.server->stop();

                row.success = ep.success;
                row.steps = ep.steps;
                std::vector<double> e_pf, e_pm, e_ss, e_fill, e_synth, e_policy;
                for (const adapt::FrameRow& fr : ep.rows) {
                    const bool sampled = config.quality_stride > 0 &&
                                         (fr.frame % config.quality_stride == 0) &&
                                         !fr.views.empty();
                    for (const adapt::ViewQuality& q : fr.views) {
                        FrameRowRecord rec;
                        rec.method = method_name;
                        rec.level = level_name;
                        rec.scene_seed = scene_seed;
                        rec.episode = episode;
                        rec.frame = fr.frame;
                        rec.view_id = q.view_id;
                        rec.has_quality = true;
                        rec.psnr_full = q.psnr_full;
                        rec.psnr_masked = q.psnr_masked;
                        rec.ssim = q.ssim;
                        rec.fill_fraction = q.fill_fraction;
                        rec.synth_ms = fr.synth_ms;
                        rec.policy_ms = fr.policy_ms;
                        result.frame_rows.push_back(rec);
                        if (sampled) {
                            e_pf.push_back(q.psnr_full);
                            e_pm.push_back(q.psnr_masked);
                            e_ss.push_back(q.ssim);
                            e_fill.push_back(q.fill_fraction);
                        }
                    }
                    if (fr.views.empty()) {
                        FrameRowRecord rec;
                        rec.method = method_name;
                        rec.level = level_name;
                        rec.scene_seed = scene_seed;
                        rec.episode = episode;
                        rec.frame = fr.frame;
                        rec.view_id = "-";
                        rec.synth_ms = fr.synth_ms;
                        rec.policy_ms = fr.policy_ms;
                        result.frame_rows.push_back(rec);
                    }
                    e_synth.push_back(fr.synth_ms);
                    e_policy.push_back(fr.policy_ms);
                }
                row.mean_psnr_full = mean_of(e_pf);
                row.mean_psnr_masked = mean_of(e_pm);
                row.mean_ssim = mean_of(e_ss);
                row.mean_fill = mean_of(e_fill);
                row.mean_synth_ms = mean_of(e_synth);
                row.mean_policy_ms = mean_of(e_policy);
                result.episode_rows.push_back(row);

                successes += ep.success ? 1 : 0;
                steps.push_back(ep.steps);
                psnr_full.push_back(row.mean_psnr_full);
                psnr_masked.push_back(row.mean_psnr_masked);
                ssims.push_back(row.mean_ssim);
                fills.push_back(row.mean_fill);
                synths.push_back(row.mean_synth_ms);
            }

            cell.episodes = config.episodes;
            cell.success_rate = static_cast<double>(successes) / config.episodes;
            cell.mean_psnr_full = mean_of(psnr_full);
            cell.mean_psnr_masked = mean_of(psnr_masked);
            cell.mean_ssim = mean_of(ssims);
            cell.mean_fill = mean_of(fills);
            cell.mean_synth_ms = mean_of(synths);
            cell.mean_steps = mean_of(steps);
            result.cells.push_back(cell);
        }
    }

    if (calib.checksum() != calib_checksum)
        throw std::logic_error("benchmark: policy calibration changed while running");

    // static multi-scene synthesis quality sweep (no episodes, no proxy)
    if (config.quality_scenes > 0) {
        scenesim::SceneSampleParams scene_params;
        for (int q = 0; q < config.quality_scenes; ++q) {
            const std::uint64_t scene_seed = config.scene_seed_base + 10000 + q;
            const scenesim::SceneDescription scene = scenesim::sample_scene(scene_seed, scene_params);

            camgeom::CameraRig test_rig = train_rig;
            if (config.quality_level != "none") {
                const perturb::PerturbationLevel& lvl = config.level_table.at(config.quality_level);
                perturb::PerturbationSpec spec{lvl, config.perturb_seed_base + 20000 + q,
                                               config.retarget};
                for (auto& cam : test_rig.cameras)
                    if (cam.id == config.perturb_camera)
                        cam = perturb::perturb_camera(cam, spec, 0, adapt::default_workspace_center());
            }

            adapt::FrameSet frames;
            frames.timestamp = q;
            for (const auto& cam : test_rig.cameras) {
                scenesim::RenderOutput r = scenesim::render(scene, cam);
                frames.views.push_back({cam.id, std::move(r.image), std::move(r.depth)});
            }

            for (const std::string& method_name : config.methods) {
                MethodContext ctx = make_method(method_name, config, scene);
                const adapt::AdaptOutput out = adapt::adapt(frames, test_rig, train_rig, ctx.method);
                if (ctx.server) ctx.server->stop();
                for (size_t i = 0; i < train_rig.cameras.size(); ++i) {
                    const Image oracle = scenesim::render(scene, train_rig.cameras[i]).image;
                    QualityRow qr;
                    qr.scene_seed = scene_seed;
                    qr.method = method_name;
                    qr.view_id = train_rig.cameras[i].id;
                    qr.perturbed_view = train_rig.cameras[i].id == config.perturb_camera;
                    qr.psnr_full = psnr(out.frames.views[i].image, oracle);
                    qr.psnr_masked = out.masks[i].any_true()
                                         ? psnr(out.frames.views[i].image, oracle, &out.masks[i])
                                         : 0.0;
                    qr.ssim = ssim(out.frames.views[i].image, oracle);
                    qr.fill_fraction = 1.0 - out.masks[i].true_fraction();
                    result.quality_rows.push_back(qr);
                }
            }
        }
    }

    // summary block
    std::ostringstream sum;
    sum << "benchmark summary\n";
    sum << "episodes per cell: " << config.episodes << ", max steps: " << config.max_steps << "\n";
    sum << "perturbed camera: " << config.perturb_camera
        << " (retarget=" << (config.retarget ? "true" : "false") << ")\n\n";
    sum << "method,level,success_rate,mean_psnr_full,mean_ssim,mean_fill,mean_steps\n";
    for (const CellStats& c : result.cells) {
        sum << c.method << "," << c.level << "," << fmt_g(c.success_rate) << ","
            << fmt_g(c.mean_psnr_full) << "," << fmt_g(c.mean_ssim) << "," << fmt_g(c.mean_fill)
            << "," << fmt_g(c.mean_steps) << "\n";
    }
    if (!result.quality_rows.empty()) {
        sum << "\nstatic quality sweep (" << config.quality_scenes << " scenes, level "
            << config.quality_level << "), mean full-image PSNR on the perturbed view:\n";
        for (const auto& [m, v] : quality_means(result)) sum << "  " << m << ": " << fmt_g(v) << " dB\n";
    }
    result.summary = sum.str();
    return result;
}

std::map<std::string, double> quality_means(const BenchResult& result) {
    std::map<std::string, std::vector<double>> acc;
    for (const QualityRow& q : result.quality_rows)
        if (q.perturbed_view) acc[q.method].push_back(q.psnr_full);
    std::map<std::string, double> means;
    for (const auto& [m, v] : acc) means[m] = mean_of(v);
    return means;
}

const CellStats* find_cell(const BenchResult& result, const std::string& method,
                           const std::string& level) {
    for (const CellStats& c : result.cells)
        if (c.method == method && c.level == level) return &c;
    return nullptr;
}

namespace {

std::ofstream open_report(const std::string& dir, const std::string& name) {
    std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
    if (!out) throw std::runtime_error("reports: cannot write " + name + " in " + dir);
    return out;
}

std::string lat(double v, bool record) { return record ? fmt_g(v) : "NA"; }

}  // namespace

void write_reports(const BenchResult& result, const BenchConfig& config,
                   const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);

    {
        auto out = open_report(out_dir, "episodes.csv");
        out << "method,level,scene_seed,perturb_seed,episode,t_max,r_max_deg,retarget,success,"
               "steps,mean_psnr_full,mean_psnr_masked,mean_ssim,mean_fill,mean_synth_ms,"
               "mean_policy_ms\n";
        for (const EpisodeRow& r : result.episode_rows) {
            out << r.method << "," << r.level << "," << r.scene_seed << "," << r.perturb_seed << ","
                << r.episode << "," << fmt_g(r.t_max) << "," << fmt_g(r.r_max_deg) << ","
                << (r.retarget ? 1 : 0) << "," << (r.success ? 1 : 0) << "," << r.steps << ","
                << fmt_g(r.mean_psnr_full) << "," << fmt_g(r.mean_psnr_masked) << ","
                << fmt_g(r.mean_ssim) << "," << fmt_g(r.mean_fill) << ","
                << lat(r.mean_synth_ms, config.record_latency) << ","
                << lat(r.mean_policy_ms, config.record_latency) << "\n";
        }
    }
    {
        auto out = open_report(out_dir, "frames.csv");
        out << "method,level,scene_seed,episode,frame,view_id,psnr_full,psnr_masked,ssim,"
               "fill_fraction,synth_ms,policy_ms\n";
        for (const FrameRowRecord& r : result.frame_rows) {
            out << r.method << "," << r.level << "," << r.scene_seed << "," << r.episode << ","
                << r.frame << "," << r.view_id << ",";
            if (r.has_quality)
                out << fmt_g(r.psnr_full) << "," << fmt_g(r.psnr_masked) << "," << fmt_g(r.ssim)
                    << "," << fmt_g(r.fill_fraction);
            else
                out << "NA,NA,NA,NA";
            out << "," << lat(r.synth_ms, config.record_latency) << ","
                << lat(r.policy_ms, config.record_latency) << "\n";
        }
    }
    {
        auto out = open_report(out_dir, "quality.csv");
        out << "scene_seed,method,view_id,perturbed_view,psnr_full,psnr_masked,ssim,fill_fraction\n";
        for (const QualityRow& r : result.quality_rows) {
            out << r.scene_seed << "," << r.method << "," << r.view_id << ","
                << (r.perturbed_view ? 1 : 0) << "," << fmt_g(r.psnr_full) << ","
                << fmt_g(r.psnr_masked) << "," << fmt_g(r.ssim) << "," << fmt_g(r.fill_fraction)
                << "\n";
        }
    }
    {
        auto out = open_report(out_dir, "matrix.csv");
        out << "method,level,episodes,success_rate,mean_psnr_full,mean_psnr_masked,mean_ssim,"
               "mean_fill,mean_steps,mean_synth_ms\n";
        for (const CellStats& c : result.cells) {
            out << c.method << "," << c.level << "," << c.episodes << "," << fmt_g(c.success_rate)
                << "," << fmt_g(c.mean_psnr_full) << "," << fmt_g(c.mean_psnr_masked) << ","
                << fmt_g(c.mean_ssim) << "," << fmt_g(c.mean_fill) << "," << fmt_g(c.mean_steps)
                << "," << lat(c.mean_synth_ms, config.record_latency) << "\n";
        }
    }
    {
        auto out = open_report(out_dir, "summary.txt");
        out << result.summary;
    }
}

}  // namespace viewadapt::benchkit
