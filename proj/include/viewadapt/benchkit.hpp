#pragma once

#include "viewadapt/adapt.hpp"
#include "viewadapt/metrics.hpp"
#include "viewadapt/perturb.hpp"

#include <map>
#include <string>
#include <vector>

namespace viewadapt::benchkit {

/// Benchmark sweep configuration; parsed from JSON with per-field
/// diagnostics. Seeds fully determine every output byte.
struct BenchConfig {
    int episodes = 50;
    int max_steps = 25;
    std::uint64_t scene_seed_base = 1000;
    std::uint64_t perturb_seed_base = 5000;
    std::vector<std::string> methods = {"identity", "depth-reprojection", "oracle-nvs"};
    std::vector<std::string> levels = {"none", "large"};
    std::map<std::string, perturb::PerturbationLevel> level_table = {
        {"small", perturb::kSmall}, {"medium", perturb::kMedium}, {"large", perturb::kLarge}};
    std::string perturb_camera = "agent";
    bool retarget = true;
    bool record_latency = false;  // keeps CSV output byte-reproducible
    int quality_scenes = 20;
    std::string quality_level = "large";
    int quality_stride = 1;  // compute image metrics every k-th frame of an episode
    int image_size = 256;
    double success_radius = 0.01;
    warpcore::SplatParams splat;
    inpaint::InpaintParams inpaint;
    std::string nvs_endpoint = "auto";  // "auto" = in-process oracle mock per scene
    int nvs_timeout_ms = nvslink::kDefaultTimeoutMs;
    std::string train_rig_path;  // empty = built-in dual-camera rig
    std::string task_instruction = "reach the red sphere";
    scenesim::Rgb task_target_color = {200, 40, 40};
};

BenchConfig parse_config(const std::string& json_text);
BenchConfig load_config(const std::string& path);
std::string serialize_config(const BenchConfig& config);

struct EpisodeRow {
    std::string method;
    std::string level;
    std::uint64_t scene_seed = 0;
    std::uint64_t perturb_seed = 0;
    int episode = 0;
    double t_max = 0.0;
    double r_max_deg = 0.0;
    bool retarget = false;
    bool success = false;
    int steps = 0;
    double mean_psnr_full = 0.0;
    double mean_psnr_masked = 0.0;
    double mean_ssim = 0.0;
    double mean_fill = 0.0;
    double mean_synth_ms = 0.0;
    double mean_policy_ms = 0.0;
};

struct FrameRowRecord {
    std::string method;
    std::string level;
    std::uint64_t scene_seed = 0;
    int episode = 0;
    int frame = 0;
    std::string view_id;
    bool has_quality = false;
    double psnr_full = 0.0;
    double psnr_masked = 0.0;
    double ssim = 0.0;
    double fill_fraction = 0.0;
    double synth_ms = 0.0;
    double policy_ms = 0.0;
};

struct QualityRow {
    std::uint64_t scene_seed = 0;
    std::string method;
    std::string view_id;
    bool perturbed_view = false;
    double psnr_full = 0.0;
    double psnr_masked = 0.0;
    double ssim = 0.0;
    double fill_fraction = 0.0;
};

/// One (method, level) cell aggregated over all episodes.
struct CellStats {
    std::string method;
    std::string level;
    int episodes = 0;
    double success_rate = 0.0;
    double mean_psnr_full = 0.0;
    double mean_psnr_masked = 0.0;
    double mean_ssim = 0.0;
    double mean_fill = 0.0;
    double mean_synth_ms = 0.0;
    double mean_steps = 0.0;
};

struct BenchResult {
    std::vector<CellStats> cells;  // complete methods x levels grid, config order
    std::vector<EpisodeRow> episode_rows;
    std::vector<FrameRowRecord> frame_rows;
    std::vector<QualityRow> quality_rows;  // static-scene synthesis quality sweep
    std::string summary;
};

/// Runs the full sweep: per cell, sample task scenes, perturb the designated
/// camera, run closed-loop episodes, and score synthesis quality against
/// ground-truth renders; plus a static multi-scene quality comparison.
BenchResult run_benchmark(const BenchConfig& config);

/// episodes.csv, frames.csv, quality.csv, matrix.csv and summary.txt.
void write_reports(const BenchResult& result, const BenchConfig& config,
                   const std::string& out_dir);

/// Mean full-image PSNR per method over the static quality sweep, restricted
/// to the perturbed camera's synthesized view.
std::map<std::string, double> quality_means(const BenchResult& result);

const CellStats* find_cell(const BenchResult& result, const std::string& method,
                           const std::string& level);

}  // namespace viewadapt::benchkit
