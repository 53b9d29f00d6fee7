#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxyworld/agents.hpp"
#include "proxyworld/genbridge.hpp"
#include "proxyworld/geometry.hpp"

namespace pw::pipeline {

struct ConfigInvalid : std::runtime_error {
    explicit ConfigInvalid(std::vector<std::string> violation_list)
        : std::runtime_error("invalid config: " + join(violation_list)),
          violations(std::move(violation_list)) {}
    std::vector<std::string> violations;

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out;
        for (const std::string& s : v) out += (out.empty() ? "" : "; ") + s;
        return out;
    }
};

struct SceneConfig {
    std::string user_prompt;
    uint64_t seed = 1;
    std::string terrain_library;
    std::string asset_library;
    std::string audio_library;
    std::string depth_library;  // empty -> built-in synthetic reference set
    std::string backend_mode = "stub";  // stub | remote
    std::string backend_url;
    std::string agent_mode = "scripted";  // scripted | remote
    std::string agent_policy;
    std::string agent_url;

    int panorama_height = 256;  // generator stage; upscale doubles it
    int bottom_resolution = 256;
    int shadow_height = 128;
    int asset_resolution = 192;
    int cloud_resolution = 256;
    int rain_resolution = 256;
    int ripple_resolution = 128;

    double fg_min = 2.0, fg_max = 10.0;
    double mg_min = 20.0, mg_max = 50.0;
    int count_min = 5, count_max = 10;
    int grid_cols = 12, grid_rows = 6, fine_div = 4;
    double mask_fraction = 0.8;
    double eye_height = 1.7;
    double pitch_threshold_deg = 55.0;
    double min_spacing = 1.5;
    size_t budget_triangles = 250000;
    int tile_size = 256, tile_overlap = 32;
    int trimap_dilate = 6, trimap_erode = 6;
    Vec3 sun_dir{0.35, -0.85, 0.25};
    double shadow_floor = 0.4;
    int displacement_radius = 8;
    double displacement_scale = 0.15;
    std::string output_dir;
};

// Parses, defaults and invariant-checks the config file; every violation is
// reported at once.
SceneConfig validate_config(const std::string& path);

// Stage list, 1-based indices; run --stage N addresses these.
const std::vector<std::string>& stage_names();

struct RunReport {
    std::vector<std::string> stages_run;     // "<name>" or "<name> (cached)"
    std::vector<std::pair<std::string, double>> timings_seconds;
    std::vector<std::string> warnings;
    std::string scene_dir;

    bool was_cached(const std::string& stage) const {
        for (const std::string& s : stages_run)
            if (s == stage + " (cached)") return true;
        return false;
    }
};

// Runs stages [1, up_to] (default all). Stage outputs are cached under
// output_dir/cache by input hash; identical (config, seed) reruns under stub
// backends produce a bit-identical output tree.
RunReport run_pipeline(const SceneConfig& config, int up_to = -1);

// Re-runs exactly one stage from cached predecessors.
RunReport run_single_stage(const SceneConfig& config, int stage);

// Factory helpers shared with the CLI.
std::unique_ptr<gen::Backend> make_backend(const SceneConfig& config);
std::unique_ptr<agent::WorldAgent> make_agent(const SceneConfig& config);

}  // namespace pw::pipeline
