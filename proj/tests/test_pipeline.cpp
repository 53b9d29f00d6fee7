#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"
#include "json.hpp"
#include "proxyworld/fixtures.hpp"
#include "proxyworld/pipeline.hpp"

using namespace pw;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Workspace {
    fs::path root;
    std::string config_path;

    explicit Workspace(const std::string& name) {
        root = fs::temp_directory_path() / name;
        fs::remove_all(root);
        config_path = fixtures::write_demo_workspace(root.string(), 11);
        // shrink resolutions so the pipeline suite stays quick
        json config = json::parse(std::ifstream(config_path));
        config["resolutions"]["panorama_height"] = 96;
        config["resolutions"]["bottom"] = 96;
        config["resolutions"]["shadow_height"] = 48;
        config["resolutions"]["asset"] = 96;
        config["resolutions"]["cloud"] = 64;
        config["resolutions"]["ripple"] = 64;
        config["tile"]["size"] = 96;
        config["tile"]["overlap"] = 16;
        std::ofstream(config_path) << config.dump(2);
    }
    ~Workspace() { fs::remove_all(root); }

    json config_json() const { return json::parse(std::ifstream(config_path)); }
    void write_config(const json& j) const { std::ofstream(config_path) << j.dump(2); }
};

std::map<std::string, std::vector<char>> read_tree(const fs::path& dir) {
    std::map<std::string, std::vector<char>> out;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream f(entry.path(), std::ios::binary);
        out[fs::relative(entry.path(), dir).string()] =
            std::vector<char>((std::istreambuf_iterator<char>(f)),
                              std::istreambuf_iterator<char>());
    }
    return out;
}

}  // namespace

TEST_CASE("validate_config fills defaults and reports all violations") {
    Workspace ws("pw_pipeline_cfg");

    SUBCASE("fixture config validates with the documented defaults") {
        json j = ws.config_json();
        j.erase("bands");
        j.erase("asset_count");
        ws.write_config(j);
        const pipeline::SceneConfig config = pipeline::validate_config(ws.config_path);
        CHECK(config.fg_min == 2.0);
        CHECK(config.fg_max == 10.0);
        CHECK(config.mg_min == 20.0);
        CHECK(config.mg_max == 50.0);
        CHECK(config.count_min == 5);
        CHECK(config.count_max == 10);
    }
    SUBCASE("overlapping bands are rejected") {
        json j = ws.config_json();
        j["bands"]["foreground"] = {2.0, 25.0};
        ws.write_config(j);
        CHECK_THROWS_AS(pipeline::validate_config(ws.config_path), pipeline::ConfigInvalid);
    }
    SUBCASE("missing library paths are named, and all violations arrive at once") {
        json j = ws.config_json();
        j["terrain_library"] = "/nonexistent/terrain";
        j["audio_library"] = "/nonexistent/audio";
        ws.write_config(j);
        try {
            pipeline::validate_config(ws.config_path);
            FAIL("expected ConfigInvalid");
        } catch (const pipeline::ConfigInvalid& e) {
            CHECK(e.violations.size() >= 2);
            bool terrain_named = false, audio_named = false;
            for (const auto& v : e.violations) {
                if (v.find("terrain_library") != std::string::npos) terrain_named = true;
                if (v.find("audio_library") != std::string::npos) audio_named = true;
            }
            CHECK(terrain_named);
            CHECK(audio_named);
        }
    }
    SUBCASE("bad tiling is rejected") {
        json j = ws.config_json();
        j["tile"]["overlap"] = 96;
        ws.write_config(j);
        CHECK_THROWS_AS(pipeline::validate_config(ws.config_path), pipeline::ConfigInvalid);
    }
}

TEST_CASE("pipeline determinism, caching and stage isolation") {
    Workspace ws("pw_pipeline_run");
    const pipeline::SceneConfig config = pipeline::validate_config(ws.config_path);

    // partial run first: stages 1-5
    const pipeline::RunReport partial = pipeline::run_pipeline(config, 5);
    CHECK(partial.stages_run.size() == 5);

    // full run: the first five stages come from cache
    const pipeline::RunReport full = pipeline::run_pipeline(config);
    REQUIRE(full.stages_run.size() == 13);
    for (const std::string& name :
         {"terrain_retrieve", "depth_render", "depth_adapt", "base_panorama", "sky_outpaint"})
        CHECK(full.was_cached(name));
    CHECK_FALSE(full.was_cached("matting"));

    const auto first_tree = read_tree(fs::path(config.output_dir));

    // identical (config, seed) reruns reproduce the tree bit-exactly
    fs::remove_all(config.output_dir);
    const pipeline::RunReport again = pipeline::run_pipeline(config);
    CHECK(again.stages_run.size() == 13);
    const auto second_tree = read_tree(fs::path(config.output_dir));
    REQUIRE(first_tree.size() == second_tree.size());
    for (const auto& [name, bytes] : first_tree) {
        REQUIRE(second_tree.count(name));
        CHECK(bytes == second_tree.at(name));
    }

    // a cached rerun leaves everything untouched and reports 13 hits
    const pipeline::RunReport cached = pipeline::run_pipeline(config);
    int hits = 0;
    for (const auto& s : cached.stages_run) hits += s.find("(cached)") != std::string::npos;
    CHECK(hits == 13);

    // standalone stage re-run regenerates identical bytes
    const pipeline::RunReport single = pipeline::run_single_stage(config, 8);
    CHECK(single.stages_run.size() == 1);
    const auto third_tree = read_tree(fs::path(config.output_dir));
    CHECK(third_tree.at("work/s08_arrange/placements.jsonl") ==
          second_tree.at("work/s08_arrange/placements.jsonl"));

    // changing the seed invalidates the cache for seeded stages
    pipeline::SceneConfig reseeded = config;
    reseeded.seed = 999;
    const pipeline::RunReport fresh = pipeline::run_pipeline(reseeded);
    CHECK_FALSE(fresh.was_cached("base_panorama"));
    CHECK(fresh.was_cached("depth_render"));  // seed plays no role there
}

TEST_CASE("pipeline output contract") {
    Workspace ws("pw_pipeline_outputs");
    const pipeline::SceneConfig config = pipeline::validate_config(ws.config_path);
    const pipeline::RunReport report = pipeline::run_pipeline(config);

    const fs::path scene = report.scene_dir;
    for (const char* name : {"world.gltf", "world.bin", "terrain.png", "terrain_bottom.png",
                             "sky.png", "shadow.png", "ambient.wav", "scene.manifest.json"})
        CHECK(fs::exists(scene / name));

    const json manifest = json::parse(std::ifstream(scene / "scene.manifest.json"));
    CHECK(manifest.at("schema_version") == 1);
    CHECK(manifest.at("budget").at("pass") == true);
    CHECK(manifest.at("audio").at("mixed") == "ambient.wav");
    CHECK(!manifest.at("effects").empty());

    const json budget_json =
        json::parse(std::ifstream(fs::path(config.output_dir) / "work" / "s12_assemble" /
                                  "budget.json"));
    CHECK(budget_json.at("primitive_count").get<size_t>() <= config.budget_triangles);

    // placement audit log exists and has one JSON record per line
    std::ifstream audit(fs::path(config.output_dir) / "work" / "s08_arrange" /
                        "placements.jsonl");
    REQUIRE(audit.good());
    int lines = 0;
    std::string line;
    while (std::getline(audit, line)) {
        if (line.empty()) continue;
        const json record = json::parse(line);
        CHECK(record.contains("status"));
        CHECK(record.contains("coarse_cell"));
        ++lines;
    }
    CHECK(lines > 0);
}
