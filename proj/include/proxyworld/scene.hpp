#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxyworld/arranger.hpp"
#include "proxyworld/audio.hpp"
#include "proxyworld/mesh.hpp"

namespace pw::scene {

struct ValidationFailed : std::runtime_error {
    explicit ValidationFailed(std::vector<std::string> item_list)
        : std::runtime_error("scene validation failed: " + join(item_list)),
          items(std::move(item_list)) {}
    std::vector<std::string> items;

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out;
        for (const std::string& s : v) out += (out.empty() ? "" : "; ") + s;
        return out;
    }
};

struct UnassembledScene : std::runtime_error {
    UnassembledScene() : std::runtime_error("scene has not been assembled") {}
};

struct TerrainNode {
    TerrainMesh mesh;
    Image pano_texture;    // RGBA: panorama + matte alpha
    Image bottom_texture;  // top-down bottom map, sampled via uv1
};

struct SkyNode {
    TerrainMesh dome;
    Image texture;  // pure sky
};

// One dynamic-effect entry: textures live here, file names get assigned at
// export and recorded in the manifest.
struct EffectData {
    std::string effect;  // "cloud" | "rain" | "ripple"
    std::map<std::string, Image> textures;
    double flow_dir_x = 1.0, flow_dir_y = 0.25;
    double speed = 1.0;
    std::vector<double> layer_speeds{1.0, 0.6, 0.35};
    std::string target = "sky";
};

struct AudioTrack {
    std::string id;
    double volume = 1.0;
    std::vector<std::string> tags;
};

struct SceneGraph {
    TerrainNode terrain;
    SkyNode sky;
    std::vector<arrange::ProxyAsset> assets;
    Image shadow_map;  // ERP gray in [s_min, 1]
    std::vector<EffectData> effects;
    std::vector<AudioTrack> audio_tracks;
    audio::AudioClip ambient;
    Vec3 origin;
    Vec3 sun_dir{0.35, -0.85, 0.25};  // light travel direction
    double shadow_floor = 0.4;
    bool assembled = false;
};

// Inward-facing UV sphere with explicit seam column (u runs 0..1 inclusive),
// panoramic UVs baked in.
TerrainMesh make_sky_dome(double radius, int segments = 48, int rings = 24);

// Links the nodes, reuses the panoramic uv0 as precomputed shadow UVs, and
// checks every referenced texture and transform. Throws ValidationFailed
// listing every broken item at once.
SceneGraph assemble_scene(TerrainNode terrain, SkyNode sky,
                          std::vector<arrange::ProxyAsset> assets,
                          std::vector<EffectData> effects, std::vector<AudioTrack> audio_tracks,
                          audio::AudioClip ambient, Vec3 origin);

struct BudgetReport {
    struct NodeCount {
        std::string name;
        size_t triangles = 0;
        size_t texture_bytes = 0;
    };
    size_t primitive_count = 0;
    size_t texture_bytes = 0;
    size_t budget = 250000;
    bool pass = false;
    std::vector<NodeCount> nodes;
};

BudgetReport budget_report(const SceneGraph& scene, size_t budget = 250000);

// Writes world.gltf/.bin, PNG textures, shadow map, effect textures,
// ambient.wav and scene.manifest.json into out_dir; returns relative paths of
// everything written.
std::vector<std::string> export_scene(const SceneGraph& scene, const std::string& out_dir);

}  // namespace pw::scene

namespace pw::shadow {

// Panoramic shadow bake: for each ERP texel's terrain hit, a ray toward the
// sun (-sun_dir) is tested against terrain and alpha-tested proxies
// (billboard texels with alpha >= 0.5 occlude). Occluded texels get s_min,
// lit 1.0, then a 3x3 blur. Parallel per texel.
ErpImage bake_shadow(const scene::SceneGraph& scene, Vec3 sun_dir, int height, double s_min);

// Serial reference for tests and the kernel benchmark.
ErpImage bake_shadow_serial(const scene::SceneGraph& scene, Vec3 sun_dir, int height,
                            double s_min);

}  // namespace pw::shadow
