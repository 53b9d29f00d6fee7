#include "proxyworld/fixtures.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "proxyworld/audio.hpp"
#include "proxyworld/image.hpp"
#include "proxyworld/depthadapt.hpp"
#include "proxyworld/geometry.hpp"
#include "proxyworld/gltf.hpp"
#include "proxyworld/immersion.hpp"

namespace pw::fixtures {

namespace fs = std::filesystem;
using nlohmann::json;

TerrainMesh make_heightfield(uint64_t seed, int cells, double half_extent, double amplitude,
                             bool with_lake) {
    TerrainMesh mesh;
    const int n = cells + 1;
    auto height_at = [&](double x, double z) {
        const double u = (x + half_extent) / (2.0 * half_extent);
        const double v = (z + half_extent) / (2.0 * half_extent);
        double h = amplitude * (immersion::tileable_value_noise(seed, u, v, 4) - 0.5) +
                   0.35 * amplitude * (immersion::tileable_value_noise(seed ^ 0xabcdull, u, v, 11) - 0.5);
        // flatten a walkable pocket around the origin
        const double r = std::sqrt(x * x + z * z);
        const double pocket = std::clamp((r - 4.0) / 8.0, 0.0, 1.0);
        return h * pocket;
    };

    const double lake_level = -0.35 * amplitude;
    std::vector<uint8_t> in_lake(static_cast<size_t>(n) * n, 0);
    for (int iz = 0; iz < n; ++iz) {
        for (int ix = 0; ix < n; ++ix) {
            const double x = -half_extent + 2.0 * half_extent * ix / cells;
            const double z = -half_extent + 2.0 * half_extent * iz / cells;
            double h = height_at(x, z);
            if (with_lake && h < lake_level) {
                h = lake_level;
                in_lake[static_cast<size_t>(iz) * n + ix] = 1;
            }
            mesh.vertices.push_back({x, h, z});
        }
    }
    for (int iz = 0; iz < cells; ++iz) {
        for (int ix = 0; ix < cells; ++ix) {
            const int a = iz * n + ix;
            const int b = a + 1;
            const int c = a + n;
            const int d = c + 1;
            // upward-facing winding (+y normals, counterclockwise seen from above)
            mesh.triangles.push_back({a, c, b});
            mesh.triangles.push_back({b, c, d});
            const bool water = with_lake && in_lake[a] && in_lake[b] && in_lake[c] && in_lake[d];
            mesh.region_tags.push_back(water ? Region::water : Region::ground);
            mesh.region_tags.push_back(water ? Region::water : Region::ground);
        }
    }
    drop_degenerate_triangles(mesh);
    return mesh;
}

TerrainMesh make_tree_template(double height, double canopy_width) {
    TerrainMesh mesh;
    const double trunk_h = height * 0.3;
    const double trunk_w = canopy_width * 0.08;
    const double half = canopy_width * 0.5;

    auto quad = [&](Vec3 a, Vec3 b, Vec3 c, Vec3 d) {
        const int base = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(a);
        mesh.vertices.push_back(b);
        mesh.vertices.push_back(c);
        mesh.vertices.push_back(d);
        mesh.uv0.push_back({0.0, 1.0});
        mesh.uv0.push_back({1.0, 1.0});
        mesh.uv0.push_back({1.0, 0.0});
        mesh.uv0.push_back({0.0, 0.0});
        mesh.triangles.push_back({base, base + 1, base + 2});
        mesh.triangles.push_back({base, base + 2, base + 3});
    };

    // leaves: two crossed vertical cards from trunk top to full height
    quad({-half, trunk_h, 0}, {half, trunk_h, 0}, {half, height, 0}, {-half, height, 0});
    quad({0, trunk_h, -half}, {0, trunk_h, half}, {0, height, half}, {0, height, -half});
    // trunk: two crossed narrow cards from the ground
    quad({-trunk_w, 0, 0}, {trunk_w, 0, 0}, {trunk_w, trunk_h, 0}, {-trunk_w, trunk_h, 0});
    quad({0, 0, -trunk_w}, {0, 0, trunk_w}, {0, trunk_h, trunk_w}, {0, trunk_h, -trunk_w});
    return mesh;
}

namespace {

void write_terrain_gltf(const std::string& path, const TerrainMesh& mesh) {
    gltf::Document doc;
    gltf::MeshDef def;
    def.name = fs::path(path).stem().string();
    gltf::Primitive prim;
    for (const Vec3& v : mesh.vertices) {
        prim.positions.push_back(static_cast<float>(v.x));
        prim.positions.push_back(static_cast<float>(v.y));
        prim.positions.push_back(static_cast<float>(v.z));
    }
    for (const auto& tri : mesh.triangles)
        for (int k = 0; k < 3; ++k) prim.indices.push_back(static_cast<uint32_t>(tri[k]));
    def.primitives.push_back(std::move(prim));
    doc.meshes.push_back(std::move(def));
    doc.nodes.push_back({fs::path(path).stem().string(), 0, {0, 0, 0}, {0, 0, 0, 1}});
    doc.materials.push_back({"placeholder", -1, 0, {1, 1, 1, 1}, "OPAQUE", false, true, false});
    gltf::write_gltf(path, doc);
}

// Water tags cannot ride a plain glTF mesh, so the terrain index carries the
// lake level and tags are re-derived on load (vertices at the level with
// near-flat normals become water).
json terrain_entry(const std::string& id, const std::string& mesh_file,
                   const std::string& caption, const std::vector<std::string>& tags,
                   bool water, double lake_level) {
    json e;
    e["id"] = id;
    e["mesh"] = mesh_file;
    e["caption"] = caption;
    e["tags"] = tags;
    e["water_present"] = water;
    e["lake_level"] = lake_level;
    return e;
}

// Soft card-shaped template alpha: canopy = stacked ellipses, bar = vertical
// rectangle with feathered edges.
Image make_card_alpha(int resolution, bool canopy) {
    Image out(resolution, resolution, 1, 0.0f);
    auto blob = [&](double cx, double cy, double rx, double ry) {
        for (int y = 0; y < resolution; ++y) {
            for (int x = 0; x < resolution; ++x) {
                const double dx = ((x + 0.5) / resolution - cx) / rx;
                const double dy = ((y + 0.5) / resolution - cy) / ry;
                const double r2 = dx * dx + dy * dy;
                if (r2 >= 1.0) continue;
                out.at(x, y, 0) = std::max(out.at(x, y, 0),
                                           static_cast<float>(std::min(1.0, 1.4 * (1.0 - r2))));
            }
        }
    };
    if (canopy) {
        blob(0.5, 0.30, 0.28, 0.22);
        blob(0.38, 0.45, 0.22, 0.18);
        blob(0.62, 0.45, 0.22, 0.18);
        blob(0.5, 0.58, 0.30, 0.20);
    } else {
        for (int y = static_cast<int>(0.25 * resolution); y < resolution; ++y) {
            for (int x = 0; x < resolution; ++x) {
                const double dx = std::abs((x + 0.5) / resolution - 0.5);
                if (dx < 0.06)
                    out.at(x, y, 0) = 1.0f;
                else if (dx < 0.09)
                    out.at(x, y, 0) = static_cast<float>((0.09 - dx) / 0.03);
            }
        }
    }
    return out;
}

audio::AudioClip synth_clip(uint64_t seed, const std::string& id,
                            const std::vector<std::string>& tags, double seconds, int kind) {
    audio::AudioClip clip;
    clip.id = id;
    clip.tags.insert(tags.begin(), tags.end());
    clip.sample_rate = 44100;
    clip.channels = 1;
    const size_t frames = static_cast<size_t>(seconds * clip.sample_rate);
    clip.samples.resize(frames);
    Rng rng(seed);
    double lp = 0.0;
    for (size_t i = 0; i < frames; ++i) {
        const double t = static_cast<double>(i) / clip.sample_rate;
        double s = 0.0;
        if (kind == 0) {
            // birdsong: chirped tones gated by a slow envelope
            const double gate = std::sin(kTwoPi * 0.6 * t) > 0.55 ? 1.0 : 0.0;
            const double f = 2600.0 + 500.0 * std::sin(kTwoPi * 4.0 * t);
            s = 0.4 * gate * std::sin(kTwoPi * f * t);
        } else if (kind == 1) {
            // wind: low-passed noise, slow amplitude swell
            const double noise = rng.next_double() * 2.0 - 1.0;
            lp += 0.02 * (noise - lp);
            s = lp * (0.6 + 0.4 * std::sin(kTwoPi * 0.13 * t));
        } else {
            // water: band of gentle noise with ripple modulation
            const double noise = rng.next_double() * 2.0 - 1.0;
            lp += 0.15 * (noise - lp);
            s = 0.5 * lp * (0.7 + 0.3 * std::sin(kTwoPi * 1.7 * t));
        }
        clip.samples[i] = static_cast<float>(std::clamp(s, -1.0, 1.0));
    }
    return clip;
}

}  // namespace

std::string write_demo_workspace(const std::string& dir_in, uint64_t seed) {
    fs::create_directories(dir_in);
    const std::string dir = fs::absolute(dir_in).lexically_normal().string();

    // --- terrain library ---
    const fs::path terrain_dir = fs::path(dir) / "terrain";
    fs::create_directories(terrain_dir);
    struct Spec {
        const char* id;
        const char* caption;
        std::vector<std::string> tags;
        bool lake;
        double amplitude;
    };
    const Spec specs[3] = {
        {"alpine_lake", "an alpine valley cradling a glassy lake under ridged peaks",
         {"mountain", "lake", "alpine", "valley", "water"}, true, 7.0},
        {"rolling_hills", "soft rolling grassland hills with shallow hollows",
         {"hills", "grassland", "meadow"}, false, 4.0},
        {"desert_mesa", "a dry desert mesa broken by wind-carved steps",
         {"desert", "mesa", "arid", "dry"}, false, 5.5},
    };
    json terrain_index;
    terrain_index["templates"] = json::array();
    for (int i = 0; i < 3; ++i) {
        const TerrainMesh mesh = make_heightfield(hash_combine(seed, 100 + i), 256, 60.0,
                                                  specs[i].amplitude, specs[i].lake);
        const std::string mesh_file = std::string(specs[i].id) + ".gltf";
        write_terrain_gltf((terrain_dir / mesh_file).string(), mesh);
        terrain_index["templates"].push_back(
            terrain_entry(specs[i].id, mesh_file, specs[i].caption, specs[i].tags, specs[i].lake,
                          -0.35 * specs[i].amplitude));
    }
    {
        std::ofstream f(terrain_dir / "index.json");
        f << terrain_index.dump(2) << "\n";
    }

    // --- asset template library ---
    const fs::path asset_dir = fs::path(dir) / "assets";
    fs::create_directories(asset_dir);
    json asset_index;
    asset_index["templates"] = json::array();
    {
        const TerrainMesh pine = make_tree_template(6.5, 3.2);
        gltf::Document doc;
        gltf::MeshDef def;
        def.name = "pine";
        gltf::Primitive prim;
        for (const Vec3& v : pine.vertices) {
            prim.positions.push_back(static_cast<float>(v.x));
            prim.positions.push_back(static_cast<float>(v.y));
            prim.positions.push_back(static_cast<float>(v.z));
        }
        for (const Vec2& uv : pine.uv0) {
            prim.uv0.push_back(static_cast<float>(uv.x));
            prim.uv0.push_back(static_cast<float>(uv.y));
        }
        for (const auto& tri : pine.triangles)
            for (int k = 0; k < 3; ++k) prim.indices.push_back(static_cast<uint32_t>(tri[k]));
        def.primitives.push_back(std::move(prim));
        doc.meshes.push_back(std::move(def));
        doc.nodes.push_back({"pine", 0, {0, 0, 0}, {0, 0, 0, 1}});
        doc.materials.push_back({"pine", -1, 0, {1, 1, 1, 1}, "BLEND", true, true, false});
        gltf::write_gltf((asset_dir / "pine.gltf").string(), doc);

        save_png((asset_dir / "pine_leaves_alpha.png").string(), make_card_alpha(192, true));
        save_png((asset_dir / "pine_trunk_alpha.png").string(), make_card_alpha(192, false));
        json e;
        e["id"] = "pine";
        e["mesh"] = "pine.gltf";
        e["caption"] = "a tall pine tree with layered boughs";
        e["tags"] = {"pine", "tree", "forest", "mountain", "alpine"};
        e["default_height"] = 6.5;
        e["material_groups"] = json::array(
            {{{"name", "leaves"}, {"tri_begin", 0}, {"tri_end", 4}, {"alpha", "pine_leaves_alpha.png"}},
             {{"name", "trunk"}, {"tri_begin", 4}, {"tri_end", 8}, {"alpha", "pine_trunk_alpha.png"}}});
        asset_index["templates"].push_back(e);
    }
    {
        const TerrainMesh cactus = make_tree_template(2.8, 1.2);
        gltf::Document doc;
        gltf::MeshDef def;
        def.name = "cactus";
        gltf::Primitive prim;
        for (const Vec3& v : cactus.vertices) {
            prim.positions.push_back(static_cast<float>(v.x));
            prim.positions.push_back(static_cast<float>(v.y));
            prim.positions.push_back(static_cast<float>(v.z));
        }
        for (const Vec2& uv : cactus.uv0) {
            prim.uv0.push_back(static_cast<float>(uv.x));
            prim.uv0.push_back(static_cast<float>(uv.y));
        }
        for (const auto& tri : cactus.triangles)
            for (int k = 0; k < 3; ++k) prim.indices.push_back(static_cast<uint32_t>(tri[k]));
        def.primitives.push_back(std::move(prim));
        doc.meshes.push_back(std::move(def));
        doc.nodes.push_back({"cactus", 0, {0, 0, 0}, {0, 0, 0, 1}});
        doc.materials.push_back({"cactus", -1, 0, {1, 1, 1, 1}, "BLEND", true, true, false});
        gltf::write_gltf((asset_dir / "cactus.gltf").string(), doc);

        save_png((asset_dir / "cactus_body_alpha.png").string(), make_card_alpha(192, false));
        json e;
        e["id"] = "cactus";
        e["mesh"] = "cactus.gltf";
        e["caption"] = "a squat desert cactus with paired arms";
        e["tags"] = {"cactus", "desert", "arid", "dry"};
        e["default_height"] = 2.8;
        e["material_groups"] = json::array(
            {{{"name", "body"}, {"tri_begin", 0}, {"tri_end", 8}, {"alpha", "cactus_body_alpha.png"}}});
        asset_index["templates"].push_back(e);
    }
    {
        std::ofstream f(asset_dir / "index.json");
        f << asset_index.dump(2) << "\n";
    }

    // --- audio library ---
    const fs::path audio_dir = fs::path(dir) / "audio";
    fs::create_directories(audio_dir);
    json audio_index;
    audio_index["clips"] = json::array();
    const struct {
        const char* id;
        std::vector<std::string> tags;
        int kind;
        double seconds;
    } clips[3] = {
        {"birds", {"birds", "nature", "forest", "morning"}, 0, 6.0},
        {"wind", {"wind", "nature", "mountain", "lake"}, 1, 8.0},
        {"water", {"water", "lake", "stream", "ripple"}, 2, 7.0},
    };
    for (int i = 0; i < 3; ++i) {
        const audio::AudioClip clip =
            synth_clip(hash_combine(seed, 200 + i), clips[i].id, clips[i].tags, clips[i].seconds,
                       clips[i].kind);
        audio::save_wav_pcm16((audio_dir / (std::string(clips[i].id) + ".wav")).string(), clip);
        json e;
        e["id"] = clips[i].id;
        e["file"] = std::string(clips[i].id) + ".wav";
        e["tags"] = clips[i].tags;
        audio_index["clips"].push_back(e);
    }
    {
        std::ofstream f(audio_dir / "index.json");
        f << audio_index.dump(2) << "\n";
    }

    // --- depth reference library ---
    depthadapt::save_library((fs::path(dir) / "depth_lib").string(),
                             depthadapt::synthetic_reference_library(hash_combine(seed, 300)));

    // --- agent policy ---
    {
        json policy;
        policy["seed"] = seed;
        policy["asset_count"] = 9;
        std::ofstream f(fs::path(dir) / "agent_policy.json");
        f << policy.dump(2) << "\n";
    }

    // --- scene config ---
    const std::string config_path = (fs::path(dir) / "scene.config.json").string();
    {
        json config;
        config["user_prompt"] = "a serene alpine lake ringed by pine forest under a clear sky";
        config["seed"] = seed;
        config["terrain_library"] = (fs::path(dir) / "terrain").string();
        config["asset_library"] = (fs::path(dir) / "assets").string();
        config["audio_library"] = (fs::path(dir) / "audio").string();
        config["depth_library"] = (fs::path(dir) / "depth_lib").string();
        config["backend"] = {{"mode", "stub"}, {"url", ""}};
        config["agent"] = {{"mode", "scripted"},
                           {"policy", (fs::path(dir) / "agent_policy.json").string()},
                           {"url", ""}};
        config["resolutions"] = {{"panorama_height", 256},
                                 {"bottom", 256},
                                 {"shadow_height", 128},
                                 {"asset", 192},
                                 {"cloud", 256},
                                 {"rain", 256},
                                 {"ripple", 128}};
        config["bands"] = {{"foreground", {2.0, 10.0}}, {"midground", {20.0, 50.0}}};
        config["asset_count"] = {5, 10};
        config["grid"] = {{"cols", 12}, {"rows", 6}, {"fine_div", 4}, {"mask_fraction", 0.8}};
        config["eye_height"] = 1.7;
        config["pitch_threshold_deg"] = 55.0;
        config["min_spacing"] = 1.5;
        config["budget_triangles"] = 250000;
        config["tile"] = {{"size", 256}, {"overlap", 32}};
        config["trimap"] = {{"dilate", 6}, {"erode", 6}};
        config["sun_dir"] = {0.35, -0.85, 0.25};
        config["shadow_floor"] = 0.4;
        config["displacement"] = {{"highpass_radius", 8}, {"scale", 0.15}};
        config["output_dir"] = (fs::path(dir) / "out").string();
        std::ofstream f(config_path);
        f << config.dump(2) << "\n";
    }
    return config_path;
}

}  // namespace pw::fixtures
