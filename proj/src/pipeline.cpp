#include "proxyworld/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>

#include "json.hpp"
#include "proxyworld/arranger.hpp"
#include "proxyworld/depthadapt.hpp"
#include "proxyworld/erp_render.hpp"
#include "proxyworld/fixtures.hpp"
#include "proxyworld/imageops.hpp"
#include "proxyworld/immersion.hpp"
#include "proxyworld/matting.hpp"
#include "proxyworld/scene.hpp"
#include "proxyworld/terrain.hpp"

namespace pw::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

uint64_t fnv64(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const uint8_t*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t fnv64_str(const std::string& s, uint64_t h = 0xcbf29ce484222325ull) {
    return fnv64(s.data(), s.size(), h);
}

uint64_t fnv64_file(const fs::path& path, uint64_t h) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("pipeline: missing stage input " + path.string());
    char buf[65536];
    while (f) {
        f.read(buf, sizeof(buf));
        h = fnv64(buf, static_cast<size_t>(f.gcount()), h);
    }
    return h;
}

std::string read_text(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("pipeline: cannot read " + path.string());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw std::runtime_error("pipeline: cannot write " + path.string());
    f << text;
}

}  // namespace

SceneConfig validate_config(const std::string& path) {
    std::vector<std::string> violations;
    std::ifstream f(path);
    if (!f) throw ConfigInvalid({"cannot open config file: " + path});
    json j;
    try {
        j = json::parse(f);
    } catch (const std::exception& e) {
        throw ConfigInvalid({std::string("config is not valid JSON: ") + e.what()});
    }

    SceneConfig c;
    c.user_prompt = j.value("user_prompt", "");
    if (c.user_prompt.empty()) violations.push_back("user_prompt: required");
    c.seed = j.value("seed", 1ull);

    auto path_field = [&](const char* key, std::string& out, bool required) {
        out = j.value(key, "");
        if (out.empty()) {
            if (required) violations.push_back(std::string(key) + ": required");
            return;
        }
        if (!fs::exists(out)) violations.push_back(std::string(key) + ": path does not exist: " + out);
    };
    path_field("terrain_library", c.terrain_library, true);
    path_field("asset_library", c.asset_library, true);
    path_field("audio_library", c.audio_library, true);
    path_field("depth_library", c.depth_library, false);

    if (j.contains("backend")) {
        c.backend_mode = j.at("backend").value("mode", "stub");
        c.backend_url = j.at("backend").value("url", "");
    }
    if (c.backend_mode != "stub" && c.backend_mode != "remote")
        violations.push_back("backend.mode: must be stub or remote");
    if (j.contains("agent")) {
        c.agent_mode = j.at("agent").value("mode", "scripted");
        c.agent_policy = j.at("agent").value("policy", "");
        c.agent_url = j.at("agent").value("url", "");
    }
    if (c.agent_mode != "scripted" && c.agent_mode != "remote")
        violations.push_back("agent.mode: must be scripted or remote");
    if (c.agent_mode == "scripted" && !c.agent_policy.empty() && !fs::exists(c.agent_policy))
        violations.push_back("agent.policy: path does not exist: " + c.agent_policy);

    if (j.contains("resolutions")) {
        const auto& r = j.at("resolutions");
        c.panorama_height = r.value("panorama_height", c.panorama_height);
        c.bottom_resolution = r.value("bottom", c.bottom_resolution);
        c.shadow_height = r.value("shadow_height", c.shadow_height);
        c.asset_resolution = r.value("asset", c.asset_resolution);
        c.cloud_resolution = r.value("cloud", c.cloud_resolution);
        c.rain_resolution = r.value("rain", c.rain_resolution);
        c.ripple_resolution = r.value("ripple", c.ripple_resolution);
    }
    for (const auto& [name, value] :
         {std::pair<const char*, int>{"panorama_height", c.panorama_height},
          {"bottom", c.bottom_resolution},
          {"shadow_height", c.shadow_height},
          {"asset", c.asset_resolution}})
        if (value < 16) violations.push_back(std::string("resolutions.") + name + ": too small");

    if (j.contains("bands")) {
        const auto& b = j.at("bands");
        if (b.contains("foreground")) {
            c.fg_min = b.at("foreground").at(0).get<double>();
            c.fg_max = b.at("foreground").at(1).get<double>();
        }
        if (b.contains("midground")) {
            c.mg_min = b.at("midground").at(0).get<double>();
            c.mg_max = b.at("midground").at(1).get<double>();
        }
    }
    if (!(c.fg_min < c.fg_max)) violations.push_back("bands.foreground: must be an increasing range");
    if (!(c.mg_min < c.mg_max)) violations.push_back("bands.midground: must be an increasing range");
    if (c.fg_max >= c.mg_min)
        violations.push_back("bands: foreground and midground must be ordered and non-overlapping");

    if (j.contains("asset_count")) {
        c.count_min = j.at("asset_count").at(0).get<int>();
        c.count_max = j.at("asset_count").at(1).get<int>();
    }
    if (c.count_min < 1 || c.count_max < c.count_min)
        violations.push_back("asset_count: must satisfy 1 <= min <= max");

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        c.grid_cols = g.value("cols", c.grid_cols);
        c.grid_rows = g.value("rows", c.grid_rows);
        c.fine_div = g.value("fine_div", c.fine_div);
        c.mask_fraction = g.value("mask_fraction", c.mask_fraction);
    }
    if (c.grid_cols < 1 || c.grid_rows < 1 ||
        static_cast<int64_t>(c.grid_cols) * c.grid_rows > 676)
        violations.push_back("grid: cols*rows must be in [1, 676]");
    if (c.fine_div < 1) violations.push_back("grid.fine_div: must be >= 1");

    c.eye_height = j.value("eye_height", c.eye_height);
    c.pitch_threshold_deg = j.value("pitch_threshold_deg", c.pitch_threshold_deg);
    c.min_spacing = j.value("min_spacing", c.min_spacing);
    c.budget_triangles = j.value("budget_triangles", c.budget_triangles);
    if (j.contains("tile")) {
        c.tile_size = j.at("tile").value("size", c.tile_size);
        c.tile_overlap = j.at("tile").value("overlap", c.tile_overlap);
    }
    if (c.tile_overlap < 0 || c.tile_overlap >= c.tile_size)
        violations.push_back("tile: overlap must be in [0, size)");
    if (j.contains("trimap")) {
        c.trimap_dilate = j.at("trimap").value("dilate", c.trimap_dilate);
        c.trimap_erode = j.at("trimap").value("erode", c.trimap_erode);
    }
    if (j.contains("sun_dir")) {
        c.sun_dir = {j.at("sun_dir").at(0).get<double>(), j.at("sun_dir").at(1).get<double>(),
                     j.at("sun_dir").at(2).get<double>()};
        if (length(c.sun_dir) < 1e-9) violations.push_back("sun_dir: must be non-zero");
    }
    c.shadow_floor = j.value("shadow_floor", c.shadow_floor);
    if (j.contains("displacement")) {
        c.displacement_radius = j.at("displacement").value("highpass_radius", c.displacement_radius);
        c.displacement_scale = j.at("displacement").value("scale", c.displacement_scale);
    }
    c.output_dir = j.value("output_dir", "");
    if (c.output_dir.empty()) violations.push_back("output_dir: required");

    if (!violations.empty()) throw ConfigInvalid(std::move(violations));
    return c;
}

std::unique_ptr<gen::Backend> make_backend(const SceneConfig& config) {
    if (config.backend_mode == "remote") {
        std::string url = config.backend_url;
        if (url.empty()) {
            const char* env = std::getenv("PROXYWORLD_BACKEND_URL");
            if (env) url = env;
        }
        if (url.empty())
            throw ConfigInvalid({"backend.url: required for remote mode (or set "
                                 "PROXYWORLD_BACKEND_URL)"});
        return std::make_unique<gen::RemoteBackend>(url);
    }
    return std::make_unique<gen::StubBackend>();
}

std::unique_ptr<agent::WorldAgent> make_agent(const SceneConfig& config) {
    if (config.agent_mode == "remote") {
        std::string url = config.agent_url;
        if (url.empty()) {
            const char* env = std::getenv("PROXYWORLD_AGENT_URL");
            if (env) url = env;
        }
        if (url.empty())
            throw ConfigInvalid({"agent.url: required for remote mode (or set "
                                 "PROXYWORLD_AGENT_URL)"});
        return std::make_unique<agent::RemoteAgent>(url);
    }
    if (!config.agent_policy.empty())
        return std::make_unique<agent::ScriptedAgent>(
            agent::ScriptedAgent::from_policy_file(config.agent_policy));
    return std::make_unique<agent::ScriptedAgent>(config.seed);
}

namespace {

struct Paths {
    fs::path out, work, cache, scene;
    explicit Paths(const SceneConfig& c)
        : out(c.output_dir),
          work(out / "work"),
          cache(out / "cache"),
          scene(out / "scene") {}

    fs::path stage_dir(int stage, const std::string& name) const {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "s%02d_", stage);
        return work / (buf + name);
    }
};

struct StageCtx {
    const SceneConfig& config;
    Paths paths;
    RunReport* report;
};

Vec3 scene_origin(const TriBvh& bvh, double eye_height) {
    const Ray down{{0.0, 1000.0, 0.0}, {0.0, -1.0, 0.0}};
    const RayHit hit = bvh.nearest(down);
    const double ground = hit.valid() ? 1000.0 - hit.t : 0.0;
    return {0.0, ground + eye_height, 0.0};
}

json load_json(const fs::path& path) { return json::parse(read_text(path)); }

// --- stage runners ----------------------------------------------------------

void stage_terrain_retrieve(StageCtx& ctx) {
    const auto library = terrain::load_template_library(
        (fs::path(ctx.config.terrain_library) / "index.json").string());
    std::set<std::string> query;
    for (const std::string& w : agent::split_words(ctx.config.user_prompt)) query.insert(w);
    const terrain::TerrainTemplate& chosen = terrain::retrieve_template(library, query);
    const TerrainMesh mesh = terrain::load_template_mesh(chosen, ctx.config.terrain_library);

    const fs::path dir = ctx.paths.stage_dir(1, "terrain");
    fs::create_directories(dir);
    save_mesh_bin((dir / "mesh.bin").string(), mesh);
    json meta;
    meta["id"] = chosen.id;
    meta["caption"] = chosen.caption;
    meta["tags"] = std::vector<std::string>(chosen.tags.begin(), chosen.tags.end());
    meta["water_present"] = chosen.water_present;
    write_text(dir / "template.json", meta.dump(2) + "\n");
}

void stage_depth_render(StageCtx& ctx) {
    const TerrainMesh mesh =
        load_mesh_bin((ctx.paths.stage_dir(1, "terrain") / "mesh.bin").string());
    const TriBvh bvh(mesh.vertices, mesh.triangles);
    const Vec3 origin = scene_origin(bvh, ctx.config.eye_height);
    const ErpImage depth = erp::render_depth(mesh, bvh, origin, ctx.config.panorama_height);

    const fs::path dir = ctx.paths.stage_dir(2, "depth");
    fs::create_directories(dir);
    save_raw_float((dir / "depth").string(), depth);
    json meta;
    meta["origin"] = {origin.x, origin.y, origin.z};
    write_text(dir / "meta.json", meta.dump(2) + "\n");
}

void stage_depth_adapt(StageCtx& ctx) {
    const Image depth = load_raw_float((ctx.paths.stage_dir(2, "depth") / "depth").string());
    std::vector<depthadapt::DepthThumb> library;
    if (!ctx.config.depth_library.empty())
        library = depthadapt::load_library(ctx.config.depth_library);
    else
        library = depthadapt::synthetic_reference_library(0x9e3779b9ull);

    const depthadapt::DepthThumb src = depthadapt::make_thumb(depth, "scene");
    const depthadapt::DepthThumb& ref = depthadapt::retrieve_reference(src, library);
    const depthadapt::RemapPolynomial poly = depthadapt::fit_remap(src, ref);
    const Image adapted = depthadapt::apply_remap(poly, depth);

    const fs::path dir = ctx.paths.stage_dir(3, "adapt");
    fs::create_directories(dir);
    save_raw_float((dir / "adapted").string(), adapted);
    json meta;
    meta["reference"] = ref.id;
    meta["coeffs_normalized"] = {poly.c3, poly.c2, poly.c1, poly.c0};
    meta["src_range"] = {poly.src_min, poly.src_max};
    meta["residual_rms"] = poly.residual_rms;
    meta["monotonic"] = poly.monotonic;
    write_text(dir / "fit.json", meta.dump(2) + "\n");
}

void stage_base_panorama(StageCtx& ctx) {
    const Image adapted = load_raw_float((ctx.paths.stage_dir(3, "adapt") / "adapted").string());
    const TerrainMesh mesh =
        load_mesh_bin((ctx.paths.stage_dir(1, "terrain") / "mesh.bin").string());
    const json template_meta = load_json(ctx.paths.stage_dir(1, "terrain") / "template.json");

    std::vector<gen::RegionPrompt> regions;
    if (template_meta.value("water_present", false)) {
        const TriBvh bvh(mesh.vertices, mesh.triangles);
        const Vec3 origin = scene_origin(bvh, ctx.config.eye_height);
        gen::RegionPrompt water;
        water.mask = terrain::render_mask(mesh, bvh, origin, ctx.config.panorama_height,
                                          terrain::MaskSelector::water);
        water.text = "calm reflective lake water";
        regions.push_back(std::move(water));
    }
    const std::string prompt =
        ctx.config.user_prompt + ", " + template_meta.value("caption", "");

    const auto backend = make_backend(ctx.config);
    const ErpImage pano =
        gen::generate_base_panorama(*backend, adapted, prompt, regions, ctx.config.seed);

    const fs::path dir = ctx.paths.stage_dir(4, "pano");
    fs::create_directories(dir);
    save_png((dir / "pano.png").string(), pano);
}

void stage_sky_outpaint(StageCtx& ctx) {
    const TerrainMesh mesh =
        load_mesh_bin((ctx.paths.stage_dir(1, "terrain") / "mesh.bin").string());
    const ErpImage pano{load_png((ctx.paths.stage_dir(4, "pano") / "pano.png").string())};
    const TriBvh bvh(mesh.vertices, mesh.triangles);
    const Vec3 origin = scene_origin(bvh, ctx.config.eye_height);
    const int height = pano.height;

    const ErpImage terrain_mask =
        terrain::render_mask(mesh, bvh, origin, height, terrain::MaskSelector::terrain);
    const ErpImage water_mask =
        terrain::render_mask(mesh, bvh, origin, height, terrain::MaskSelector::water);

    const auto backend = make_backend(ctx.config);
    const ErpImage sky = gen::outpaint_sky(*backend, pano, terrain_mask, ctx.config.seed);

    const fs::path dir = ctx.paths.stage_dir(5, "sky");
    fs::create_directories(dir);
    save_png((dir / "terrain_mask.png").string(), terrain_mask);
    save_png((dir / "water_mask.png").string(), water_mask);
    save_png((dir / "sky.png").string(), sky);
}

void stage_matting(StageCtx& ctx) {
    const ErpImage pano{load_png((ctx.paths.stage_dir(4, "pano") / "pano.png").string())};
    const Image terrain_mask =
        load_png((ctx.paths.stage_dir(5, "sky") / "terrain_mask.png").string());
    const gen::Trimap trimap =
        gen::build_trimap(terrain_mask, ctx.config.trimap_dilate, ctx.config.trimap_erode);
    const auto backend = make_backend(ctx.config);
    const ErpImage matte =
        gen::matte_terrain(*backend, pano, trimap, ctx.config.tile_size, ctx.config.tile_overlap);

    const fs::path dir = ctx.paths.stage_dir(6, "matte");
    fs::create_directories(dir);
    save_png((dir / "trimap.png").string(), trimap.labels);
    save_png((dir / "matte.png").string(), matte, 16);
}

// Bottom map: repaint the NegY cube face, then warp it into the top-down
// frame that uv1 samples, feathering 2 texels of the face boundary into the
// panorama colors.
Image build_bottom_texture(const TriBvh& bvh, const Image& pano, const Image& neg_y_face,
                           Vec3 origin, const terrain::BottomExtent& extent, int resolution) {
    Image out(resolution, resolution, 3);
    if (extent.side <= 0.0) return out;
    const int face_res = neg_y_face.width;
    for (int ty = 0; ty < resolution; ++ty) {
        for (int tx = 0; tx < resolution; ++tx) {
            const double wx = extent.min_x + (tx + 0.5) / resolution * extent.side;
            const double wz = extent.min_z + (ty + 0.5) / resolution * extent.side;
            const Ray down{{wx, origin.y + 1000.0, wz}, {0.0, -1.0, 0.0}};
            const RayHit hit = bvh.nearest(down);
            const double wy = hit.valid() ? down.origin.y - hit.t : 0.0;
            const Vec3 dir = normalized(Vec3{wx, wy, wz} - origin);
            const Vec2 uv = erp::dir_to_uv(dir);
            float rgb[3];
            for (int c = 0; c < 3; ++c) rgb[c] = sample_bilinear(pano, uv.x, uv.y, c);
            if (dir.y < -1e-6) {
                // gnomonic NegY face coords: dir ~ (s, -1, -t)
                const double k = -1.0 / dir.y;
                const double s = dir.x * k;
                const double t = -dir.z * k;
                if (std::abs(s) < 1.0 && std::abs(t) < 1.0) {
                    const double fi = (s + 1.0) * 0.5 * face_res - 0.5;
                    const double fj = (t + 1.0) * 0.5 * face_res - 0.5;
                    const int i0 = std::clamp(static_cast<int>(std::floor(fi)), 0, face_res - 1);
                    const int j0 = std::clamp(static_cast<int>(std::floor(fj)), 0, face_res - 1);
                    const int i1 = std::min(i0 + 1, face_res - 1);
                    const int j1 = std::min(j0 + 1, face_res - 1);
                    const double fu = std::clamp(fi - i0, 0.0, 1.0);
                    const double fv = std::clamp(fj - j0, 0.0, 1.0);
                    // feather: 2 face texels from the boundary blend into pano
                    const double edge = std::min(1.0 - std::abs(s), 1.0 - std::abs(t));
                    const double w = std::clamp(edge * face_res * 0.5 / 2.0, 0.0, 1.0);
                    for (int c = 0; c < 3; ++c) {
                        const double top = neg_y_face.at(i0, j0, c) * (1 - fu) +
                                           neg_y_face.at(i1, j0, c) * fu;
                        const double bot = neg_y_face.at(i0, j1, c) * (1 - fu) +
                                           neg_y_face.at(i1, j1, c) * fu;
                        const double face_color = top * (1 - fv) + bot * fv;
                        rgb[c] = static_cast<float>(w * face_color + (1.0 - w) * rgb[c]);
                    }
                }
            }
            for (int c = 0; c < 3; ++c) out.at(tx, ty, c) = rgb[c];
        }
    }
    return out;
}

void stage_terrain_uv(StageCtx& ctx) {
    TerrainMesh mesh = load_mesh_bin((ctx.paths.stage_dir(1, "terrain") / "mesh.bin").string());
    const Image pano = load_png((ctx.paths.stage_dir(4, "pano") / "pano.png").string());
    const TriBvh bvh(mesh.vertices, mesh.triangles);
    const Vec3 origin = scene_origin(bvh, ctx.config.eye_height);

    mesh = terrain::assign_panoramic_uv(std::move(mesh), origin);
    mesh = terrain::fix_seam_uvs(std::move(mesh));
    mesh = terrain::partition_bottom(std::move(mesh), origin, ctx.config.pitch_threshold_deg);
    const terrain::BottomExtent extent = terrain::bottom_extent(mesh);

    // NegY cube face is the bottom area handed to the repaint backend
    const erp::CubemapFace face =
        erp::to_cubemap_face(pano, erp::Face::NegY, ctx.config.bottom_resolution);
    const auto backend = make_backend(ctx.config);
    Image repaint_mask(face.data.width, face.data.height, 1, 1.0f);
    const Image repainted = gen::repaint_masked(*backend, face.data, repaint_mask,
                                                "ground detail refinement", ctx.config.seed);
    const Image bottom = build_bottom_texture(bvh, pano, repainted, origin, extent,
                                              ctx.config.bottom_resolution);

    // stub height estimate: luminance of the bottom map
    Image height_map(bottom.width, bottom.height, 1);
    for (int y = 0; y < bottom.height; ++y)
        for (int x = 0; x < bottom.width; ++x)
            height_map.at(x, y, 0) = 0.299f * bottom.at(x, y, 0) + 0.587f * bottom.at(x, y, 1) +
                                     0.114f * bottom.at(x, y, 2);
    mesh = terrain::apply_displacement(std::move(mesh), height_map, ctx.config.displacement_radius,
                                       ctx.config.displacement_scale);

    const fs::path dir = ctx.paths.stage_dir(7, "uvmesh");
    fs::create_directories(dir);
    save_mesh_bin((dir / "mesh.bin").string(), mesh);
    save_png((dir / "bottom.png").string(), bottom);
    save_png((dir / "height.png").string(), height_map);
}

void stage_arrangement(StageCtx& ctx) {
    const Image pano = load_png((ctx.paths.stage_dir(4, "pano") / "pano.png").string());
    const Image terrain_mask =
        load_png((ctx.paths.stage_dir(5, "sky") / "terrain_mask.png").string());
    const Image water_mask = load_png((ctx.paths.stage_dir(5, "sky") / "water_mask.png").string());
    const TerrainMesh mesh =
        load_mesh_bin((ctx.paths.stage_dir(7, "uvmesh") / "mesh.bin").string());
    const json template_meta = load_json(ctx.paths.stage_dir(1, "terrain") / "template.json");
    const TriBvh bvh(mesh.vertices, mesh.triangles);
    const Vec3 origin = scene_origin(bvh, ctx.config.eye_height);

    // unsuitable = sky or water
    Image suitability(pano.width, pano.height, 1);
    for (int y = 0; y < pano.height; ++y)
        for (int x = 0; x < pano.width; ++x)
            suitability.at(x, y, 0) =
                (terrain_mask.at(x, y, 0) < 0.5f || water_mask.at(x, y, 0) > 0.5f) ? 1.0f : 0.0f;

    arrange::ArrangementParams params;
    params.grid.cols = ctx.config.grid_cols;
    params.grid.rows = ctx.config.grid_rows;
    params.grid.image_w = pano.width;
    params.grid.image_h = pano.height;
    params.grid.suitability_mask = suitability;
    params.grid.mask_fraction = ctx.config.mask_fraction;
    params.count_min = ctx.config.count_min;
    params.count_max = ctx.config.count_max;
    params.fine_div = ctx.config.fine_div;
    params.bands = {ctx.config.fg_min, ctx.config.fg_max, ctx.config.mg_min, ctx.config.mg_max};
    params.min_spacing = ctx.config.min_spacing;
    params.seed = ctx.config.seed;
    params.scene_context = ctx.config.user_prompt + " " + template_meta.value("caption", "");

    const auto library = arrange::load_asset_library(
        (fs::path(ctx.config.asset_library) / "index.json").string());
    const auto world_agent = make_agent(ctx.config);
    const arrange::ArrangementResult result =
        arrange::arrange_assets(*world_agent, pano, mesh, bvh, origin, library, params);

    const fs::path dir = ctx.paths.stage_dir(8, "arrange");
    fs::create_directories(dir);
    arrange::write_audit_log((dir / "placements.jsonl").string(), result.records);
    save_png((dir / "annotated.png").string(), arrange::annotate_grid(pano, params.grid));
    save_png((dir / "suitability.png").string(), suitability);
    json warn = json::array();
    for (const std::string& w : result.warnings) warn.push_back(w);
    write_text(dir / "warnings.json", warn.dump(2) + "\n");
    for (const std::string& w : result.warnings) ctx.report->warnings.push_back("arrange: " + w);
}

std::vector<arrange::PlacementRecord> load_placements(const fs::path& jsonl) {
    std::vector<arrange::PlacementRecord> out;
    std::ifstream f(jsonl);
    if (!f) throw std::runtime_error("pipeline: cannot read " + jsonl.string());
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        arrange::PlacementRecord r;
        r.coarse_cell = j.value("coarse_cell", "");
        r.fine_cell = j.value("fine_cell", "");
        const auto& cr = j.at("coarse_rect");
        r.coarse_rect = {cr.at(0), cr.at(1), cr.at(2), cr.at(3)};
        const auto& fr = j.at("fine_rect");
        r.fine_rect = {fr.at(0), fr.at(1), fr.at(2), fr.at(3)};
        r.pixel = {j.at("pixel").at(0), j.at("pixel").at(1)};
        r.world_point = {j.at("world_point").at(0), j.at("world_point").at(1),
                         j.at("world_point").at(2)};
        r.distance = j.value("distance", 0.0);
        const std::string band = j.value("band", "out_of_band");
        r.band = band == "foreground" ? arrange::Band::foreground
                 : band == "midground" ? arrange::Band::midground
                                       : arrange::Band::out_of_band;
        r.template_id = j.value("template_id", "");
        r.asset_prompt = j.value("asset_prompt", "");
        r.status = j.value("status", "");
        r.valid = r.status == "valid";
        r.transcript = j.value("transcript", "");
        out.push_back(std::move(r));
    }
    return out;
}

Image crop_wrap(const Image& img, int cx, int cy, int size) {
    Image out(size, size, img.channels);
    for (int y = 0; y < size; ++y) {
        const int sy = std::clamp(cy - size / 2 + y, 0, img.height - 1);
        for (int x = 0; x < size; ++x) {
            const int sx = (((cx - size / 2 + x) % img.width) + img.width) % img.width;
            for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(sx, sy, c);
        }
    }
    return out;
}

void stage_asset_synthesis(StageCtx& ctx) {
    const Image pano = load_png((ctx.paths.stage_dir(4, "pano") / "pano.png").string());
    const auto records =
        load_placements(ctx.paths.stage_dir(8, "arrange") / "placements.jsonl");
    const auto library = arrange::load_asset_library(
        (fs::path(ctx.config.asset_library) / "index.json").string());
    const auto backend = make_backend(ctx.config);

    const fs::path dir = ctx.paths.stage_dir(9, "assets");
    fs::create_directories(dir);
    json meta = json::array();
    int index = 0;
    for (const auto& record : records) {
        if (!record.valid) {
            ++index;
            continue;
        }
        const Image background =
            crop_wrap(pano, record.pixel.x, record.pixel.y, ctx.config.asset_resolution);
        const uint64_t seed = hash_combine(ctx.config.seed, 0xa55e7ull + index);
        json entry;
        entry["index"] = index;
        entry["band"] = arrange::band_name(record.band);
        entry["template_id"] = record.template_id;
        if (record.band == arrange::Band::midground) {
            const gen::RgbaTexture tex = gen::synthesize_asset_rgba(
                *backend, record.asset_prompt, background, std::nullopt, seed);
            const std::string name = "asset_" + std::to_string(index) + ".png";
            save_png((dir / name).string(), tex.rgba);
            entry["texture"] = name;
        } else {
            const arrange::AssetTemplate* tmpl = nullptr;
            for (const auto& t : library)
                if (t.id == record.template_id) tmpl = &t;
            if (!tmpl) throw arrange::TemplateMissing("unknown template " + record.template_id);
            json groups = json::object();
            for (const auto& group : tmpl->material_groups) {
                std::optional<Image> template_alpha;
                if (!group.alpha_file.empty()) {
                    Image alpha = load_png(
                        (fs::path(ctx.config.asset_library) / group.alpha_file).string());
                    template_alpha = resize_bicubic(alpha, ctx.config.asset_resolution,
                                                    ctx.config.asset_resolution);
                    for (float& v : template_alpha->data) v = std::clamp(v, 0.0f, 1.0f);
                }
                const gen::RgbaTexture tex = gen::synthesize_asset_rgba(
                    *backend, record.asset_prompt + ", " + group.name + " detail", background,
                    template_alpha, hash_combine(seed, fnv64_str(group.name)));
                const std::string name =
                    "asset_" + std::to_string(index) + "_" + group.name + ".png";
                save_png((dir / name).string(), tex.rgba);
                groups[group.name] = name;
            }
            entry["group_textures"] = groups;
        }
        meta.push_back(entry);
        ++index;
    }
    write_text(dir / "asset_meta.json", meta.dump(2) + "\n");
}

void stage_immersion(StageCtx& ctx) {
    const json template_meta = load_json(ctx.paths.stage_dir(1, "terrain") / "template.json");
    const fs::path dir = ctx.paths.stage_dir(10, "immersion");
    fs::create_directories(dir);

    json effects = json::array();
    {
        const Image cloud = immersion::gen_cloud_noise(ctx.config.seed, ctx.config.cloud_resolution);
        save_png((dir / "fx_cloud_noise.png").string(), cloud);
        effects.push_back({{"effect", "cloud"}, {"textures", {{"noise", "fx_cloud_noise.png"}}},
                           {"target", "sky"}});
    }
    if (template_meta.value("water_present", false)) {
        const immersion::RippleMap ripple = immersion::gen_ripple_map(ctx.config.ripple_resolution);
        save_png((dir / "fx_ripple_map.png").string(), ripple.rgba);
        effects.push_back({{"effect", "ripple"}, {"textures", {{"map", "fx_ripple_map.png"}}},
                           {"target", "terrain"}});
    }
    if (ctx.config.user_prompt.find("rain") != std::string::npos) {
        const immersion::RainMaps rain =
            immersion::gen_rain_maps(ctx.config.seed, ctx.config.rain_resolution, 24.0);
        save_png((dir / "fx_rain_depth.png").string(), rain.depth_bands);
        save_png((dir / "fx_rain_alpha.png").string(), rain.alpha);
        save_png((dir / "fx_rain_normal.png").string(), rain.normal);
        effects.push_back({{"effect", "rain"},
                           {"textures",
                            {{"depth", "fx_rain_depth.png"},
                             {"alpha", "fx_rain_alpha.png"},
                             {"normal", "fx_rain_normal.png"}}},
                           {"target", "camera"}});
    }

    // ambient audio
    const json audio_index =
        load_json(fs::path(ctx.config.audio_library) / "index.json");
    std::vector<audio::AudioClip> clips;
    for (const auto& e : audio_index.at("clips")) {
        audio::AudioClip clip = audio::load_wav(
            (fs::path(ctx.config.audio_library) / e.at("file").get<std::string>()).string());
        clip.id = e.at("id").get<std::string>();
        for (const auto& t : e.at("tags")) clip.tags.insert(t.get<std::string>());
        clips.push_back(std::move(clip));
    }
    const std::string scene_tags =
        ctx.config.user_prompt + " " + template_meta.value("caption", "");
    const auto world_agent = make_agent(ctx.config);
    const auto selections = immersion::select_ambient(*world_agent, scene_tags, clips);

    std::vector<std::pair<const audio::AudioClip*, double>> mix_input;
    json tracks = json::array();
    for (const auto& sel : selections) {
        mix_input.push_back({sel.clip, sel.volume});
        tracks.push_back({{"id", sel.clip->id},
                          {"volume", sel.volume},
                          {"tags", std::vector<std::string>(sel.clip->tags.begin(),
                                                            sel.clip->tags.end())}});
    }
    const audio::AudioClip ambient = audio::mix_tracks(mix_input);
    audio::save_wav_float32((dir / "ambient.wav").string(), ambient);

    json meta;
    meta["effects"] = effects;
    meta["tracks"] = tracks;
    write_text(dir / "immersion.json", meta.dump(2) + "\n");
}

// Rebuilds the full SceneGraph from work artifacts (shared by shadow,
// assemble and export stages). Attaches the shadow map when present.
scene::SceneGraph build_scene(StageCtx& ctx, bool with_shadow) {
    TerrainMesh mesh = load_mesh_bin((ctx.paths.stage_dir(7, "uvmesh") / "mesh.bin").string());
    const Image pano = load_png((ctx.paths.stage_dir(4, "pano") / "pano.png").string());
    const Image matte = load_png((ctx.paths.stage_dir(6, "matte") / "matte.png").string());
    const Image sky_tex = load_png((ctx.paths.stage_dir(5, "sky") / "sky.png").string());
    const Image bottom = load_png((ctx.paths.stage_dir(7, "uvmesh") / "bottom.png").string());
    const TriBvh bvh(mesh.vertices, mesh.triangles);
    const Vec3 origin = scene_origin(bvh, ctx.config.eye_height);

    scene::TerrainNode terrain_node;
    terrain_node.pano_texture = Image(pano.width, pano.height, 4);
    for (int y = 0; y < pano.height; ++y)
        for (int x = 0; x < pano.width; ++x) {
            for (int c = 0; c < 3; ++c)
                terrain_node.pano_texture.at(x, y, c) = pano.at(x, y, c);
            terrain_node.pano_texture.at(x, y, 3) = matte.at(x, y, 0);
        }
    terrain_node.bottom_texture = bottom;
    terrain_node.mesh = std::move(mesh);

    scene::SkyNode sky_node;
    sky_node.dome = scene::make_sky_dome(600.0);
    sky_node.texture = sky_tex;

    // proxies from placements + synthesized textures
    const auto records = load_placements(ctx.paths.stage_dir(8, "arrange") / "placements.jsonl");
    const json asset_meta = load_json(ctx.paths.stage_dir(9, "assets") / "asset_meta.json");
    const auto library = arrange::load_asset_library(
        (fs::path(ctx.config.asset_library) / "index.json").string());
    const fs::path asset_dir = ctx.paths.stage_dir(9, "assets");

    arrange::SizeTable sizes;
    std::vector<arrange::ProxyAsset> assets;
    for (const auto& entry : asset_meta) {
        const int index = entry.at("index").get<int>();
        const auto& record = records.at(index);
        if (!record.valid) continue;
        if (record.band == arrange::Band::midground) {
            gen::RgbaTexture tex;
            tex.rgba = load_png((asset_dir / entry.at("texture").get<std::string>()).string());
            assets.push_back(arrange::instantiate_proxy(record, tex, origin, sizes));
        } else {
            const arrange::AssetTemplate* tmpl = nullptr;
            for (const auto& t : library)
                if (t.id == record.template_id) tmpl = &t;
            if (!tmpl) throw arrange::TemplateMissing("unknown template " + record.template_id);
            const TerrainMesh template_mesh = arrange::load_template_mesh_gltf(
                (fs::path(ctx.config.asset_library) / tmpl->mesh_path).string());
            gen::RgbaTexture first;
            first.rgba = load_png(
                (asset_dir /
                 entry.at("group_textures").at(tmpl->material_groups.front().name).get<std::string>())
                    .string());
            arrange::ProxyAsset asset =
                arrange::instantiate_proxy(record, first, origin, sizes, tmpl, &template_mesh);
            for (auto& group : asset.groups) {
                group.texture.rgba = load_png(
                    (asset_dir / entry.at("group_textures").at(group.name).get<std::string>())
                        .string());
            }
            assets.push_back(std::move(asset));
        }
    }

    // effects + audio
    const json immersion_meta = load_json(ctx.paths.stage_dir(10, "immersion") / "immersion.json");
    const fs::path fx_dir = ctx.paths.stage_dir(10, "immersion");
    std::vector<scene::EffectData> effects;
    for (const auto& e : immersion_meta.at("effects")) {
        scene::EffectData fx;
        fx.effect = e.at("effect").get<std::string>();
        fx.target = e.value("target", "sky");
        for (const auto& [role, file] : e.at("textures").items())
            fx.textures[role] = load_png((fx_dir / file.get<std::string>()).string());
        effects.push_back(std::move(fx));
    }
    std::vector<scene::AudioTrack> tracks;
    for (const auto& t : immersion_meta.at("tracks")) {
        scene::AudioTrack track;
        track.id = t.at("id").get<std::string>();
        track.volume = t.at("volume").get<double>();
        for (const auto& tag : t.at("tags")) track.tags.push_back(tag.get<std::string>());
        tracks.push_back(std::move(track));
    }
    const audio::AudioClip ambient = audio::load_wav((fx_dir / "ambient.wav").string());

    scene::SceneGraph graph =
        scene::assemble_scene(std::move(terrain_node), std::move(sky_node), std::move(assets),
                              std::move(effects), std::move(tracks), ambient, origin);
    graph.sun_dir = normalized(ctx.config.sun_dir);
    graph.shadow_floor = ctx.config.shadow_floor;
    if (with_shadow) {
        Image shadow = load_png((ctx.paths.stage_dir(11, "shadow") / "shadow.png").string());
        graph.shadow_map = std::move(shadow);
    }
    return graph;
}

void stage_shadow_bake(StageCtx& ctx) {
    scene::SceneGraph graph = build_scene(ctx, false);
    const ErpImage shadow = shadow::bake_shadow(graph, graph.sun_dir, ctx.config.shadow_height,
                                                ctx.config.shadow_floor);
    const fs::path dir = ctx.paths.stage_dir(11, "shadow");
    fs::create_directories(dir);
    save_png((dir / "shadow.png").string(), shadow, 16);
}

void stage_assemble(StageCtx& ctx) {
    scene::SceneGraph graph = build_scene(ctx, true);
    const scene::BudgetReport report = scene::budget_report(graph, ctx.config.budget_triangles);
    json j;
    j["primitive_count"] = report.primitive_count;
    j["texture_bytes"] = report.texture_bytes;
    j["budget"] = report.budget;
    j["pass"] = report.pass;
    json nodes = json::array();
    for (const auto& node : report.nodes)
        nodes.push_back({{"name", node.name},
                         {"triangles", node.triangles},
                         {"texture_bytes", node.texture_bytes}});
    j["nodes"] = nodes;
    const fs::path dir = ctx.paths.stage_dir(12, "assemble");
    fs::create_directories(dir);
    write_text(dir / "budget.json", j.dump(2) + "\n");
    if (!report.pass)
        ctx.report->warnings.push_back("budget: primitive count " +
                                       std::to_string(report.primitive_count) + " exceeds " +
                                       std::to_string(report.budget));
}

void stage_export(StageCtx& ctx) {
    scene::SceneGraph graph = build_scene(ctx, true);
    fs::remove_all(ctx.paths.scene);
    scene::export_scene(graph, ctx.paths.scene.string());
    ctx.report->scene_dir = ctx.paths.scene.string();
}

// --- stage table ------------------------------------------------------------

struct StageDef {
    const char* name;
    void (*run)(StageCtx&);
    // files whose bytes feed the input hash, relative to earlier stage dirs
    std::vector<fs::path> (*inputs)(const StageCtx&);
    std::string (*params)(const SceneConfig&);
};

std::string params_common(const SceneConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["prompt"] = c.user_prompt;
    return j.dump();
}

// stages that call the generative backend carry its identity in their hash
std::string params_backend(const SceneConfig& c) {
    json j = json::parse(params_common(c));
    j["backend"] = {c.backend_mode, c.backend_url};
    return j.dump();
}

std::string params_agent(const SceneConfig& c) {
    json j;
    j["agent"] = {c.agent_mode, c.agent_policy, c.agent_url};
    return j.dump();
}

const std::vector<StageDef>& stage_table() {
    static const std::vector<StageDef> table = {
        {"terrain_retrieve", stage_terrain_retrieve,
         [](const StageCtx& ctx) {
             return std::vector<fs::path>{fs::path(ctx.config.terrain_library) / "index.json"};
         },
         [](const SceneConfig& c) { return params_common(c); }},
        {"depth_render", stage_depth_render,
         [](const StageCtx& ctx) {
             return std::vector<fs::path>{ctx.paths.stage_dir(1, "terrain") / "mesh.bin"};
         },
         [](const SceneConfig& c) {
             json j;
             j["height"] = c.panorama_height;
             j["eye"] = c.eye_height;
             return j.dump();
         }},
        {"depth_adapt", stage_depth_adapt,
         [](const StageCtx& ctx) {
             std::vector<fs::path> in{ctx.paths.stage_dir(2, "depth") / "depth.f32"};
             if (!ctx.config.depth_library.empty())
                 in.push_back(fs::path(ctx.config.depth_library) / "index.json");
             return in;
         },
         [](const SceneConfig& c) {
             json j;
             j["lib"] = c.depth_library;
             return j.dump();
         }},
        {"base_panorama", stage_base_panorama,
         [](const StageCtx& ctx) {
             return std::vector<fs::path>{ctx.paths.stage_dir(3, "adapt") / "adapted.f32",
                                          ctx.paths.stage_dir(1, "terrain") / "template.json"};
         },
         [](const SceneConfig& c) { return params_backend(c); }},
        {"sky_outpaint", stage_sky_outpaint,
         [](const StageCtx& ctx) {
             return std::vector<fs::path>{ctx.paths.stage_dir(1, "terrain") / "mesh.bin",
                                          ctx.paths.stage_dir(4, "pano") / "pano.png"};
         },
         [](const SceneConfig& c) { return params_backend(c); }},
        {"matting", stage_matting,
         [](const StageCtx& ctx) {
             return std::vector<fs::path>{ctx.paths.stage_dir(4, "pano") / "pano.png",
                                          ctx.paths.stage_dir(5, "sky") / "terrain_mask.png"};
         },
         [](const SceneConfig& c) {
             json j;
             j["tile"] = {c.tile_size, c.tile_overlap};
             j["trimap"] = {c.trimap_dilate, c.trimap_erode};
             j["backend"] = {c.backend_mode, c.backend_url};
             return j.dump();
         }},
        {"terrain_uv", stage_terrain_uv,
         [](const StageCtx& ctx) {
             return std::vector<fs::path>{ctx.paths.stage_dir(1, "terrain") / "mesh.bin",
                                          ctx.paths.stage_dir(4, "pano") / "pano.png"};
         },
         [](const SceneConfig& c) {
             json j;
             j["pitch"] = c.pitch_threshold_deg;
             j["bottom"] = c.bottom_resolution;
             j["disp"] = {c.displacement_radius, c.displacement_scale};
             j["eye"] = c.eye_height;
             j["seed"] = c.seed;
             j["backend"] = {c.backend_mode, c.backend_url};
             return j.dump();
         }},
        {"arrangement", stage_arrangement,
         [](const StageCtx& ctx) {
             std::vector<fs::path> in{ctx.paths.stage_dir(4, "pano") / "pano.png",
                                      ctx.paths.stage_dir(5, "sky") / "terrain_mask.png",
                                      ctx.paths.stage_dir(5, "sky") / "water_mask.png",
                                      ctx.paths.stage_dir(7, "uvmesh") / "mesh.bin",
                                      fs::path(ctx.config.asset_library) / "index.json"};
             if (!ctx.config.agent_policy.empty()) in.push_back(ctx.config.agent_policy);
             return in;
         },
         [](const SceneConfig& c) {
             json j = json::parse(params_agent(c));
             j["seed"] = c.seed;
             j["grid"] = {c.grid_cols, c.grid_rows, c.fine_div};
             j["bands"] = {c.fg_min, c.fg_max, c.mg_min, c.mg_max};
             j["count"] = {c.count_min, c.count_max};
             j["spacing"] = c.min_spacing;
             j["mask_fraction"] = c.mask_fraction;
             return j.dump();
         }},
        {"asset_synthesis", stage_asset_synthesis,
         [](const StageCtx& ctx) {
             return std::vector<fs::path>{ctx.paths.stage_dir(8, "arrange") / "placements.jsonl",
                                          ctx.paths.stage_dir(4, "pano") / "pano.png",
                                          fs::path(ctx.config.asset_library) / "index.json"};
         },
         [](const SceneConfig& c) {
             json j;
             j["seed"] = c.seed;
             j["asset_res"] = c.asset_resolution;
             j["backend"] = {c.backend_mode, c.backend_url};
             return j.dump();
         }},
        {"immersion", stage_immersion,
         [](const StageCtx& ctx) {
             std::vector<fs::path> in{ctx.paths.stage_dir(1, "terrain") / "template.json",
                                      fs::path(ctx.config.audio_library) / "index.json"};
             if (!ctx.config.agent_policy.empty()) in.push_back(ctx.config.agent_policy);
             return in;
         },
         [](const SceneConfig& c) {
             json j = json::parse(params_agent(c));
             j["seed"] = c.seed;
             j["prompt"] = c.user_prompt;
             j["res"] = {c.cloud_resolution, c.rain_resolution, c.ripple_resolution};
             return j.dump();
         }},
        {"shadow_bake", stage_shadow_bake,
         [](const StageCtx& ctx) {
             return std::vector<fs::path>{ctx.paths.stage_dir(7, "uvmesh") / "mesh.bin",
                                          ctx.paths.stage_dir(8, "arrange") / "placements.jsonl",
                                          ctx.paths.stage_dir(9, "assets") / "asset_meta.json"};
         },
         [](const SceneConfig& c) {
             json j;
             j["sun"] = {c.sun_dir.x, c.sun_dir.y, c.sun_dir.z};
             j["floor"] = c.shadow_floor;
             j["height"] = c.shadow_height;
             return j.dump();
         }},
        {"assemble", stage_assemble,
         [](const StageCtx& ctx) {
             return std::vector<fs::path>{ctx.paths.stage_dir(7, "uvmesh") / "mesh.bin",
                                          ctx.paths.stage_dir(9, "assets") / "asset_meta.json",
                                          ctx.paths.stage_dir(10, "immersion") / "immersion.json",
                                          ctx.paths.stage_dir(11, "shadow") / "shadow.png"};
         },
         [](const SceneConfig& c) {
             json j;
             j["budget"] = c.budget_triangles;
             return j.dump();
         }},
        {"export", stage_export,
         [](const StageCtx& ctx) {
             return std::vector<fs::path>{ctx.paths.stage_dir(12, "assemble") / "budget.json",
                                          ctx.paths.stage_dir(11, "shadow") / "shadow.png",
                                          ctx.paths.stage_dir(10, "immersion") / "immersion.json"};
         },
         [](const SceneConfig& c) { return params_common(c); }},
    };
    return table;
}

uint64_t stage_input_hash(const StageDef& def, StageCtx& ctx) {
    uint64_t h = fnv64_str(def.name);
    h = fnv64_str(def.params(ctx.config), h);
    for (const fs::path& input : def.inputs(ctx)) h = fnv64_file(input, h);
    return h;
}

bool try_cache_hit(const StageDef& def, StageCtx& ctx, int index, uint64_t hash) {
    const fs::path manifest = ctx.paths.cache / ("s" + std::to_string(index) + "_" +
                                                 std::string(def.name) + ".json");
    if (!fs::exists(manifest)) return false;
    json j;
    try {
        j = load_json(manifest);
    } catch (const std::exception&) {
        return false;
    }
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
    if (j.value("input_hash", "") != hex) return false;
    for (const auto& out : j.value("outputs", json::array()))
        if (!fs::exists(ctx.paths.out / out.get<std::string>())) return false;
    return true;
}

constexpr const char* kStageDirNames[13] = {"terrain", "depth",   "adapt",     "pano",
                                            "sky",     "matte",   "uvmesh",    "arrange",
                                            "assets",  "immersion", "shadow",  "assemble",
                                            "export"};

void write_cache_manifest(const StageDef& def, StageCtx& ctx, int index, uint64_t hash) {
    const fs::path stage_root =
        index == 13 ? ctx.paths.scene : ctx.paths.stage_dir(index, kStageDirNames[index - 1]);
    json outputs = json::array();
    std::vector<std::string> files;
    if (fs::exists(stage_root))
        for (const auto& entry : fs::recursive_directory_iterator(stage_root))
            if (entry.is_regular_file())
                files.push_back(fs::relative(entry.path(), ctx.paths.out).string());
    std::sort(files.begin(), files.end());
    for (const std::string& f : files) outputs.push_back(f);

    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
    json j;
    j["stage"] = def.name;
    j["input_hash"] = hex;
    j["outputs"] = outputs;
    fs::create_directories(ctx.paths.cache);
    write_text(ctx.paths.cache / ("s" + std::to_string(index) + "_" + def.name + ".json"),
               j.dump(2) + "\n");
}

void run_stage(const StageDef& def, StageCtx& ctx, int index, bool force) {
    const uint64_t hash = stage_input_hash(def, ctx);
    if (!force && try_cache_hit(def, ctx, index, hash)) {
        ctx.report->stages_run.push_back(std::string(def.name) + " (cached)");
        return;
    }
    const auto start = std::chrono::steady_clock::now();
    try {
        def.run(ctx);
    } catch (const gen::BackendUnavailable&) {
        throw;  // keeps its exit-code semantics; partial outputs stay on disk
    } catch (const gen::BackendMalformedReply&) {
        throw;
    } catch (const agent::AgentUnavailable&) {
        throw;
    } catch (const ConfigInvalid&) {
        throw;
    } catch (const std::exception& e) {
        throw std::runtime_error("stage " + std::to_string(index) + " (" + def.name +
                                 "): " + e.what());
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ctx.report->stages_run.push_back(def.name);
    ctx.report->timings_seconds.push_back({def.name, seconds});
    write_cache_manifest(def, ctx, index, hash);
}

}  // namespace

const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const StageDef& def : stage_table()) out.push_back(def.name);
        return out;
    }();
    return names;
}

RunReport run_pipeline(const SceneConfig& config, int up_to) {
    RunReport report;
    StageCtx ctx{config, Paths(config), &report};
    fs::create_directories(ctx.paths.work);
    fs::create_directories(ctx.paths.cache);

    const auto& table = stage_table();
    const int last = up_to < 0 ? static_cast<int>(table.size()) : up_to;
    for (int i = 1; i <= last; ++i) run_stage(table[i - 1], ctx, i, false);
    if (report.scene_dir.empty()) report.scene_dir = ctx.paths.scene.string();
    return report;
}

RunReport run_single_stage(const SceneConfig& config, int stage) {
    const auto& table = stage_table();
    if (stage < 1 || stage > static_cast<int>(table.size()))
        throw std::runtime_error("stage index must be in [1," + std::to_string(table.size()) + "]");
    RunReport report;
    StageCtx ctx{config, Paths(config), &report};
    fs::create_directories(ctx.paths.work);
    fs::create_directories(ctx.paths.cache);
    run_stage(table[stage - 1], ctx, stage, true);
    report.scene_dir = ctx.paths.scene.string();
    return report;
}

}  // namespace pw::pipeline
