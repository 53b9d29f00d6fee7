#include "proxyworld/scene.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "proxyworld/erp.hpp"
#include "proxyworld/gltf.hpp"

namespace pw::scene {

namespace fs = std::filesystem;

TerrainMesh make_sky_dome(double radius, int segments, int rings) {
    TerrainMesh dome;
    for (int r = 0; r <= rings; ++r) {
        const double v = 1.0 - static_cast<double>(r) / rings;  // 1 = zenith row first
        for (int s = 0; s <= segments; ++s) {
            const double u = static_cast<double>(s) / segments;
            const Vec3 dir = erp::uv_to_dir({u == 1.0 ? 0.0 : u, v});
            dome.vertices.push_back(dir * radius);
            dome.uv0.push_back({u, v});
        }
    }
    const int stride = segments + 1;
    for (int r = 0; r < rings; ++r) {
        for (int s = 0; s < segments; ++s) {
            const int a = r * stride + s;
            const int b = a + 1;
            const int c = a + stride;
            const int d = c + 1;
            // inward winding
            dome.triangles.push_back({a, c, b});
            dome.triangles.push_back({b, c, d});
        }
    }
    drop_degenerate_triangles(dome);
    return dome;
}

namespace {

bool finite(Vec3 v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

void validate_scene(const SceneGraph& scene, std::vector<std::string>& items) {
    if (scene.terrain.mesh.triangles.empty()) items.push_back("terrain: empty mesh");
    if (!scene.terrain.mesh.has_uv0()) items.push_back("terrain: uv0 not assigned");
    if (scene.terrain.pano_texture.empty()) items.push_back("terrain: missing panoramic texture");
    if (scene.terrain.mesh.has_uv0()) {
        for (size_t t = 0; t < scene.terrain.mesh.triangles.size(); ++t) {
            const auto& tri = scene.terrain.mesh.triangles[t];
            double umin = 2.0, umax = 0.0;
            for (int k = 0; k < 3; ++k) {
                umin = std::min(umin, scene.terrain.mesh.uv0[tri[k]].x);
                umax = std::max(umax, scene.terrain.mesh.uv0[tri[k]].x);
            }
            if (umax - umin > 0.5) {
                items.push_back("terrain: triangle " + std::to_string(t) +
                                " spans the panoramic seam (u-span > 0.5)");
                break;
            }
        }
    }
    const bool any_bottom = scene.terrain.mesh.has_bottom_flags() &&
                            std::any_of(scene.terrain.mesh.bottom_flag.begin(),
                                        scene.terrain.mesh.bottom_flag.end(),
                                        [](uint8_t f) { return f != 0; });
    if (any_bottom) {
        if (!scene.terrain.mesh.has_uv1()) items.push_back("terrain: bottom flagged but uv1 missing");
        if (scene.terrain.bottom_texture.empty())
            items.push_back("terrain: bottom flagged but bottom texture missing");
    }
    if (scene.sky.dome.triangles.empty()) items.push_back("sky: empty dome");
    if (scene.sky.texture.empty()) items.push_back("sky: missing texture");
    for (size_t i = 0; i < scene.assets.size(); ++i) {
        const auto& asset = scene.assets[i];
        const std::string name = asset.name.empty() ? "asset " + std::to_string(i) : asset.name;
        if (asset.triangles.empty()) items.push_back(name + ": empty geometry");
        if (!finite(asset.anchor)) items.push_back(name + ": non-finite anchor");
        if (asset.kind == arrange::ProxyAsset::Kind::billboard) {
            if (asset.texture.rgba.empty()) items.push_back(name + ": missing texture");
        } else {
            if (asset.groups.empty()) items.push_back(name + ": template without material groups");
            for (const auto& group : asset.groups)
                if (group.texture.rgba.empty())
                    items.push_back(name + ": group " + group.name + " missing texture");
        }
    }
    for (const EffectData& fx : scene.effects) {
        if (fx.effect != "cloud" && fx.effect != "rain" && fx.effect != "ripple")
            items.push_back("effect: unknown kind " + fx.effect);
        if (fx.textures.empty()) items.push_back("effect " + fx.effect + ": no textures");
        for (const auto& [role, img] : fx.textures)
            if (img.empty()) items.push_back("effect " + fx.effect + ": empty texture " + role);
        if (!std::isfinite(fx.flow_dir_x) || !std::isfinite(fx.flow_dir_y) ||
            !std::isfinite(fx.speed))
            items.push_back("effect " + fx.effect + ": non-finite parameters");
    }
    if (!finite(scene.origin)) items.push_back("origin: non-finite");
}

}  // namespace

SceneGraph assemble_scene(TerrainNode terrain, SkyNode sky,
                          std::vector<arrange::ProxyAsset> assets, std::vector<EffectData> effects,
                          std::vector<AudioTrack> audio_tracks, audio::AudioClip ambient,
                          Vec3 origin) {
    SceneGraph scene;
    scene.terrain = std::move(terrain);
    scene.sky = std::move(sky);
    scene.assets = std::move(assets);
    scene.effects = std::move(effects);
    scene.audio_tracks = std::move(audio_tracks);
    scene.ambient = std::move(ambient);
    scene.origin = origin;

    std::vector<std::string> items;
    validate_scene(scene, items);
    if (!items.empty()) throw ValidationFailed(std::move(items));
    scene.assembled = true;
    return scene;
}

BudgetReport budget_report(const SceneGraph& scene, size_t budget) {
    if (!scene.assembled) throw UnassembledScene();
    BudgetReport report;
    report.budget = budget;

    auto texture_bytes = [](const Image& img) {
        return static_cast<size_t>(img.width) * img.height * img.channels;
    };

    BudgetReport::NodeCount terrain{"terrain", scene.terrain.mesh.triangles.size(),
                                    texture_bytes(scene.terrain.pano_texture) +
                                        texture_bytes(scene.terrain.bottom_texture)};
    report.nodes.push_back(terrain);
    report.nodes.push_back({"sky", scene.sky.dome.triangles.size(),
                            texture_bytes(scene.sky.texture)});
    for (const auto& asset : scene.assets) {
        BudgetReport::NodeCount node;
        node.name = asset.name;
        node.triangles = asset.triangles.size();
        if (asset.kind == arrange::ProxyAsset::Kind::billboard) {
            node.texture_bytes = texture_bytes(asset.texture.rgba);
        } else {
            for (const auto& group : asset.groups) node.texture_bytes += texture_bytes(group.texture.rgba);
        }
        report.nodes.push_back(node);
    }
    BudgetReport::NodeCount extras{"shadow+effects", 0, texture_bytes(scene.shadow_map)};
    for (const EffectData& fx : scene.effects)
        for (const auto& [role, img] : fx.textures) extras.texture_bytes += texture_bytes(img);
    report.nodes.push_back(extras);

    for (const auto& node : report.nodes) {
        report.primitive_count += node.triangles;
        report.texture_bytes += node.texture_bytes;
    }
    report.pass = report.primitive_count <= budget;
    return report;
}

namespace {

// Extracts a triangle subset into a compact primitive, casting to float32.
gltf::Primitive build_primitive(const TerrainMesh& mesh, const std::vector<int>& tris,
                                bool with_uv1, int material) {
    gltf::Primitive prim;
    prim.material = material;
    std::map<int, uint32_t> remap;
    for (int t : tris) {
        for (int k = 0; k < 3; ++k) {
            const int v = mesh.triangles[t][k];
            auto [it, inserted] = remap.try_emplace(v, static_cast<uint32_t>(remap.size()));
            if (inserted) {
                prim.positions.push_back(static_cast<float>(mesh.vertices[v].x));
                prim.positions.push_back(static_cast<float>(mesh.vertices[v].y));
                prim.positions.push_back(static_cast<float>(mesh.vertices[v].z));
                if (mesh.has_uv0()) {
                    prim.uv0.push_back(static_cast<float>(mesh.uv0[v].x));
                    // glTF v runs top-down; panoramic v runs bottom-up
                    prim.uv0.push_back(static_cast<float>(1.0 - mesh.uv0[v].y));
                }
                if (with_uv1 && mesh.has_uv1()) {
                    prim.uv1.push_back(static_cast<float>(mesh.uv1[v].x));
                    prim.uv1.push_back(static_cast<float>(mesh.uv1[v].y));
                }
            }
            prim.indices.push_back(remap.at(v));
        }
    }
    return prim;
}

gltf::Primitive asset_primitive(const arrange::ProxyAsset& asset, int tri_begin, int tri_end,
                                int material) {
    gltf::Primitive prim;
    prim.material = material;
    std::map<int, uint32_t> remap;
    for (int t = tri_begin; t < tri_end; ++t) {
        for (int k = 0; k < 3; ++k) {
            const int v = asset.triangles[t][k];
            auto [it, inserted] = remap.try_emplace(v, static_cast<uint32_t>(remap.size()));
            if (inserted) {
                prim.positions.push_back(static_cast<float>(asset.vertices[v].x));
                prim.positions.push_back(static_cast<float>(asset.vertices[v].y));
                prim.positions.push_back(static_cast<float>(asset.vertices[v].z));
                const Vec2 uv = v < static_cast<int>(asset.uvs.size()) ? asset.uvs[v] : Vec2{0, 0};
                prim.uv0.push_back(static_cast<float>(uv.x));
                prim.uv0.push_back(static_cast<float>(uv.y));
            }
            prim.indices.push_back(remap.at(v));
        }
    }
    return prim;
}

}  // namespace

std::vector<std::string> export_scene(const SceneGraph& scene, const std::string& out_dir) {
    if (!scene.assembled) throw UnassembledScene();
    fs::create_directories(out_dir);
    std::vector<std::string> written;
    auto emit_png = [&](const std::string& name, const Image& img, int bits = 8) {
        save_png((fs::path(out_dir) / name).string(), img, bits);
        written.push_back(name);
    };

    gltf::Document doc;

    emit_png("terrain.png", scene.terrain.pano_texture);
    doc.images.push_back("terrain.png");
    gltf::MaterialDef terrain_mat;
    terrain_mat.name = "terrain";
    terrain_mat.base_color_texture = 0;
    terrain_mat.alpha_mode = "BLEND";
    terrain_mat.double_sided = true;
    doc.materials.push_back(terrain_mat);

    const bool has_bottom = !scene.terrain.bottom_texture.empty() &&
                            scene.terrain.mesh.has_bottom_flags();
    int bottom_material = -1;
    if (has_bottom) {
        emit_png("terrain_bottom.png", scene.terrain.bottom_texture);
        doc.images.push_back("terrain_bottom.png");
        gltf::MaterialDef mat;
        mat.name = "terrain_bottom";
        mat.base_color_texture = 1;
        mat.texcoord = 1;
        mat.texture_transform = true;
        doc.materials.push_back(mat);
        bottom_material = static_cast<int>(doc.materials.size()) - 1;
    }

    emit_png("sky.png", scene.sky.texture);
    doc.images.push_back("sky.png");
    gltf::MaterialDef sky_mat;
    sky_mat.name = "sky";
    sky_mat.base_color_texture = static_cast<int>(doc.images.size()) - 1;
    sky_mat.double_sided = true;
    doc.materials.push_back(sky_mat);
    const int sky_material = static_cast<int>(doc.materials.size()) - 1;

    // terrain mesh: bottom-flagged triangles split into their own primitive
    std::vector<int> top_tris, bottom_tris;
    for (size_t t = 0; t < scene.terrain.mesh.triangles.size(); ++t) {
        if (has_bottom && scene.terrain.mesh.bottom_flag[t]) bottom_tris.push_back(static_cast<int>(t));
        else top_tris.push_back(static_cast<int>(t));
    }
    gltf::MeshDef terrain_mesh;
    terrain_mesh.name = "terrain";
    if (!top_tris.empty())
        terrain_mesh.primitives.push_back(build_primitive(scene.terrain.mesh, top_tris, false, 0));
    if (!bottom_tris.empty())
        terrain_mesh.primitives.push_back(
            build_primitive(scene.terrain.mesh, bottom_tris, true, bottom_material));
    doc.meshes.push_back(std::move(terrain_mesh));
    doc.nodes.push_back({"terrain", 0, {0, 0, 0}, {0, 0, 0, 1}});

    gltf::MeshDef sky_mesh;
    sky_mesh.name = "sky";
    std::vector<int> all_sky(scene.sky.dome.triangles.size());
    for (size_t i = 0; i < all_sky.size(); ++i) all_sky[i] = static_cast<int>(i);
    sky_mesh.primitives.push_back(build_primitive(scene.sky.dome, all_sky, false, sky_material));
    doc.meshes.push_back(std::move(sky_mesh));
    doc.nodes.push_back({"sky", 1, {0, 0, 0}, {0, 0, 0, 1}});

    for (size_t i = 0; i < scene.assets.size(); ++i) {
        const auto& asset = scene.assets[i];
        gltf::MeshDef mesh;
        mesh.name = asset.name;
        if (asset.kind == arrange::ProxyAsset::Kind::billboard) {
            const std::string tex_name = "asset_" + std::to_string(i) + ".png";
            emit_png(tex_name, asset.texture.rgba);
            doc.images.push_back(tex_name);
            gltf::MaterialDef mat;
            mat.name = asset.name;
            mat.base_color_texture = static_cast<int>(doc.images.size()) - 1;
            mat.alpha_mode = "BLEND";
            mat.double_sided = true;
            doc.materials.push_back(mat);
            mesh.primitives.push_back(asset_primitive(asset, 0, asset.triangle_count(),
                                                      static_cast<int>(doc.materials.size()) - 1));
        } else {
            for (const auto& group : asset.groups) {
                const std::string tex_name =
                    "asset_" + std::to_string(i) + "_" + group.name + ".png";
                emit_png(tex_name, group.texture.rgba);
                doc.images.push_back(tex_name);
                gltf::MaterialDef mat;
                mat.name = asset.name + "_" + group.name;
                mat.base_color_texture = static_cast<int>(doc.images.size()) - 1;
                mat.alpha_mode = "BLEND";
                mat.double_sided = true;
                doc.materials.push_back(mat);
                mesh.primitives.push_back(asset_primitive(asset, group.tri_begin, group.tri_end,
                                                          static_cast<int>(doc.materials.size()) - 1));
            }
        }
        doc.meshes.push_back(std::move(mesh));
        doc.nodes.push_back({asset.name, static_cast<int>(doc.meshes.size()) - 1,
                             {asset.anchor.x, asset.anchor.y, asset.anchor.z},
                             {0, 0, 0, 1}});
    }

    gltf::write_gltf((fs::path(out_dir) / "world.gltf").string(), doc);
    written.push_back("world.gltf");
    written.push_back("world.bin");

    if (!scene.shadow_map.empty()) emit_png("shadow.png", scene.shadow_map, 16);

    nlohmann::json manifest;
    manifest["schema_version"] = 1;
    manifest["world"] = "world.gltf";
    manifest["origin"] = {scene.origin.x, scene.origin.y, scene.origin.z};
    manifest["sun_dir"] = {scene.sun_dir.x, scene.sun_dir.y, scene.sun_dir.z};
    manifest["shadow"] = {{"map", scene.shadow_map.empty() ? "" : "shadow.png"},
                          {"floor", scene.shadow_floor},
                          {"uv_set", "TEXCOORD_0"}};

    nlohmann::json effects = nlohmann::json::array();
    for (const EffectData& fx : scene.effects) {
        nlohmann::json e;
        e["effect"] = fx.effect;
        nlohmann::json textures = nlohmann::json::object();
        for (const auto& [role, img] : fx.textures) {
            const std::string name = "fx_" + fx.effect + "_" + role + ".png";
            emit_png(name, img);
            textures[role] = name;
        }
        e["textures"] = textures;
        e["params"] = {{"flow_dir", {fx.flow_dir_x, fx.flow_dir_y}},
                       {"speed", fx.speed},
                       {"layer_speeds", fx.layer_speeds}};
        e["target"] = fx.target;
        effects.push_back(e);
    }
    manifest["effects"] = effects;

    nlohmann::json audio = nlohmann::json::object();
    if (!scene.ambient.samples.empty()) {
        audio::save_wav_float32((fs::path(out_dir) / "ambient.wav").string(), scene.ambient);
        written.push_back("ambient.wav");
        audio["mixed"] = "ambient.wav";
    }
    nlohmann::json tracks = nlohmann::json::array();
    for (const AudioTrack& track : scene.audio_tracks)
        tracks.push_back({{"id", track.id}, {"volume", track.volume}, {"tags", track.tags}});
    audio["tracks"] = tracks;
    manifest["audio"] = audio;

    const BudgetReport report = budget_report(scene);
    nlohmann::json budget;
    budget["primitive_count"] = report.primitive_count;
    budget["texture_bytes"] = report.texture_bytes;
    budget["budget"] = report.budget;
    budget["pass"] = report.pass;
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& node : report.nodes)
        nodes.push_back({{"name", node.name},
                         {"triangles", node.triangles},
                         {"texture_bytes", node.texture_bytes}});
    budget["nodes"] = nodes;
    manifest["budget"] = budget;

    {
        std::ofstream f(fs::path(out_dir) / "scene.manifest.json");
        if (!f) throw gltf::IoError("cannot write scene manifest");
        f << manifest.dump(2) << "\n";
    }
    written.push_back("scene.manifest.json");
    std::sort(written.begin(), written.end());
    return written;
}

}  // namespace pw::scene
