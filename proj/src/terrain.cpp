#include "proxyworld/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "json.hpp"
#include "proxyworld/gltf.hpp"
#include "proxyworld/imageops.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pw::terrain {

std::vector<TerrainTemplate> load_template_library(const std::string& index_json_path) {
    std::ifstream f(index_json_path);
    if (!f) throw std::runtime_error("terrain library: cannot open " + index_json_path);
    nlohmann::json j = nlohmann::json::parse(f);
    std::vector<TerrainTemplate> out;
    for (const auto& e : j.at("templates")) {
        TerrainTemplate t;
        t.id = e.at("id").get<std::string>();
        t.mesh_path = e.at("mesh").get<std::string>();
        t.caption = e.at("caption").get<std::string>();
        for (const auto& tag : e.at("tags")) t.tags.insert(tag.get<std::string>());
        t.water_present = e.value("water_present", false);
        t.lake_level = e.value("lake_level", 0.0);
        if (t.caption.empty())
            throw std::runtime_error("terrain library: empty caption for " + t.id);
        out.push_back(std::move(t));
    }
    std::map<std::string, int> seen;
    for (const auto& t : out)
        if (++seen[t.id] > 1) throw std::runtime_error("terrain library: duplicate id " + t.id);
    return out;
}

TerrainMesh load_template_mesh(const TerrainTemplate& tmpl, const std::string& library_dir) {
    const std::string path = library_dir + "/" + tmpl.mesh_path;
    TerrainMesh mesh;
    if (path.size() > 5 && path.substr(path.size() - 5) == ".gltf") {
        const gltf::Document doc = gltf::read_gltf(path);
        for (const auto& def : doc.meshes) {
            for (const auto& prim : def.primitives) {
                const int base = static_cast<int>(mesh.vertices.size());
                for (size_t i = 0; i + 2 < prim.positions.size(); i += 3)
                    mesh.vertices.push_back({prim.positions[i], prim.positions[i + 1],
                                             prim.positions[i + 2]});
                for (size_t i = 0; i + 2 < prim.indices.size(); i += 3)
                    mesh.triangles.push_back({base + static_cast<int>(prim.indices[i]),
                                              base + static_cast<int>(prim.indices[i + 1]),
                                              base + static_cast<int>(prim.indices[i + 2])});
            }
        }
        drop_degenerate_triangles(mesh);
    } else {
        mesh = load_obj(path);
    }
    mesh.region_tags.assign(mesh.triangles.size(), Region::ground);
    if (tmpl.water_present) {
        for (size_t t = 0; t < mesh.triangles.size(); ++t) {
            bool at_level = true;
            for (int k = 0; k < 3; ++k)
                if (std::abs(mesh.vertices[mesh.triangles[t][k]].y - tmpl.lake_level) > 1e-6)
                    at_level = false;
            if (at_level) mesh.region_tags[t] = Region::water;
        }
    }
    return mesh;
}

const TerrainTemplate& retrieve_template(const std::vector<TerrainTemplate>& library,
                                         const std::set<std::string>& query) {
    if (library.empty()) throw EmptyLibrary();
    const TerrainTemplate* best = nullptr;
    double best_score = -1.0;
    for (const TerrainTemplate& t : library) {
        double score = 0.0;
        if (!query.empty()) {
            int overlap = 0;
            for (const std::string& q : query) overlap += t.tags.count(q) ? 1 : 0;
            score = static_cast<double>(overlap) / static_cast<double>(query.size());
        }
        if (score > best_score || (score == best_score && best && t.id < best->id)) {
            best = &t;
            best_score = score;
        }
    }
    return *best;
}

TerrainMesh assign_panoramic_uv(TerrainMesh mesh, Vec3 origin) {
    mesh.uv0.resize(mesh.vertices.size());
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Vec3 d = mesh.vertices[i] - origin;
        if (length(d) < 1e-6)
            throw VertexAtOrigin("vertex " + std::to_string(i) + " coincides with the origin");
        mesh.uv0[i] = erp::dir_to_uv(d);
    }
    return mesh;
}

TerrainMesh fix_seam_uvs(TerrainMesh mesh) {
    // (vertex, needs +1 offset) -> vertex index; offset corners of seam
    // triangles get duplicated vertices so non-seam neighbors keep theirs.
    const bool had_uv1 = mesh.has_uv1();
    std::map<int, int> remap;
    auto resolve = [&](int v) {
        auto [it, inserted] = remap.try_emplace(v, -1);
        if (inserted) {
            mesh.vertices.push_back(mesh.vertices[v]);
            mesh.uv0.push_back({mesh.uv0[v].x + 1.0, mesh.uv0[v].y});
            if (had_uv1) mesh.uv1.push_back(mesh.uv1[v]);
            it->second = static_cast<int>(mesh.vertices.size()) - 1;
        }
        return it->second;
    };

    for (auto& tri : mesh.triangles) {
        double umin = 2.0, umax = -1.0;
        for (int k = 0; k < 3; ++k) {
            umin = std::min(umin, mesh.uv0[tri[k]].x);
            umax = std::max(umax, mesh.uv0[tri[k]].x);
        }
        if (umax - umin <= 0.5) continue;
        for (int k = 0; k < 3; ++k)
            if (mesh.uv0[tri[k]].x < 0.5) tri[k] = resolve(tri[k]);
    }
    return mesh;
}

TerrainMesh partition_bottom(TerrainMesh mesh, Vec3 origin, double pitch_threshold_deg) {
    if (!mesh.has_uv0())
        throw std::runtime_error("partition_bottom: panoramic uv0 must be assigned first");
    const double threshold = -pitch_threshold_deg * kPi / 180.0;
    mesh.bottom_flag.assign(mesh.triangles.size(), 0);
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Vec3 d = mesh.triangle_centroid(static_cast<int>(t)) - origin;
        const double len = length(d);
        if (len < 1e-12) continue;
        const double elevation = std::asin(std::clamp(d.y / len, -1.0, 1.0));
        if (elevation < threshold) mesh.bottom_flag[t] = 1;
    }

    const BottomExtent ext = bottom_extent(mesh);
    mesh.uv1.assign(mesh.vertices.size(), Vec2{0.0, 0.0});
    if (ext.side > 0.0) {
        for (size_t t = 0; t < mesh.triangles.size(); ++t) {
            if (!mesh.bottom_flag[t]) continue;
            for (int k = 0; k < 3; ++k) {
                const int vi = mesh.triangles[t][k];
                const Vec3& v = mesh.vertices[vi];
                mesh.uv1[vi] = {(v.x - ext.min_x) / ext.side, (v.z - ext.min_z) / ext.side};
            }
        }
    }
    return mesh;
}

BottomExtent bottom_extent(const TerrainMesh& mesh) {
    BottomExtent e;
    if (!mesh.has_bottom_flags()) return e;
    double min_x = 0, min_z = 0, max_x = 0, max_z = 0;
    bool any = false;
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (!mesh.bottom_flag[t]) continue;
        for (int k = 0; k < 3; ++k) {
            const Vec3& v = mesh.vertices[mesh.triangles[t][k]];
            if (!any) {
                min_x = max_x = v.x;
                min_z = max_z = v.z;
                any = true;
            } else {
                min_x = std::min(min_x, v.x);
                max_x = std::max(max_x, v.x);
                min_z = std::min(min_z, v.z);
                max_z = std::max(max_z, v.z);
            }
        }
    }
    if (any) {
        e.min_x = min_x;
        e.min_z = min_z;
        e.side = std::max(max_x - min_x, max_z - min_z);
    }
    return e;
}

ErpImage render_mask(const TerrainMesh& mesh, const TriBvh& bvh, Vec3 origin, int height,
                     MaskSelector selector) {
    if (selector == MaskSelector::water && !mesh.has_region_tags()) throw MissingTags();
    const int width = 2 * height;
    ErpImage mask(width, height, 1, 0.0f);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 4)
#endif
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Ray ray{origin, erp::uv_to_dir(erp::pixel_center_uv(x, y, width, height))};
            const RayHit hit = bvh.nearest(ray);
            if (!hit.valid()) continue;
            if (selector == MaskSelector::terrain ||
                mesh.region_tags[hit.triangle] == Region::water)
                mask.at(x, y, 0) = 1.0f;
        }
    }
    return mask;
}

TerrainMesh apply_displacement(TerrainMesh mesh, const Image& height_map, int highpass_radius,
                               double scale) {
    if (!mesh.has_bottom_flags() || !mesh.has_uv1())
        throw std::runtime_error("apply_displacement: bottom partition not computed");
    const Image blurred = box_blur(height_map, highpass_radius, /*wrap_vertical=*/true);

    std::vector<uint8_t> is_bottom_vertex(mesh.vertices.size(), 0);
    for (size_t t = 0; t < mesh.triangles.size(); ++t)
        if (mesh.bottom_flag[t])
            for (int k = 0; k < 3; ++k) is_bottom_vertex[mesh.triangles[t][k]] = 1;

    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        if (!is_bottom_vertex[i]) continue;
        const Vec2 uv = mesh.uv1[i];
        // uv1 y grows with world z; raster rows are sampled top-down, so flip.
        const double h = sample_bilinear(height_map, uv.x, 1.0 - uv.y, 0);
        const double base = sample_bilinear(blurred, uv.x, 1.0 - uv.y, 0);
        mesh.vertices[i].y += scale * (h - base);
    }
    return mesh;
}

ErpImage rasterize_uv0(const TerrainMesh& mesh, const Image& texture, int height,
                       float background) {
    const int width = 2 * height;
    ErpImage out(width, height, 1, background);
    if (!mesh.has_uv0()) throw std::runtime_error("rasterize_uv0: uv0 not assigned");

    for (const auto& tri : mesh.triangles) {
        // Triangle in extended ERP pixel space; u may run past 1 after seam
        // repair, so x spans [0, 2*width).
        Vec2 p[3];
        for (int k = 0; k < 3; ++k)
            p[k] = {mesh.uv0[tri[k]].x * width, (1.0 - mesh.uv0[tri[k]].y) * height};
        double xmin = std::min({p[0].x, p[1].x, p[2].x});
        double xmax = std::max({p[0].x, p[1].x, p[2].x});
        double ymin = std::min({p[0].y, p[1].y, p[2].y});
        double ymax = std::max({p[0].y, p[1].y, p[2].y});
        const double area =
            (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
        if (area == 0.0) continue;
        for (int y = std::max(0, static_cast<int>(std::floor(ymin)));
             y <= std::min(height - 1, static_cast<int>(std::ceil(ymax))); ++y) {
            for (int xi = static_cast<int>(std::floor(xmin));
                 xi <= static_cast<int>(std::ceil(xmax)); ++xi) {
                const double px = xi + 0.5;
                const double py = y + 0.5;
                const double w0 = ((p[1].x - px) * (p[2].y - py) - (p[2].x - px) * (p[1].y - py)) / area;
                const double w1 = ((p[2].x - px) * (p[0].y - py) - (p[0].x - px) * (p[2].y - py)) / area;
                const double w2 = 1.0 - w0 - w1;
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
                const double u =
                    (w0 * mesh.uv0[tri[0]].x + w1 * mesh.uv0[tri[1]].x + w2 * mesh.uv0[tri[2]].x);
                const double v =
                    (w0 * mesh.uv0[tri[0]].y + w1 * mesh.uv0[tri[1]].y + w2 * mesh.uv0[tri[2]].y);
                const int x = ((xi % width) + width) % width;
                out.at(x, y, 0) = sample_nearest(texture, u - std::floor(u), v, 0);
            }
        }
    }
    return out;
}

}  // namespace pw::terrain
