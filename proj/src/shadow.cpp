#include <cmath>

#include "proxyworld/erp.hpp"
#include "proxyworld/imageops.hpp"
#include "proxyworld/raycast.hpp"
#include "proxyworld/scene.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pw::shadow {

namespace {

// World-space occluder soup: terrain triangles are opaque; proxy triangles
// carry per-corner uvs and their group texture for the alpha >= 0.5 test.
struct OccluderSoup {
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> tris;
    std::vector<const Image*> tri_texture;  // nullptr = opaque
    std::vector<std::array<Vec2, 3>> uvs;
};

OccluderSoup build_soup(const scene::SceneGraph& scene) {
    OccluderSoup soup;
    const TerrainMesh& terrain = scene.terrain.mesh;
    soup.verts = terrain.vertices;
    for (const auto& tri : terrain.triangles) {
        soup.tris.push_back(tri);
        soup.tri_texture.push_back(nullptr);
        soup.uvs.push_back({Vec2{}, Vec2{}, Vec2{}});
    }
    for (const auto& asset : scene.assets) {
        const int base = static_cast<int>(soup.verts.size());
        for (const Vec3& v : asset.vertices) soup.verts.push_back(v + asset.anchor);
        for (size_t t = 0; t < asset.triangles.size(); ++t) {
            const auto& tri = asset.triangles[t];
            soup.tris.push_back({tri[0] + base, tri[1] + base, tri[2] + base});
            const Image* tex = nullptr;
            if (asset.kind == arrange::ProxyAsset::Kind::billboard) {
                tex = &asset.texture.rgba;
            } else {
                for (const auto& group : asset.groups)
                    if (static_cast<int>(t) >= group.tri_begin && static_cast<int>(t) < group.tri_end)
                        tex = &group.texture.rgba;
            }
            soup.tri_texture.push_back(tex);
            std::array<Vec2, 3> uv{};
            for (int k = 0; k < 3; ++k)
                if (tri[k] < static_cast<int>(asset.uvs.size())) uv[k] = asset.uvs[tri[k]];
            soup.uvs.push_back(uv);
        }
    }
    return soup;
}

float sample_alpha(const Image& tex, Vec2 uv) {
    const int x = std::clamp(static_cast<int>(uv.x * tex.width), 0, tex.width - 1);
    const int y = std::clamp(static_cast<int>(uv.y * tex.height), 0, tex.height - 1);
    return tex.at(x, y, tex.channels - 1);
}

ErpImage bake_impl(const scene::SceneGraph& scene, Vec3 sun_dir, int height, double s_min,
                   bool threaded) {
    if (!scene.assembled) throw scene::UnassembledScene();
    const int width = 2 * height;
    const Vec3 to_sun = normalized(sun_dir) * -1.0;

    const TriBvh terrain_bvh(scene.terrain.mesh.vertices, scene.terrain.mesh.triangles);
    const OccluderSoup soup = build_soup(scene);
    const TriBvh occluder_bvh(soup.verts, soup.tris);

    auto accept = [&](int tri, double bu, double bv) {
        const Image* tex = soup.tri_texture[tri];
        if (!tex || tex->empty()) return true;  // opaque geometry occludes unconditionally
        const auto& uv = soup.uvs[tri];
        const double w0 = 1.0 - bu - bv;
        const Vec2 p{w0 * uv[0].x + bu * uv[1].x + bv * uv[2].x,
                     w0 * uv[0].y + bu * uv[1].y + bv * uv[2].y};
        return sample_alpha(*tex, p) >= 0.5f;
    };

    ErpImage map(width, height, 1, 1.0f);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 4) if (threaded)
#else
    (void)threaded;
#endif
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Ray view{scene.origin, erp::uv_to_dir(erp::pixel_center_uv(x, y, width, height))};
            const RayHit ground = terrain_bvh.nearest(view);
            if (!ground.valid()) continue;  // sky stays lit
            const Vec3 p = view.origin + view.dir * ground.t;
            const Ray shadow_ray{p + to_sun * 1e-3, to_sun};
            const RayHit occluder = occluder_bvh.nearest_if(shadow_ray, accept);
            if (occluder.valid()) map.at(x, y, 0) = static_cast<float>(s_min);
        }
    }
    Image blurred = threaded ? box_blur(map, 1) : box_blur_serial(map, 1);
    return ErpImage(std::move(blurred));
}

}  // namespace

ErpImage bake_shadow(const scene::SceneGraph& scene, Vec3 sun_dir, int height, double s_min) {
    return bake_impl(scene, sun_dir, height, s_min, true);
}

ErpImage bake_shadow_serial(const scene::SceneGraph& scene, Vec3 sun_dir, int height,
                            double s_min) {
    return bake_impl(scene, sun_dir, height, s_min, false);
}

}  // namespace pw::shadow
