// Kernel benchmark: OpenMP-parallel paths against their serial references.
#include <chrono>
#include <cstdio>

#include "proxyworld/erp_render.hpp"
#include "proxyworld/imageops.hpp"
#include "proxyworld/scene.hpp"
#include "proxyworld/terrain.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace pw;
using Clock = std::chrono::steady_clock;

namespace {

TerrainMesh tessellated_plane(int cells, double half) {
    TerrainMesh mesh;
    const int n = cells + 1;
    for (int iz = 0; iz < n; ++iz)
        for (int ix = 0; ix < n; ++ix)
            mesh.vertices.push_back(
                {-half + 2.0 * half * ix / cells, 0.0, -half + 2.0 * half * iz / cells});
    for (int iz = 0; iz < cells; ++iz)
        for (int ix = 0; ix < cells; ++ix) {
            const int a = iz * n + ix;
            mesh.triangles.push_back({a, a + n, a + 1});
            mesh.triangles.push_back({a + 1, a + n, a + n + 1});
        }
    return mesh;
}

template <typename F>
double time_seconds(F&& fn) {
    const auto start = Clock::now();
    fn();
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void row(const char* name, double serial, double parallel) {
    std::printf("%-28s %10.3f ms %10.3f ms %8.2fx\n", name, serial * 1e3, parallel * 1e3,
                parallel > 0 ? serial / parallel : 0.0);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads: %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP disabled; both columns run the same serial code\n");
#endif
    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

    // panoramic depth: brute-force serial reference vs BVH + OpenMP
    {
        const TerrainMesh mesh = tessellated_plane(72, 300.0);
        const TriBvh bvh(mesh.vertices, mesh.triangles);
        const Vec3 origin{0, 2, 0};
        ErpImage fast_out, slow_out;
        const double slow =
            time_seconds([&] { slow_out = erp::render_depth_serial(mesh, origin, 128); });
        const double fast =
            time_seconds([&] { fast_out = erp::render_depth(mesh, bvh, origin, 128); });
        row("depth render 256x128", slow, fast);
        // the two paths must agree
        for (size_t i = 0; i < fast_out.data.size(); ++i)
            if (fast_out.data[i] != slow_out.data[i]) {
                std::printf("MISMATCH at %zu\n", i);
                return 1;
            }
    }

    // shadow bake
    {
        scene::TerrainNode terrain_node;
        terrain_node.mesh = tessellated_plane(48, 200.0);
        terrain_node.mesh = terrain::assign_panoramic_uv(std::move(terrain_node.mesh), {0, 1.7, 0});
        terrain_node.mesh = terrain::fix_seam_uvs(std::move(terrain_node.mesh));
        terrain_node.pano_texture = Image(64, 32, 4, 0.5f);
        scene::SkyNode sky;
        sky.dome = scene::make_sky_dome(500.0, 16, 8);
        sky.texture = Image(64, 32, 3, 0.6f);
        arrange::ProxyAsset quad;
        quad.kind = arrange::ProxyAsset::Kind::billboard;
        quad.name = "blocker";
        quad.anchor = {0, 0, -20};
        quad.vertices = {{-6, 4, -6}, {6, 4, -6}, {6, 4, 6}, {-6, 4, 6}};
        quad.triangles = {{0, 1, 2}, {0, 2, 3}};
        quad.uvs = {{0, 1}, {1, 1}, {1, 0}, {0, 0}};
        quad.texture.rgba = Image(16, 16, 4, 1.0f);
        const scene::SceneGraph graph = scene::assemble_scene(
            std::move(terrain_node), std::move(sky), {quad}, {}, {}, {}, {0, 1.7, 0});
        const Vec3 sun = normalized(Vec3{0.3, -0.8, 0.2});
        ErpImage fast_map, slow_map;
        const double slow =
            time_seconds([&] { slow_map = shadow::bake_shadow_serial(graph, sun, 96, 0.4); });
        const double fast =
            time_seconds([&] { fast_map = shadow::bake_shadow(graph, sun, 96, 0.4); });
        row("shadow bake 192x96", slow, fast);
        for (size_t i = 0; i < fast_map.data.size(); ++i)
            if (fast_map.data[i] != slow_map.data[i]) {
                std::printf("MISMATCH at %zu\n", i);
                return 1;
            }
    }

    // separable box blur
    {
        Image img(1024, 512, 3);
        Rng rng(1);
        for (float& v : img.data) v = static_cast<float>(rng.next_double());
        Image a, b;
        const double slow = time_seconds([&] { a = box_blur_serial(img, 6); });
        const double fast = time_seconds([&] { b = box_blur(img, 6); });
        row("box blur 1024x512 r=6", slow, fast);
        for (size_t i = 0; i < a.data.size(); ++i)
            if (a.data[i] != b.data[i]) {
                std::printf("MISMATCH at %zu\n", i);
                return 1;
            }
    }

    // binary morphology
    {
        Image mask(1024, 512, 1);
        Rng rng(2);
        for (float& v : mask.data) v = rng.next_double() < 0.5 ? 1.0f : 0.0f;
        Image a, b;
        const double slow = time_seconds([&] { a = dilate_serial(mask, 4); });
        const double fast = time_seconds([&] { b = dilate(mask, 4); });
        row("dilate 1024x512 r=4", slow, fast);
        for (size_t i = 0; i < a.data.size(); ++i)
            if (a.data[i] != b.data[i]) {
                std::printf("MISMATCH at %zu\n", i);
                return 1;
            }
    }

    std::printf("all kernel pairs agree bit-exactly\n");
    return 0;
}
