#include "proxyworld/erp_render.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pw::erp {

namespace {

void check_degenerates(const TerrainMesh& mesh, int max_degenerate) {
    if (mesh.triangles.empty()) throw DegenerateMesh("mesh has no triangles");
    int degenerate = 0;
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t)
        if (mesh.triangle_area(t) <= 1e-12) ++degenerate;
    if (degenerate > max_degenerate)
        throw DegenerateMesh("mesh has " + std::to_string(degenerate) + " zero-area triangles");
}

template <typename NearestFn>
ErpImage render_impl(Vec3 origin, int height, bool threaded, NearestFn&& nearest) {
    const int width = 2 * height;
    ErpImage depth(width, height, 1, kSkyDepth);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 4) if (threaded)
#else
    (void)threaded;
#endif
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Vec2 uv = pixel_center_uv(x, y, width, height);
            const Ray ray{origin, uv_to_dir(uv)};
            const RayHit hit = nearest(ray);
            if (hit.valid()) depth.at(x, y, 0) = static_cast<float>(hit.t);
        }
    }
    return depth;
}

}  // namespace

ErpImage render_depth(const TerrainMesh& mesh, const TriBvh& bvh, Vec3 origin, int height,
                      int max_degenerate) {
    check_degenerates(mesh, max_degenerate);
    return render_impl(origin, height, true, [&](const Ray& r) { return bvh.nearest(r); });
}

ErpImage render_depth_serial(const TerrainMesh& mesh, Vec3 origin, int height,
                             int max_degenerate) {
    check_degenerates(mesh, max_degenerate);
    const TriBvh bvh(mesh.vertices, mesh.triangles);
    return render_impl(origin, height, false,
                       [&](const Ray& r) { return bvh.nearest_brute(r); });
}

}  // namespace pw::erp
