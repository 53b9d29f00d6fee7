#pragma once

#include <stdexcept>

#include "proxyworld/erp.hpp"
#include "proxyworld/mesh.hpp"
#include "proxyworld/raycast.hpp"

namespace pw::erp {

struct DegenerateMesh : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Panoramic depth: each pixel holds the Euclidean distance to the nearest
// triangle along the pixel-center direction; sky pixels carry kSkyDepth.
// `height` is the vertical resolution, width is 2x. OpenMP over rows.
ErpImage render_depth(const TerrainMesh& mesh, const TriBvh& bvh, Vec3 origin, int height,
                      int max_degenerate = 0);

// Serial brute-force reference, no BVH. Kept for tests and the benchmark.
ErpImage render_depth_serial(const TerrainMesh& mesh, Vec3 origin, int height,
                             int max_degenerate = 0);

}  // namespace pw::erp
