#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "proxyworld/geometry.hpp"

namespace pw {

enum class Region : uint8_t { ground = 0, water = 1 };

// Indexed triangle mesh in meters, world frame. uv0 holds panoramic UVs once
// assigned; uv1 holds top-down bottom-map UVs for bottom-flagged triangles.
struct TerrainMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<Vec2> uv0;                 // per-vertex, empty until assigned
    std::vector<Vec2> uv1;                 // per-vertex, meaningful on bottom triangles
    std::vector<Region> region_tags;       // per-triangle, empty when untagged
    std::vector<uint8_t> bottom_flag;      // per-triangle, empty until partitioned

    bool has_uv0() const { return uv0.size() == vertices.size(); }
    bool has_uv1() const { return uv1.size() == vertices.size(); }
    bool has_region_tags() const { return region_tags.size() == triangles.size(); }
    bool has_bottom_flags() const { return bottom_flag.size() == triangles.size(); }

    Vec3 triangle_centroid(int t) const {
        const auto& tri = triangles[t];
        return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) * (1.0 / 3.0);
    }
    double triangle_area(int t) const {
        const auto& tri = triangles[t];
        return 0.5 * length(cross(vertices[tri[1]] - vertices[tri[0]],
                                  vertices[tri[2]] - vertices[tri[0]]));
    }
};

// OBJ reader (v/f only). Degenerate (zero-area) triangles are dropped so the
// post-load invariant holds.
TerrainMesh load_obj(const std::string& path);
void save_obj(const std::string& path, const TerrainMesh& mesh);

// Binary intermediate carrying the full mesh state (uv sets, tags, flags);
// used between pipeline stages where OBJ would lose attributes.
void save_mesh_bin(const std::string& path, const TerrainMesh& mesh);
TerrainMesh load_mesh_bin(const std::string& path);

// Drops triangles with area below the tolerance; returns how many were removed.
int drop_degenerate_triangles(TerrainMesh& mesh, double area_tol = 1e-12);

}  // namespace pw
