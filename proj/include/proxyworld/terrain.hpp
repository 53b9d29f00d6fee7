#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxyworld/erp_render.hpp"
#include "proxyworld/mesh.hpp"

namespace pw::terrain {

struct EmptyLibrary : std::runtime_error {
    EmptyLibrary() : std::runtime_error("terrain template library is empty") {}
};
struct VertexAtOrigin : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingTags : std::runtime_error {
    MissingTags() : std::runtime_error("water mask requested but mesh has no region tags") {}
};

struct TerrainTemplate {
    std::string id;
    std::string mesh_path;
    std::string caption;
    std::set<std::string> tags;
    bool water_present = false;
    // mesh files carry no region tags; water triangles sit exactly at the
    // recorded lake level and are re-tagged on load
    double lake_level = 0.0;
};

std::vector<TerrainTemplate> load_template_library(const std::string& index_json_path);

// Loads the template's mesh (OBJ or glTF by extension) relative to the
// library dir and re-derives water tags from the lake level.
TerrainMesh load_template_mesh(const TerrainTemplate& tmpl, const std::string& library_dir);

// Keyword-overlap retrieval: argmax of |query ∩ tags| / |query|, ties broken
// by lexicographic id. An empty query scores everything 0 and yields the
// first template by id.
const TerrainTemplate& retrieve_template(const std::vector<TerrainTemplate>& library,
                                         const std::set<std::string>& query);

// uv0[i] = panoramic uv of the direction origin -> vertex i.
TerrainMesh assign_panoramic_uv(TerrainMesh mesh, Vec3 origin);

// Triangles spanning more than half the texture horizontally cross the seam:
// their low-u vertices get u += 1 (duplicating shared vertices), leaving every
// triangle's u-span < 0.5 and u values in [0,2). Sampling wraps horizontally.
TerrainMesh fix_seam_uvs(TerrainMesh mesh);

// Flags triangles whose centroid sits below -pitch_threshold_deg elevation
// from the origin and assigns uv1 as the top-down (x,z) projection normalized
// to the bottom region's bounding square.
TerrainMesh partition_bottom(TerrainMesh mesh, Vec3 origin, double pitch_threshold_deg);

// World-space extent of the bottom region's bounding square (min corner and
// side length); zero side when nothing is flagged.
struct BottomExtent {
    double min_x = 0.0;
    double min_z = 0.0;
    double side = 0.0;
};
BottomExtent bottom_extent(const TerrainMesh& mesh);

enum class MaskSelector { terrain, water };

// Binary ERP mask: terrain = ray hits anything, water = nearest hit triangle
// is water-tagged. Bit-consistent with render_depth for the same inputs.
ErpImage render_mask(const TerrainMesh& mesh, const TriBvh& bvh, Vec3 origin, int height,
                     MaskSelector selector);

// Displaces bottom vertices along +y by scale * (h - boxblur(h, radius))
// sampled at uv1. The blur wraps on both axes, so the high-pass is zero-mean
// over the map. Non-bottom vertices are untouched.
TerrainMesh apply_displacement(TerrainMesh mesh, const Image& height_map, int highpass_radius,
                               double scale);

// Rasterizes uv0-mapped triangles into an ERP image by interpolating UVs in
// extended-u space and sampling `texture` nearest-neighbor with wrap. Painted
// pixels get the sampled value; untouched pixels stay at `background`.
// Debug/verification view of the seam repair.
ErpImage rasterize_uv0(const TerrainMesh& mesh, const Image& texture, int height,
                       float background = 0.0f);

}  // namespace pw::terrain
