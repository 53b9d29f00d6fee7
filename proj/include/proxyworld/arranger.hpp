#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxyworld/agents.hpp"
#include "proxyworld/matting.hpp"
#include "proxyworld/mesh.hpp"
#include "proxyworld/raycast.hpp"

namespace pw::arrange {

struct NoHit : std::runtime_error {
    NoHit() : std::runtime_error("backprojection ray hit the sky") {}
};
struct MaskedRegion : std::runtime_error {
    MaskedRegion() : std::runtime_error("pixel lies in a masked (unsuitable) region") {}
};
struct WaterHit : std::runtime_error {
    WaterHit() : std::runtime_error("backprojection hit a water-tagged triangle") {}
};
struct TemplateMissing : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Labeled placement grid over the base-world view. suitability_mask: 1 marks
// unsuitable pixels (water, sky); cells covered >= mask_fraction are excluded.
struct GridSpec {
    int cols = 12;
    int rows = 6;
    int image_w = 0;
    int image_h = 0;
    Image suitability_mask;  // 1 channel, image dims
    double mask_fraction = 0.8;
};

struct CellRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open

    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
    bool contains(const CellRect& inner) const {
        return inner.x0 >= x0 && inner.x1 <= x1 && inner.y0 >= y0 && inner.y1 <= y1;
    }
};

// Column letters A..Z,AA.. plus 1-based row: "D2" is column 3, row 1.
std::string cell_label(int col, int row);
bool parse_label(const std::string& label, int cols, int rows, int& col, int& row);
CellRect cell_rect(const GridSpec& spec, int col, int row);

// 1 per cell when >= mask_fraction of its pixels are masked.
std::vector<uint8_t> excluded_cells(const GridSpec& spec);

// Grid lines and labels burned in, excluded cells dimmed.
Image annotate_grid(const Image& base, const GridSpec& spec);

struct Lineage {
    std::string coarse_cell;
    std::string fine_cell;
    CellRect coarse_rect;
    CellRect fine_rect;
    std::string transcript;
};

// Coarse-to-fine proposals: the agent picks coarse cells over the annotated
// view, each pick is subdivided fine_div x fine_div and re-offered. An
// invalid or excluded reply gets one re-prompt, then the slot is rejected.
std::vector<Lineage> propose_placements(agent::WorldAgent& agent, const Image& base,
                                        const GridSpec& spec, const std::string& context,
                                        int count_min, int count_max, int fine_div,
                                        std::vector<std::string>* warnings = nullptr);

struct PixelPos {
    int x = 0;
    int y = 0;
};

// Seeded uniform sample over the cell's pixel rectangle.
PixelPos sample_point(const CellRect& bounds, uint64_t seed);

struct BackprojectResult {
    Vec3 world_point;
    double distance = 0.0;
    int triangle = -1;
};

// Casts the pixel-center ray against the terrain; validation rejects masked
// pixels, sky rays and water hits via the typed errors above.
BackprojectResult backproject(PixelPos pixel, Vec3 origin, const TerrainMesh& terrain,
                              const TriBvh& bvh, const Image& suitability_mask);

enum class Band { foreground, midground, out_of_band };

struct BandRanges {
    double fg_min = 2.0, fg_max = 10.0;
    double mg_min = 20.0, mg_max = 50.0;
};

Band classify_band(double distance, const BandRanges& ranges = {});
const char* band_name(Band b);

struct TemplateGroup {
    std::string name;
    int tri_begin = 0;
    int tri_end = 0;        // half-open triangle range in the template mesh
    std::string alpha_file; // per-group alpha raster reused as M_c
};

struct AssetTemplate {
    std::string id;
    std::string caption;
    std::string mesh_path;
    std::set<std::string> tags;
    double default_height = 4.0;
    std::vector<TemplateGroup> material_groups;  // must partition the triangles
};

std::vector<AssetTemplate> load_asset_library(const std::string& index_json_path);

// Template mesh with TEXCOORD_0 loaded from a library glTF.
TerrainMesh load_template_mesh_gltf(const std::string& path);

// Agent choice validated against the library; an unknown id falls back to the
// keyword scorer and the audit notes it.
const AssetTemplate& select_template(agent::WorldAgent& agent,
                                     const std::vector<AssetTemplate>& library,
                                     const std::string& scene_context,
                                     std::string* audit_note = nullptr);

std::string design_prompt(agent::WorldAgent& agent, const std::string& scene_context,
                          const AssetTemplate& tmpl);

struct PlacementRecord {
    std::string coarse_cell;
    std::string fine_cell;
    CellRect coarse_rect;
    CellRect fine_rect;
    PixelPos pixel;
    Vec3 world_point;
    double distance = 0.0;
    Band band = Band::out_of_band;
    std::string template_id;  // empty for midground billboards
    std::string asset_prompt;
    bool valid = false;
    std::string status;  // "valid" or "rejected:<reason>"
    std::string transcript;
};

std::string record_to_jsonl(const PlacementRecord& r);
void write_audit_log(const std::string& path, const std::vector<PlacementRecord>& records);

// Per-category world height for billboards, looked up by prompt keywords.
struct SizeTable {
    std::map<std::string, double> heights{{"tree", 6.0},  {"pine", 7.0}, {"bush", 1.5},
                                          {"rock", 2.0},  {"boulder", 2.5}, {"cactus", 3.0},
                                          {"flower", 0.8}};
    double default_height = 4.0;

    double lookup(const std::string& prompt) const;
};

struct ProxyAsset {
    enum class Kind { billboard, alpha_card_template };

    Kind kind = Kind::billboard;
    std::string name;
    // geometry local to the anchor; node translation places it in the world
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<Vec2> uvs;
    Vec3 anchor;
    double yaw = 0.0;  // radians, toward the origin (billboards)
    double height = 0.0, width = 0.0;
    gen::RgbaTexture texture;  // billboard texture
    std::string template_id;
    struct Group {
        std::string name;
        int tri_begin = 0, tri_end = 0;
        gen::RgbaTexture texture;
    };
    std::vector<Group> groups;  // template kind

    int triangle_count() const { return static_cast<int>(triangles.size()); }
};

// Midground: a camera-facing quad grounded at the anchor, height from the
// size table, width = height * texture aspect. Foreground: the template mesh
// translated to the anchor with per-group textures.
ProxyAsset instantiate_proxy(const PlacementRecord& record, const gen::RgbaTexture& texture,
                             Vec3 origin, const SizeTable& sizes,
                             const AssetTemplate* tmpl = nullptr,
                             const TerrainMesh* template_mesh = nullptr);

// Full arrangement loop: propose -> sample -> backproject -> band -> spacing
// -> template/prompt. Sequential by contract (spacing is order-dependent).
struct ArrangementParams {
    GridSpec grid;
    int count_min = 5;
    int count_max = 10;
    int fine_div = 4;
    BandRanges bands;
    double min_spacing = 1.5;
    uint64_t seed = 1;
    std::string scene_context;
};

struct ArrangementResult {
    std::vector<PlacementRecord> records;
    std::vector<std::string> warnings;
    int valid_count = 0;
};

ArrangementResult arrange_assets(agent::WorldAgent& agent, const Image& base_view,
                                 const TerrainMesh& terrain, const TriBvh& bvh, Vec3 origin,
                                 const std::vector<AssetTemplate>& library,
                                 const ArrangementParams& params);

}  // namespace pw::arrange
