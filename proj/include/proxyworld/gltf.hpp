#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pw::gltf {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Primitive {
    std::vector<float> positions;  // xyz triplets
    std::vector<float> uv0;        // st pairs, optional
    std::vector<float> uv1;        // optional second set
    std::vector<uint32_t> indices;
    int material = -1;

    size_t triangle_count() const { return indices.size() / 3; }
};

struct MeshDef {
    std::string name;
    std::vector<Primitive> primitives;
};

struct NodeDef {
    std::string name;
    int mesh = -1;
    std::array<double, 3> translation{0, 0, 0};
    std::array<double, 4> rotation{0, 0, 0, 1};  // xyzw
};

struct MaterialDef {
    std::string name;
    int base_color_texture = -1;  // image index; -1 = untextured
    int texcoord = 0;
    std::array<double, 4> base_color{1, 1, 1, 1};
    std::string alpha_mode = "OPAQUE";  // OPAQUE | MASK | BLEND
    bool double_sided = false;
    bool unlit = true;
    bool texture_transform = false;  // identity KHR_texture_transform carrier
};

struct Document {
    std::vector<MeshDef> meshes;
    std::vector<NodeDef> nodes;
    std::vector<MaterialDef> materials;
    std::vector<std::string> images;  // uris relative to the .gltf
};

// Writes <path> plus a sibling .bin buffer. Every material carries
// KHR_materials_unlit; samplers wrap horizontally (panoramic textures) and
// clamp vertically.
void write_gltf(const std::string& path, const Document& doc);

// Reads back the subset this project writes (float32 positions/uvs, indexed
// triangles); enough for re-import verification.
Document read_gltf(const std::string& path);

size_t document_triangle_count(const Document& doc);

// Independent structural validator: parses the JSON and binary from disk and
// checks glTF 2.0 core constraints (asset version, index ranges, accessor
// bounds and alignment, POSITION min/max, declared extensions, image files,
// index values vs. vertex counts). Returns human-readable errors; empty
// means the file validates.
std::vector<std::string> validate_gltf(const std::string& path);

// True when every material in the file declares KHR_materials_unlit.
bool all_materials_unlit(const std::string& path);

}  // namespace pw::gltf
