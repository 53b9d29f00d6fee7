#include "proxyworld/gltf.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "json.hpp"

namespace pw::gltf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFloat = 5126;
constexpr int kUint32 = 5125;
constexpr int kArrayBuffer = 34962;
constexpr int kElementArrayBuffer = 34963;

struct BinBuilder {
    std::vector<uint8_t> bytes;
    json buffer_views = json::array();
    json accessors = json::array();

    void align4() {
        while (bytes.size() % 4 != 0) bytes.push_back(0);
    }

    int add_accessor(const void* data, size_t byte_len, int component_type,
                     const std::string& type, size_t count, int target, const float* min3,
                     const float* max3) {
        align4();
        const size_t offset = bytes.size();
        const auto* p = static_cast<const uint8_t*>(data);
        bytes.insert(bytes.end(), p, p + byte_len);

        json bv;
        bv["buffer"] = 0;
        bv["byteOffset"] = offset;
        bv["byteLength"] = byte_len;
        bv["target"] = target;
        buffer_views.push_back(bv);

        json acc;
        acc["bufferView"] = buffer_views.size() - 1;
        acc["byteOffset"] = 0;
        acc["componentType"] = component_type;
        acc["count"] = count;
        acc["type"] = type;
        if (min3 && max3) {
            acc["min"] = {min3[0], min3[1], min3[2]};
            acc["max"] = {max3[0], max3[1], max3[2]};
        }
        accessors.push_back(acc);
        return static_cast<int>(accessors.size()) - 1;
    }
};

}  // namespace

void write_gltf(const std::string& path, const Document& doc) {
    const fs::path gltf_path(path);
    const std::string bin_name = gltf_path.stem().string() + ".bin";

    BinBuilder bin;
    json meshes = json::array();
    for (const MeshDef& mesh : doc.meshes) {
        json prims = json::array();
        for (const Primitive& prim : mesh.primitives) {
            if (prim.positions.size() % 3 != 0) throw IoError("positions not a multiple of 3");
            const size_t vert_count = prim.positions.size() / 3;
            float mins[3] = {std::numeric_limits<float>::max(), std::numeric_limits<float>::max(),
                             std::numeric_limits<float>::max()};
            float maxs[3] = {std::numeric_limits<float>::lowest(),
                             std::numeric_limits<float>::lowest(),
                             std::numeric_limits<float>::lowest()};
            for (size_t i = 0; i < prim.positions.size(); i += 3)
                for (int c = 0; c < 3; ++c) {
                    mins[c] = std::min(mins[c], prim.positions[i + c]);
                    maxs[c] = std::max(maxs[c], prim.positions[i + c]);
                }
            const int pos_acc = bin.add_accessor(prim.positions.data(),
                                                 prim.positions.size() * sizeof(float), kFloat,
                                                 "VEC3", vert_count, kArrayBuffer, mins, maxs);
            json attributes;
            attributes["POSITION"] = pos_acc;
            if (!prim.uv0.empty()) {
                attributes["TEXCOORD_0"] = bin.add_accessor(
                    prim.uv0.data(), prim.uv0.size() * sizeof(float), kFloat, "VEC2",
                    prim.uv0.size() / 2, kArrayBuffer, nullptr, nullptr);
            }
            if (!prim.uv1.empty()) {
                attributes["TEXCOORD_1"] = bin.add_accessor(
                    prim.uv1.data(), prim.uv1.size() * sizeof(float), kFloat, "VEC2",
                    prim.uv1.size() / 2, kArrayBuffer, nullptr, nullptr);
            }
            json p;
            p["attributes"] = attributes;
            p["indices"] = bin.add_accessor(prim.indices.data(),
                                            prim.indices.size() * sizeof(uint32_t), kUint32,
                                            "SCALAR", prim.indices.size(), kElementArrayBuffer,
                                            nullptr, nullptr);
            p["mode"] = 4;  // TRIANGLES
            if (prim.material >= 0) p["material"] = prim.material;
            prims.push_back(p);
        }
        json m;
        m["name"] = mesh.name;
        m["primitives"] = prims;
        meshes.push_back(m);
    }

    json nodes = json::array();
    json scene_nodes = json::array();
    for (size_t i = 0; i < doc.nodes.size(); ++i) {
        const NodeDef& node = doc.nodes[i];
        json n;
        n["name"] = node.name;
        if (node.mesh >= 0) n["mesh"] = node.mesh;
        if (node.translation != std::array<double, 3>{0, 0, 0})
            n["translation"] = node.translation;
        if (node.rotation != std::array<double, 4>{0, 0, 0, 1}) n["rotation"] = node.rotation;
        nodes.push_back(n);
        scene_nodes.push_back(i);
    }

    bool any_transform = false;
    json materials = json::array();
    for (const MaterialDef& mat : doc.materials) {
        json m;
        m["name"] = mat.name;
        json pbr;
        pbr["baseColorFactor"] = mat.base_color;
        pbr["metallicFactor"] = 0.0;
        pbr["roughnessFactor"] = 1.0;
        if (mat.base_color_texture >= 0) {
            json tex;
            tex["index"] = mat.base_color_texture;
            tex["texCoord"] = mat.texcoord;
            if (mat.texture_transform) {
                tex["extensions"]["KHR_texture_transform"] = {{"offset", {0.0, 0.0}},
                                                              {"scale", {1.0, 1.0}}};
                any_transform = true;
            }
            pbr["baseColorTexture"] = tex;
        }
        m["pbrMetallicRoughness"] = pbr;
        m["alphaMode"] = mat.alpha_mode;
        m["doubleSided"] = mat.double_sided;
        if (mat.unlit) m["extensions"]["KHR_materials_unlit"] = json::object();
        materials.push_back(m);
    }

    json textures = json::array();
    json images = json::array();
    for (const std::string& uri : doc.images) {
        json img;
        img["uri"] = uri;
        images.push_back(img);
        json tex;
        tex["sampler"] = 0;
        tex["source"] = textures.size();
        textures.push_back(tex);
    }

    json root;
    root["asset"] = {{"version", "2.0"}, {"generator", "proxyworld"}};
    json extensions_used = json::array();
    extensions_used.push_back("KHR_materials_unlit");
    if (any_transform) extensions_used.push_back("KHR_texture_transform");
    root["extensionsUsed"] = extensions_used;
    root["scene"] = 0;
    root["scenes"] = json::array({{{"nodes", scene_nodes}}});
    root["nodes"] = nodes;
    root["meshes"] = meshes;
    if (!materials.empty()) root["materials"] = materials;
    if (!textures.empty()) {
        root["textures"] = textures;
        root["images"] = images;
        root["samplers"] =
            json::array({{{"magFilter", 9729}, {"minFilter", 9729}, {"wrapS", 10497}, {"wrapT", 33071}}});
    }
    root["buffers"] = json::array({{{"uri", bin_name}, {"byteLength", bin.bytes.size()}}});
    root["bufferViews"] = bin.buffer_views;
    root["accessors"] = bin.accessors;

    {
        std::ofstream f(gltf_path, std::ios::binary);
        if (!f) throw IoError("cannot open for write: " + path);
        f << root.dump(2) << "\n";
    }
    {
        std::ofstream f(gltf_path.parent_path() / bin_name, std::ios::binary);
        if (!f) throw IoError("cannot open for write: " + bin_name);
        f.write(reinterpret_cast<const char*>(bin.bytes.data()),
                static_cast<std::streamsize>(bin.bytes.size()));
    }
}

namespace {

std::vector<uint8_t> read_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path.string());
    return std::vector<uint8_t>((std::istreambuf_iterator<char>(f)),
                                std::istreambuf_iterator<char>());
}

struct AccessorView {
    const uint8_t* data = nullptr;
    size_t count = 0;
    int component_type = 0;
    std::string type;
    size_t stride = 0;
};

int component_size(int component_type) {
    switch (component_type) {
        case 5120:
        case 5121: return 1;
        case 5122:
        case 5123: return 2;
        case 5125:
        case 5126: return 4;
        default: return 0;
    }
}

int type_components(const std::string& type) {
    if (type == "SCALAR") return 1;
    if (type == "VEC2") return 2;
    if (type == "VEC3") return 3;
    if (type == "VEC4") return 4;
    if (type == "MAT4") return 16;
    return 0;
}

}  // namespace

Document read_gltf(const std::string& path) {
    const fs::path gltf_path(path);
    json root = json::parse(read_file(gltf_path));
    std::vector<std::vector<uint8_t>> buffers;
    for (const auto& b : root.value("buffers", json::array()))
        buffers.push_back(read_file(gltf_path.parent_path() / b.at("uri").get<std::string>()));

    auto view_accessor = [&](int index) -> AccessorView {
        const json& acc = root.at("accessors").at(index);
        const json& bv = root.at("bufferViews").at(acc.at("bufferView").get<int>());
        AccessorView v;
        v.count = acc.at("count").get<size_t>();
        v.component_type = acc.at("componentType").get<int>();
        v.type = acc.at("type").get<std::string>();
        const size_t elem = static_cast<size_t>(component_size(v.component_type)) *
                            type_components(v.type);
        v.stride = bv.value("byteStride", elem);
        const size_t offset = bv.value("byteOffset", size_t{0}) + acc.value("byteOffset", size_t{0});
        v.data = buffers.at(bv.value("buffer", 0)).data() + offset;
        return v;
    };

    Document doc;
    for (const auto& m : root.value("meshes", json::array())) {
        MeshDef mesh;
        mesh.name = m.value("name", "");
        for (const auto& p : m.at("primitives")) {
            Primitive prim;
            prim.material = p.value("material", -1);
            const AccessorView pos = view_accessor(p.at("attributes").at("POSITION").get<int>());
            prim.positions.resize(pos.count * 3);
            for (size_t i = 0; i < pos.count; ++i)
                std::memcpy(&prim.positions[i * 3], pos.data + i * pos.stride, 12);
            if (p.at("attributes").contains("TEXCOORD_0")) {
                const AccessorView uv = view_accessor(p.at("attributes").at("TEXCOORD_0").get<int>());
                prim.uv0.resize(uv.count * 2);
                for (size_t i = 0; i < uv.count; ++i)
                    std::memcpy(&prim.uv0[i * 2], uv.data + i * uv.stride, 8);
            }
            if (p.at("attributes").contains("TEXCOORD_1")) {
                const AccessorView uv = view_accessor(p.at("attributes").at("TEXCOORD_1").get<int>());
                prim.uv1.resize(uv.count * 2);
                for (size_t i = 0; i < uv.count; ++i)
                    std::memcpy(&prim.uv1[i * 2], uv.data + i * uv.stride, 8);
            }
            if (p.contains("indices")) {
                const AccessorView idx = view_accessor(p.at("indices").get<int>());
                prim.indices.resize(idx.count);
                for (size_t i = 0; i < idx.count; ++i) {
                    uint32_t value = 0;
                    if (idx.component_type == 5125) {
                        std::memcpy(&value, idx.data + i * idx.stride, 4);
                    } else if (idx.component_type == 5123) {
                        uint16_t v16;
                        std::memcpy(&v16, idx.data + i * idx.stride, 2);
                        value = v16;
                    } else {
                        value = idx.data[i * idx.stride];
                    }
                    prim.indices[i] = value;
                }
            }
            mesh.primitives.push_back(std::move(prim));
        }
        doc.meshes.push_back(std::move(mesh));
    }
    for (const auto& n : root.value("nodes", json::array())) {
        NodeDef node;
        node.name = n.value("name", "");
        node.mesh = n.value("mesh", -1);
        if (n.contains("translation"))
            for (int i = 0; i < 3; ++i) node.translation[i] = n.at("translation").at(i).get<double>();
        if (n.contains("rotation"))
            for (int i = 0; i < 4; ++i) node.rotation[i] = n.at("rotation").at(i).get<double>();
        doc.nodes.push_back(std::move(node));
    }
    for (const auto& m : root.value("materials", json::array())) {
        MaterialDef mat;
        mat.name = m.value("name", "");
        mat.alpha_mode = m.value("alphaMode", "OPAQUE");
        mat.unlit = m.contains("extensions") && m.at("extensions").contains("KHR_materials_unlit");
        doc.materials.push_back(std::move(mat));
    }
    for (const auto& img : root.value("images", json::array()))
        doc.images.push_back(img.value("uri", ""));
    return doc;
}

size_t document_triangle_count(const Document& doc) {
    size_t total = 0;
    for (const MeshDef& mesh : doc.meshes)
        for (const Primitive& prim : mesh.primitives) total += prim.triangle_count();
    return total;
}

std::vector<std::string> validate_gltf(const std::string& path) {
    std::vector<std::string> errors;
    auto fail = [&](const std::string& msg) { errors.push_back(msg); };

    const fs::path gltf_path(path);
    json root;
    try {
        root = json::parse(read_file(gltf_path));
    } catch (const std::exception& e) {
        return {std::string("cannot parse: ") + e.what()};
    }

    if (!root.contains("asset") || root.at("asset").value("version", "") != "2.0")
        fail("asset.version must be \"2.0\"");

    const json accessors = root.value("accessors", json::array());
    const json buffer_views = root.value("bufferViews", json::array());
    const json buffers_json = root.value("buffers", json::array());
    const json meshes = root.value("meshes", json::array());
    const json nodes = root.value("nodes", json::array());
    const json materials = root.value("materials", json::array());
    const json textures = root.value("textures", json::array());
    const json images = root.value("images", json::array());

    std::vector<size_t> buffer_sizes;
    for (const auto& b : buffers_json) {
        const size_t declared = b.value("byteLength", size_t{0});
        if (b.contains("uri")) {
            const fs::path bin = gltf_path.parent_path() / b.at("uri").get<std::string>();
            if (!fs::exists(bin)) {
                fail("buffer file missing: " + bin.string());
                buffer_sizes.push_back(0);
                continue;
            }
            const size_t actual = fs::file_size(bin);
            if (actual < declared)
                fail("buffer file smaller than declared byteLength: " + bin.string());
            buffer_sizes.push_back(actual);
        } else {
            buffer_sizes.push_back(declared);
        }
    }

    for (size_t i = 0; i < buffer_views.size(); ++i) {
        const auto& bv = buffer_views[i];
        const int buf = bv.value("buffer", -1);
        if (buf < 0 || buf >= static_cast<int>(buffer_sizes.size())) {
            fail("bufferView " + std::to_string(i) + ": buffer index out of range");
            continue;
        }
        const size_t offset = bv.value("byteOffset", size_t{0});
        const size_t length = bv.value("byteLength", size_t{0});
        if (offset + length > buffer_sizes[buf])
            fail("bufferView " + std::to_string(i) + ": exceeds buffer size");
    }

    for (size_t i = 0; i < accessors.size(); ++i) {
        const auto& acc = accessors[i];
        const int ct = acc.value("componentType", 0);
        const int cs = component_size(ct);
        const int tc = type_components(acc.value("type", ""));
        if (cs == 0) fail("accessor " + std::to_string(i) + ": bad componentType");
        if (tc == 0) fail("accessor " + std::to_string(i) + ": bad type");
        if (!acc.contains("bufferView")) continue;
        const int bv_index = acc.at("bufferView").get<int>();
        if (bv_index < 0 || bv_index >= static_cast<int>(buffer_views.size())) {
            fail("accessor " + std::to_string(i) + ": bufferView out of range");
            continue;
        }
        const auto& bv = buffer_views[bv_index];
        const size_t acc_offset = acc.value("byteOffset", size_t{0});
        const size_t bv_offset = bv.value("byteOffset", size_t{0});
        if (cs > 0 && (acc_offset + bv_offset) % cs != 0)
            fail("accessor " + std::to_string(i) + ": misaligned byteOffset");
        if (cs > 0 && tc > 0) {
            const size_t need = acc_offset + acc.value("count", size_t{0}) *
                                                 static_cast<size_t>(cs) * tc;
            if (need > bv.value("byteLength", size_t{0}))
                fail("accessor " + std::to_string(i) + ": overruns bufferView");
        }
    }

    // load binary for index-range checks
    std::vector<std::vector<uint8_t>> buffer_bytes;
    for (const auto& b : buffers_json) {
        try {
            if (b.contains("uri"))
                buffer_bytes.push_back(read_file(gltf_path.parent_path() / b.at("uri").get<std::string>()));
            else
                buffer_bytes.emplace_back();
        } catch (const std::exception&) {
            buffer_bytes.emplace_back();
        }
    }
    auto accessor_u32 = [&](int acc_index, size_t element) -> uint32_t {
        const auto& acc = accessors.at(acc_index);
        const auto& bv = buffer_views.at(acc.at("bufferView").get<int>());
        const int ct = acc.value("componentType", 0);
        const size_t stride = bv.value("byteStride", size_t(component_size(ct)));
        const size_t offset = bv.value("byteOffset", size_t{0}) +
                              acc.value("byteOffset", size_t{0}) + element * stride;
        const auto& bytes = buffer_bytes.at(bv.value("buffer", 0));
        if (offset + component_size(ct) > bytes.size()) return 0;
        if (ct == 5125) {
            uint32_t v;
            std::memcpy(&v, bytes.data() + offset, 4);
            return v;
        }
        if (ct == 5123) {
            uint16_t v;
            std::memcpy(&v, bytes.data() + offset, 2);
            return v;
        }
        return bytes[offset];
    };

    for (size_t mi = 0; mi < meshes.size(); ++mi) {
        const auto& mesh = meshes[mi];
        if (!mesh.contains("primitives") || mesh.at("primitives").empty()) {
            fail("mesh " + std::to_string(mi) + ": no primitives");
            continue;
        }
        for (size_t pi = 0; pi < mesh.at("primitives").size(); ++pi) {
            const auto& prim = mesh.at("primitives")[pi];
            const std::string where = "mesh " + std::to_string(mi) + " primitive " + std::to_string(pi);
            if (!prim.contains("attributes") || !prim.at("attributes").contains("POSITION")) {
                fail(where + ": missing POSITION");
                continue;
            }
            const int pos_index = prim.at("attributes").at("POSITION").get<int>();
            if (pos_index < 0 || pos_index >= static_cast<int>(accessors.size())) {
                fail(where + ": POSITION accessor out of range");
                continue;
            }
            const auto& pos_acc = accessors[pos_index];
            if (pos_acc.value("type", "") != "VEC3" || pos_acc.value("componentType", 0) != kFloat)
                fail(where + ": POSITION must be float VEC3");
            if (!pos_acc.contains("min") || !pos_acc.contains("max") ||
                pos_acc.at("min").size() != 3 || pos_acc.at("max").size() != 3)
                fail(where + ": POSITION requires 3-element min/max");
            const size_t vert_count = pos_acc.value("count", size_t{0});
            if (prim.contains("indices")) {
                const int idx_index = prim.at("indices").get<int>();
                if (idx_index < 0 || idx_index >= static_cast<int>(accessors.size())) {
                    fail(where + ": indices accessor out of range");
                } else {
                    const auto& idx_acc = accessors[idx_index];
                    const int ct = idx_acc.value("componentType", 0);
                    if (ct != 5121 && ct != 5123 && ct != 5125)
                        fail(where + ": indices componentType must be unsigned");
                    if (idx_acc.value("type", "") != "SCALAR")
                        fail(where + ": indices type must be SCALAR");
                    const size_t count = idx_acc.value("count", size_t{0});
                    if (count % 3 != 0) fail(where + ": triangle index count not divisible by 3");
                    uint32_t max_index = 0;
                    for (size_t e = 0; e < count; ++e)
                        max_index = std::max(max_index, accessor_u32(idx_index, e));
                    if (count > 0 && max_index >= vert_count)
                        fail(where + ": index " + std::to_string(max_index) +
                             " out of range for " + std::to_string(vert_count) + " vertices");
                }
            }
            if (prim.contains("material")) {
                const int mat = prim.at("material").get<int>();
                if (mat < 0 || mat >= static_cast<int>(materials.size()))
                    fail(where + ": material index out of range");
            }
        }
    }

    std::set<std::string> declared;
    for (const auto& e : root.value("extensionsUsed", json::array()))
        declared.insert(e.get<std::string>());
    for (size_t i = 0; i < materials.size(); ++i) {
        const auto& mat = materials[i];
        if (mat.contains("extensions"))
            for (const auto& [name, _] : mat.at("extensions").items())
                if (!declared.count(name))
                    fail("material " + std::to_string(i) + ": extension " + name +
                         " not in extensionsUsed");
        if (mat.contains("pbrMetallicRoughness") &&
            mat.at("pbrMetallicRoughness").contains("baseColorTexture")) {
            const auto& tex_info = mat.at("pbrMetallicRoughness").at("baseColorTexture");
            const int tex = tex_info.value("index", -1);
            if (tex < 0 || tex >= static_cast<int>(textures.size()))
                fail("material " + std::to_string(i) + ": texture index out of range");
            if (tex_info.contains("extensions"))
                for (const auto& [name, _] : tex_info.at("extensions").items())
                    if (!declared.count(name))
                        fail("material " + std::to_string(i) + ": texture extension " + name +
                             " not in extensionsUsed");
        }
    }

    for (size_t i = 0; i < nodes.size(); ++i) {
        const auto& node = nodes[i];
        if (node.contains("mesh")) {
            const int mesh = node.at("mesh").get<int>();
            if (mesh < 0 || mesh >= static_cast<int>(meshes.size()))
                fail("node " + std::to_string(i) + ": mesh index out of range");
        }
        if (node.contains("rotation")) {
            double norm = 0.0;
            for (const auto& c : node.at("rotation")) {
                const double v = c.get<double>();
                norm += v * v;
                if (!std::isfinite(v)) fail("node " + std::to_string(i) + ": non-finite rotation");
            }
            if (std::abs(norm - 1.0) > 1e-6)
                fail("node " + std::to_string(i) + ": rotation quaternion not normalized");
        }
        if (node.contains("translation"))
            for (const auto& c : node.at("translation"))
                if (!std::isfinite(c.get<double>()))
                    fail("node " + std::to_string(i) + ": non-finite translation");
    }

    for (size_t i = 0; i < textures.size(); ++i) {
        const int src = textures[i].value("source", -1);
        if (src < 0 || src >= static_cast<int>(images.size()))
            fail("texture " + std::to_string(i) + ": source out of range");
    }
    for (size_t i = 0; i < images.size(); ++i) {
        if (!images[i].contains("uri")) continue;
        const fs::path img = gltf_path.parent_path() / images[i].at("uri").get<std::string>();
        if (!fs::exists(img)) fail("image file missing: " + img.string());
    }

    if (root.contains("scene")) {
        const int s = root.at("scene").get<int>();
        if (s < 0 || s >= static_cast<int>(root.value("scenes", json::array()).size()))
            fail("default scene index out of range");
    }
    for (const auto& scene : root.value("scenes", json::array()))
        for (const auto& n : scene.value("nodes", json::array()))
            if (n.get<int>() < 0 || n.get<int>() >= static_cast<int>(nodes.size()))
                fail("scene node index out of range");

    return errors;
}

bool all_materials_unlit(const std::string& path) {
    json root = json::parse(read_file(fs::path(path)));
    const json materials = root.value("materials", json::array());
    if (materials.empty()) return false;
    for (const auto& mat : materials)
        if (!mat.contains("extensions") || !mat.at("extensions").contains("KHR_materials_unlit"))
            return false;
    return true;
}

}  // namespace pw::gltf
