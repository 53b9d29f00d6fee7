#include "proxyworld/mesh.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pw {

TerrainMesh load_obj(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("obj: cannot open " + path);
    TerrainMesh mesh;
    std::string line;
    while (std::getline(f, line)) {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            Vec3 v;
            ss >> v.x >> v.y >> v.z;
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ss >> tok) {
                // accept v, v/vt, v/vt/vn, v//vn
                const size_t slash = tok.find('/');
                const int i = std::stoi(slash == std::string::npos ? tok : tok.substr(0, slash));
                idx.push_back(i > 0 ? i - 1 : static_cast<int>(mesh.vertices.size()) + i);
            }
            for (size_t k = 2; k < idx.size(); ++k)  // fan-triangulate
                mesh.triangles.push_back({idx[0], idx[k - 1], idx[k]});
        }
    }
    for (const auto& tri : mesh.triangles)
        for (int i : tri)
            if (i < 0 || i >= static_cast<int>(mesh.vertices.size()))
                throw std::runtime_error("obj: face index out of range in " + path);
    drop_degenerate_triangles(mesh);
    return mesh;
}

void save_obj(const std::string& path, const TerrainMesh& mesh) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("obj: cannot open for write " + path);
    f.precision(9);
    for (const Vec3& v : mesh.vertices) f << "v " << v.x << " " << v.y << " " << v.z << "\n";
    for (const auto& t : mesh.triangles)
        f << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
}

namespace {

constexpr char kMeshMagic[8] = {'P', 'W', 'M', 'E', 'S', 'H', '0', '1'};

template <typename T>
void write_vec(std::ofstream& f, const std::vector<T>& v) {
    const uint64_t n = v.size();
    f.write(reinterpret_cast<const char*>(&n), 8);
    f.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
}

template <typename T>
std::vector<T> read_vec(std::ifstream& f) {
    uint64_t n = 0;
    f.read(reinterpret_cast<char*>(&n), 8);
    std::vector<T> v(n);
    f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    if (!f) throw std::runtime_error("mesh bin: truncated stream");
    return v;
}

}  // namespace

void save_mesh_bin(const std::string& path, const TerrainMesh& mesh) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("mesh bin: cannot open for write " + path);
    f.write(kMeshMagic, 8);
    write_vec(f, mesh.vertices);
    write_vec(f, mesh.triangles);
    write_vec(f, mesh.uv0);
    write_vec(f, mesh.uv1);
    write_vec(f, mesh.region_tags);
    write_vec(f, mesh.bottom_flag);
}

TerrainMesh load_mesh_bin(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("mesh bin: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMeshMagic, 8) != 0)
        throw std::runtime_error("mesh bin: bad magic in " + path);
    TerrainMesh mesh;
    mesh.vertices = read_vec<Vec3>(f);
    mesh.triangles = read_vec<std::array<int, 3>>(f);
    mesh.uv0 = read_vec<Vec2>(f);
    mesh.uv1 = read_vec<Vec2>(f);
    mesh.region_tags = read_vec<Region>(f);
    mesh.bottom_flag = read_vec<uint8_t>(f);
    return mesh;
}

int drop_degenerate_triangles(TerrainMesh& mesh, double area_tol) {
    const bool tags = mesh.has_region_tags();
    const bool flags = mesh.has_bottom_flags();
    std::vector<std::array<int, 3>> kept;
    std::vector<Region> kept_tags;
    std::vector<uint8_t> kept_flags;
    kept.reserve(mesh.triangles.size());
    int dropped = 0;
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (mesh.triangle_area(static_cast<int>(t)) <= area_tol) {
            ++dropped;
            continue;
        }
        kept.push_back(mesh.triangles[t]);
        if (tags) kept_tags.push_back(mesh.region_tags[t]);
        if (flags) kept_flags.push_back(mesh.bottom_flag[t]);
    }
    mesh.triangles = std::move(kept);
    if (tags) mesh.region_tags = std::move(kept_tags);
    if (flags) mesh.bottom_flag = std::move(kept_flags);
    return dropped;
}

}  // namespace pw
