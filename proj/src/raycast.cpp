#include "proxyworld/raycast.hpp"

#include <algorithm>
#include <numeric>

namespace pw {

bool intersect_triangle(const Ray& ray, Vec3 a, Vec3 b, Vec3 c, double& t_out, double& u_out,
                        double& v_out, double t_min_eps) {
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 p = cross(ray.dir, e2);
    const double det = dot(e1, p);
    if (std::abs(det) < 1e-14) return false;
    const double inv_det = 1.0 / det;
    const Vec3 s = ray.origin - a;
    const double u = dot(s, p) * inv_det;
    if (u < -1e-12 || u > 1.0 + 1e-12) return false;
    const Vec3 q = cross(s, e1);
    const double v = dot(ray.dir, q) * inv_det;
    if (v < -1e-12 || u + v > 1.0 + 1e-12) return false;
    const double t = dot(e2, q) * inv_det;
    if (t <= t_min_eps) return false;
    t_out = t;
    u_out = u;
    v_out = v;
    return true;
}

TriBvh::TriBvh(const std::vector<Vec3>& vertices, const std::vector<std::array<int, 3>>& triangles)
    : verts_(vertices), tris_(triangles) {
    const int n = static_cast<int>(tris_.size());
    if (n == 0) return;
    centroids_.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto& t = tris_[i];
        centroids_[i] = (verts_[t[0]] + verts_[t[1]] + verts_[t[2]]) * (1.0 / 3.0);
        bounds_.expand(verts_[t[0]]);
        bounds_.expand(verts_[t[1]]);
        bounds_.expand(verts_[t[2]]);
    }
    std::vector<int> items(n);
    std::iota(items.begin(), items.end(), 0);
    nodes_.reserve(2 * n);
    root_ = build_node(items, 0, n, 0);
    centroids_.clear();
    centroids_.shrink_to_fit();
}

int TriBvh::build_node(std::vector<int>& items, int begin, int end, int depth) {
    Node node;
    for (int i = begin; i < end; ++i) {
        const auto& t = tris_[items[i]];
        node.box.expand(verts_[t[0]]);
        node.box.expand(verts_[t[1]]);
        node.box.expand(verts_[t[2]]);
    }
    constexpr int kLeafSize = 4;
    constexpr int kMaxDepth = 48;
    if (end - begin <= kLeafSize || depth >= kMaxDepth) {
        node.first = static_cast<int>(tri_indices_.size());
        node.count = end - begin;
        // Stable index order inside leaves keeps equal-t tie-breaks cheap.
        std::sort(items.begin() + begin, items.begin() + end);
        for (int i = begin; i < end; ++i) tri_indices_.push_back(items[i]);
        nodes_.push_back(node);
        return static_cast<int>(nodes_.size()) - 1;
    }

    Aabb cbox;
    for (int i = begin; i < end; ++i) cbox.expand(centroids_[items[i]]);
    const Vec3 ext = cbox.extent();
    int axis = 0;
    if (ext.y > ext.x) axis = 1;
    if (ext.z > (axis == 0 ? ext.x : ext.y)) axis = 2;
    const int mid = (begin + end) / 2;
    std::nth_element(items.begin() + begin, items.begin() + mid, items.begin() + end,
                     [&](int lhs, int rhs) {
                         const Vec3& a = centroids_[lhs];
                         const Vec3& b = centroids_[rhs];
                         const double av = axis == 0 ? a.x : (axis == 1 ? a.y : a.z);
                         const double bv = axis == 0 ? b.x : (axis == 1 ? b.y : b.z);
                         if (av != bv) return av < bv;
                         return lhs < rhs;  // deterministic split under ties
                     });

    const int node_index = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build_node(items, begin, mid, depth + 1);
    const int right = build_node(items, mid, end, depth + 1);
    nodes_[node_index].left = left;
    nodes_[node_index].right = right;
    return node_index;
}

void TriBvh::consider(const Ray& ray, int tri, RayHit& best) const {
    double t, u, v;
    const auto& idx = tris_[tri];
    if (!intersect_triangle(ray, verts_[idx[0]], verts_[idx[1]], verts_[idx[2]], t, u, v)) return;
    if (t > best.t || (t == best.t && best.valid() && tri >= best.triangle)) return;
    best = {t, tri, u, v};
}

RayHit TriBvh::nearest(const Ray& ray) const {
    return nearest_if(ray, [](int, double, double) { return true; });
}

RayHit TriBvh::nearest_brute(const Ray& ray) const {
    RayHit best;
    for (int i = 0; i < static_cast<int>(tris_.size()); ++i) consider(ray, i, best);
    return best;
}

}  // namespace pw
