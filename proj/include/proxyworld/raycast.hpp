#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "proxyworld/geometry.hpp"

namespace pw {

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit length
};

struct RayHit {
    double t = std::numeric_limits<double>::infinity();
    int triangle = -1;
    double bary_u = 0.0;  // weight of vertex 1
    double bary_v = 0.0;  // weight of vertex 2

    bool valid() const { return triangle >= 0; }
};

// Moller-Trumbore against one triangle; hits at t <= t_min_eps are ignored so
// rays started on a surface do not immediately re-hit it.
bool intersect_triangle(const Ray& ray, Vec3 a, Vec3 b, Vec3 c, double& t_out, double& u_out,
                        double& v_out, double t_min_eps = 1e-9);

// Axis-aligned BVH over a triangle soup. Nearest-hit queries are
// deterministic: among equal-t hits the lowest triangle index wins, matching
// the brute-force reference exactly.
class TriBvh {
public:
    TriBvh() = default;
    TriBvh(const std::vector<Vec3>& vertices, const std::vector<std::array<int, 3>>& triangles);

    RayHit nearest(const Ray& ray) const;

    // Nearest hit among triangles the filter accepts. The filter sees
    // (triangle index, barycentric u, v); used for alpha-tested occluders.
    template <typename F>
    RayHit nearest_if(const Ray& ray, F&& accept) const;

    // Serial reference: scans every triangle. Kept for tests and benchmarks.
    RayHit nearest_brute(const Ray& ray) const;

    bool empty() const { return tri_indices_.empty(); }
    const Aabb& bounds() const { return bounds_; }

private:
    struct Node {
        Aabb box;
        int left = -1;
        int right = -1;
        int first = 0;  // range into tri_indices_ for leaves
        int count = 0;
        bool leaf() const { return count > 0; }
    };

    int build_node(std::vector<int>& items, int begin, int end, int depth);
    void consider(const Ray& ray, int tri, RayHit& best) const;
    template <typename F>
    void consider_if(const Ray& ray, int tri, RayHit& best, F&& accept) const;

    std::vector<Vec3> verts_;
    std::vector<std::array<int, 3>> tris_;
    std::vector<Vec3> centroids_;
    std::vector<int> tri_indices_;
    std::vector<Node> nodes_;
    Aabb bounds_;
    int root_ = -1;
};

inline bool ray_box_hit(const Ray& ray, const Vec3& inv_dir, const Aabb& box, double t_max) {
    double t0 = 0.0;
    double t1 = t_max;
    for (int a = 0; a < 3; ++a) {
        const double o = a == 0 ? ray.origin.x : (a == 1 ? ray.origin.y : ray.origin.z);
        const double inv = a == 0 ? inv_dir.x : (a == 1 ? inv_dir.y : inv_dir.z);
        const double lo = a == 0 ? box.lo.x : (a == 1 ? box.lo.y : box.lo.z);
        const double hi = a == 0 ? box.hi.x : (a == 1 ? box.hi.y : box.hi.z);
        double tn = (lo - o) * inv;
        double tf = (hi - o) * inv;
        if (tn > tf) std::swap(tn, tf);
        t0 = tn > t0 ? tn : t0;
        t1 = tf < t1 ? tf : t1;
        if (t0 > t1) return false;
    }
    return true;
}

template <typename F>
void TriBvh::consider_if(const Ray& ray, int tri, RayHit& best, F&& accept) const {
    double t, u, v;
    const auto& idx = tris_[tri];
    if (!intersect_triangle(ray, verts_[idx[0]], verts_[idx[1]], verts_[idx[2]], t, u, v)) return;
    if (t > best.t || (t == best.t && tri >= best.triangle && best.valid())) return;
    if (!accept(tri, u, v)) return;
    best = {t, tri, u, v};
}

template <typename F>
RayHit TriBvh::nearest_if(const Ray& ray, F&& accept) const {
    RayHit best;
    if (root_ < 0) return best;
    const Vec3 inv_dir{1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z};
    int stack[64];
    int top = 0;
    stack[top++] = root_;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        if (!ray_box_hit(ray, inv_dir, node.box, best.t)) continue;
        if (node.leaf()) {
            for (int i = node.first; i < node.first + node.count; ++i)
                consider_if(ray, tri_indices_[i], best, accept);
        } else {
            stack[top++] = node.left;
            stack[top++] = node.right;
        }
    }
    return best;
}

}  // namespace pw
