#pragma once

#include "relief/trimesh.hpp"

namespace relief {

/// Closest point on a triangle (Ericson's region test). Exact for face, edge
/// and vertex cases.
Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c);

struct ClosestHit {
    double dist = 0.0;
    Eigen::Vector3d point{0, 0, 0};
    int triangle = -1;
};

/// Axis-aligned BVH over triangles for exact nearest-point queries.
/// Immutable after build; queries are pure and results equal a brute-force
/// scan over all triangles.
class Bvh {
public:
    Bvh() = default;
    Bvh(const TriMesh& mesh, int leaf_size = 4);

    ClosestHit closest(const Eigen::Vector3d& p) const;
    bool built() const { return !nodes_.empty(); }

private:
    struct Node {
        Eigen::Vector3d lo, hi;
        int left = -1, right = -1;  // internal if left >= 0
        int begin = 0, count = 0;   // triangle range for leaves
    };

    int build_node(std::vector<int>& tris, int begin, int end, int leaf_size);
    double box_dist2(const Node& n, const Eigen::Vector3d& p) const;

    const TriMesh* mesh_ = nullptr;
    std::vector<Node> nodes_;
    std::vector<int> order_;  // triangle indices, leaf ranges contiguous
};

}  // namespace relief
