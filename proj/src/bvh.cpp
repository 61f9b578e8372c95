#include "relief/bvh.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace relief {

Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
    const Eigen::Vector3d ab = b - a;
    const Eigen::Vector3d ac = c - a;
    const Eigen::Vector3d ap = p - a;

    const double d1 = ab.dot(ap);
    const double d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    const Eigen::Vector3d bp = p - b;
    const double d3 = ab.dot(bp);
    const double d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

    const Eigen::Vector3d cp = p - c;
    const double d5 = ab.dot(cp);
    const double d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + w * (c - b);
    }

    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

Bvh::Bvh(const TriMesh& mesh, int leaf_size) : mesh_(&mesh) {
    if (mesh.empty()) throw std::invalid_argument("bvh: empty mesh");
    order_.resize(mesh.faces.size());
    for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
    nodes_.reserve(2 * order_.size());
    build_node(order_, 0, static_cast<int>(order_.size()), std::max(1, leaf_size));
}

int Bvh::build_node(std::vector<int>& tris, int begin, int end, int leaf_size) {
    const int idx = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    Eigen::Vector3d clo = lo, chi = hi;
    for (int i = begin; i < end; ++i) {
        Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
        for (int k = 0; k < 3; ++k) {
            const Eigen::Vector3d& v = mesh_->vertices[mesh_->faces[tris[i]][k]];
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
            centroid += v;
        }
        centroid /= 3.0;
        clo = clo.cwiseMin(centroid);
        chi = chi.cwiseMax(centroid);
    }
    nodes_[idx].lo = lo;
    nodes_[idx].hi = hi;

    const int count = end - begin;
    if (count <= leaf_size) {
        nodes_[idx].begin = begin;
        nodes_[idx].count = count;
        return idx;
    }

    int axis = 0;
    (chi - clo).maxCoeff(&axis);
    const int mid = begin + count / 2;
    std::nth_element(tris.begin() + begin, tris.begin() + mid, tris.begin() + end, [&](int ta, int tb) {
        auto centroid = [&](int t) {
            return (mesh_->vertices[mesh_->faces[t][0]][axis] + mesh_->vertices[mesh_->faces[t][1]][axis] +
                    mesh_->vertices[mesh_->faces[t][2]][axis]) / 3.0;
        };
        return centroid(ta) < centroid(tb);
    });

    const int l = build_node(tris, begin, mid, leaf_size);
    const int r = build_node(tris, mid, end, leaf_size);
    nodes_[idx].left = l;
    nodes_[idx].right = r;
    return idx;
}

double Bvh::box_dist2(const Node& n, const Eigen::Vector3d& p) const {
    const Eigen::Vector3d d = (n.lo - p).cwiseMax(0.0).cwiseMax(p - n.hi);
    return d.squaredNorm();
}

ClosestHit Bvh::closest(const Eigen::Vector3d& p) const {
    if (!built()) throw std::logic_error("bvh: not built");
    ClosestHit best;
    double best2 = std::numeric_limits<double>::infinity();

    int stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& n = nodes_[stack[--top]];
        if (box_dist2(n, p) >= best2) continue;
        if (n.left < 0) {
            for (int i = n.begin; i < n.begin + n.count; ++i) {
                const int t = order_[i];
                const auto& f = mesh_->faces[t];
                const Eigen::Vector3d q = closest_point_on_triangle(p, mesh_->vertices[f[0]],
                                                                    mesh_->vertices[f[1]], mesh_->vertices[f[2]]);
                const double d2 = (q - p).squaredNorm();
                if (d2 < best2) {
                    best2 = d2;
                    best.point = q;
                    best.triangle = t;
                }
            }
            continue;
        }
        // nearer child first so pruning bites sooner
        const double dl = box_dist2(nodes_[n.left], p);
        const double dr = box_dist2(nodes_[n.right], p);
        if (dl < dr) {
            if (dr < best2) stack[top++] = n.right;
            if (dl < best2) stack[top++] = n.left;
        } else {
            if (dl < best2) stack[top++] = n.left;
            if (dr < best2) stack[top++] = n.right;
        }
    }
    best.dist = std::sqrt(best2);
    return best;
}

}  // namespace relief
