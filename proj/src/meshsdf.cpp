#include "relief/meshsdf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace relief {

double point_to_mesh(const TriMesh& mesh, const Bvh& bvh, const Eigen::Vector3d& x,
                     Eigen::Vector3d* closest) {
    if (mesh.empty()) throw std::invalid_argument("point_to_mesh: empty mesh");
    const ClosestHit hit = bvh.closest(x);
    if (closest) *closest = hit.point;
    return hit.dist;
}

double sdf_gt(const TriMesh& mesh, const Bvh& bvh, const Eigen::Vector3d& x, double eps) {
    if (eps <= 0.0) throw std::invalid_argument("sdf_gt: eps must be positive");
    return point_to_mesh(mesh, bvh, x) - 0.5 * eps;
}

Eigen::RowVectorXd sdf_gt(const TriMesh& mesh, const Bvh& bvh, const Mat& x, double eps) {
    if (x.rows() != 3) throw std::invalid_argument("sdf_gt: expected 3 x n points");
    Eigen::RowVectorXd out(x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i) out(i) = sdf_gt(mesh, bvh, Eigen::Vector3d(x.col(i)), eps);
    return out;
}

Mat sample_points(const TriMesh& mesh, const SamplePlan& plan, Rng& rng) {
    if (mesh.empty()) throw std::invalid_argument("sample_points: empty mesh");
    if (plan.sigma <= 0.0 || plan.n_surface <= 0 || plan.n_uniform <= 0)
        throw std::invalid_argument("sample_points: plan wants sigma > 0 and positive counts");

    // cumulative area table for face selection
    std::vector<double> cum(mesh.faces.size());
    double acc = 0.0;
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        acc += mesh.face_area(static_cast<int>(f));
        cum[f] = acc;
    }

    Mat out(3, plan.n_surface + plan.n_uniform);
    for (int i = 0; i < plan.n_surface; ++i) {
        const double u = rng.uniform() * acc;
        const size_t f = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
        const auto& t = mesh.faces[std::min(f, mesh.faces.size() - 1)];
        // uniform barycentric draw
        const double su = std::sqrt(rng.uniform());
        const double v = rng.uniform();
        const Eigen::Vector3d p = (1.0 - su) * mesh.vertices[t[0]] + su * (1.0 - v) * mesh.vertices[t[1]] +
                                  su * v * mesh.vertices[t[2]];
        out.col(i) = p + plan.sigma * rng.normal() * mesh.face_normal(static_cast<int>(std::min(f, mesh.faces.size() - 1)));
    }
    for (int i = 0; i < plan.n_uniform; ++i)
        out.col(plan.n_surface + i) =
            Eigen::Vector3d(rng.uniform(-kSceneBoxHalf, kSceneBoxHalf), rng.uniform(-kSceneBoxHalf, kSceneBoxHalf),
                            rng.uniform(-kSceneBoxHalf, kSceneBoxHalf));
    return out;
}

}  // namespace relief
