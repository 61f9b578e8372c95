#pragma once

#include "relief/bvh.hpp"
#include "relief/rng.hpp"
#include "relief/tape.hpp"

namespace relief {

/// Exact unsigned point-to-mesh distance (closest face/edge/vertex).
double point_to_mesh(const TriMesh& mesh, const Bvh& bvh, const Eigen::Vector3d& x,
                     Eigen::Vector3d* closest = nullptr);

/// Shell ground-truth SDF: the open coarse mesh is treated as a volume of
/// thickness eps, so the zero level set sits half a thickness away from the
/// surface and no interior sign flip is ever inferred.
double sdf_gt(const TriMesh& mesh, const Bvh& bvh, const Eigen::Vector3d& x, double eps);

/// Batched variant; columns are points, returns 1 x n.
Eigen::RowVectorXd sdf_gt(const TriMesh& mesh, const Bvh& bvh, const Mat& x, double eps);

/// Supervision sampling: area-weighted points on faces jittered along the
/// face normal by N(0, sigma), plus uniform points in the scene box.
struct SamplePlan {
    int n_surface = 0;
    int n_uniform = 0;
    double sigma = 0.05;
};

Mat sample_points(const TriMesh& mesh, const SamplePlan& plan, Rng& rng);  // 3 x (n_surface+n_uniform)

}  // namespace relief
