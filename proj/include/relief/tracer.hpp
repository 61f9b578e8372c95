#pragma once

#include <functional>

#include "relief/camera.hpp"
#include "relief/tape.hpp"

namespace relief {

/// Batched SDF evaluator: 3 x n points in, 1 x n distances out. Adapters
/// exist for learned fields and analytic scenes so the tracer stays generic.
using BatchSdf = std::function<Eigen::RowVectorXd(const Mat&)>;

struct TracerConfig {
    double t_min = 0.0;
    double t_max = 6.0;
    double tol = 1e-4;        // surface tolerance tau
    int max_iters = 128;
    double damping = 0.9;     // advance by damping * sdf; the learned field is
                              // only approximately eikonal
    int secant_steps = 8;     // refinement once a sign change brackets the root
    double graze_eps = 1e-6;  // |grad f . v| threshold for usable hit gradients
};

struct Hit {
    bool hit = false;
    double t = 0.0;
    Eigen::Vector3d x{0, 0, 0};
    int iterations = 0;
    bool converged = false;
};

/// March t <- t + damping * sdf(o + t v) until |sdf| < tol (hit), the ray
/// leaves [t_min, t_max], or the iteration budget runs out; a sign change
/// triggers secant refinement between the bracketing samples. No gradients
/// are recorded; intersections are found with parameters frozen.
Hit sphere_trace(const BatchSdf& sdf, const Ray& ray, const TracerConfig& cfg);

/// Batched variant; evaluation order is deterministic for a fixed ray list.
std::vector<Hit> sphere_trace(const BatchSdf& sdf, const std::vector<Ray>& rays, const TracerConfig& cfg);

/// Batched with per-ray [t0, t1) overrides (e.g. bounding-sphere clips).
std::vector<Hit> sphere_trace(const BatchSdf& sdf, const std::vector<Ray>& rays,
                              const std::vector<std::pair<double, double>>& bounds, const TracerConfig& cfg);

/// Clips [t_min, t_max] to the sphere of radius `r` around the origin that
/// bounds the scene box. Returns false if the ray misses the bound entirely.
bool clip_to_bounding_sphere(const Ray& ray, double r, double& t0, double& t1);

}  // namespace relief
