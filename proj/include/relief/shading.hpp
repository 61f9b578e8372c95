#pragma once

#include <optional>

#include "relief/fields.hpp"
#include "relief/image.hpp"
#include "relief/tracer.hpp"

namespace relief {

/// Tracing adapter over a learned field; the field must outlive the functor.
BatchSdf field_sdf(const SdfField& field);

/// Differentiable surface points for a batch of traced rays, using the
/// closed-form intersection derivative: x(theta) = x_hat - v/(grad0 . v) *
/// f_theta(x_hat), where x_hat and grad0 are frozen at the current parameters
/// and only f_theta(x_hat) stays live. Equals x_hat at the current parameters
/// and matches the implicit-function derivative to first order. Rays that
/// missed or graze the surface (|grad0 . v| < graze_eps) are dropped.
struct DiffHitBatch {
    Value x;               // 3 x k live surface points
    Mat x_hat;             // 3 x k frozen hit points
    Mat dirs;              // 3 x k view directions
    std::vector<int> rays; // indices into the input ray list, size k
};

DiffHitBatch differentiable_hits(Tape& tape, const SdfField& field, const TapeBinding& geo,
                                 const std::vector<Ray>& rays, const std::vector<Hit>& hits,
                                 double graze_eps);

/// Single-ray form; empty when the ray grazes. Throws if hit.hit is false.
std::optional<Value> differentiable_hit(Tape& tape, const SdfField& field, const TapeBinding& geo,
                                        const Ray& ray, const Hit& hit, double graze_eps);

/// Differentiable color for a batch of hit rays: evaluates the geometry
/// network at the differentiable points, takes normals and features there,
/// and feeds the rendering network. Gradients reach the geometry parameters
/// through the intersection point, the normals, and the feature vector.
struct ShadeBatch {
    Value rgb;             // 3 x k live, components in [0,1]
    Value hit_sdf;         // 1 x k live SDF at the differentiable points
    std::vector<int> rays;
};

ShadeBatch shade_hits(Tape& tape, const SdfField& field, const TapeBinding& geo,
                      const RadianceField& radiance, const TapeBinding& rad,
                      const std::vector<Ray>& rays, const std::vector<Hit>& hits,
                      const RenderToggles& toggles, double graze_eps);

std::optional<Value> shade_pixel(Tape& tape, const SdfField& field, const TapeBinding& geo,
                                 const RadianceField& radiance, const TapeBinding& rad, const Ray& ray,
                                 const Hit& hit, const RenderToggles& toggles, double graze_eps);

struct RenderOutputs {
    ImageRGB rgb;
    ImageGray depth;   // ray parameter t, 0 where missed
    ImageRGB normal;   // raw spatial gradient, 0 where missed
    ImageGray mask;    // 1 where hit
};

/// Full-frame forward render (no gradients). Pure: identical state gives a
/// bit-identical result.
RenderOutputs render_image(const SdfField& field, const RadianceField& radiance, const Camera& cam,
                           const RenderToggles& toggles, const TracerConfig& cfg,
                           const Eigen::Vector3d& background);

/// Same tracing/camera path with caller-provided shading; used to render
/// analytic scenes through the sphere tracer under test.
RenderOutputs render_image_shaded(
    const BatchSdf& sdf, const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& normal_at,
    const std::function<Eigen::Vector3d(const Eigen::Vector3d&, const Eigen::Vector3d&, const Eigen::Vector3d&)>&
        shade,
    const Camera& cam, const TracerConfig& cfg, const Eigen::Vector3d& background);

/// Per-ray trace bounds clipped to the scene bounding sphere.
std::vector<std::pair<double, double>> scene_trace_bounds(const std::vector<Ray>& rays, const TracerConfig& cfg);

}  // namespace relief
