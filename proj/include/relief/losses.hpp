#pragma once

#include <optional>

#include "relief/meshsdf.hpp"
#include "relief/shading.hpp"

namespace relief {

enum class LossNorm { kL1, kL2 };

/// Coarse distillation loss: mean |f(x) - sdf_gt(x)| over the batch plus
/// lambda * mean (|grad f| - 1)^2 over the same points.
struct CoarseLossTerms {
    Value total;
    Value geo;
    Value eik;
};

CoarseLossTerms loss_coarse(Tape& tape, const SdfField& field, const TapeBinding& geo_binding,
                            const Mat& points, const Eigen::RowVectorXd& gt_sdf, double lambda_eik,
                            LossNorm norm = LossNorm::kL1);

/// Detail refinement loss: mean photometric error over the rays that hit,
/// plus lambda1 * mean SDF drift over fresh mesh-neighborhood samples and
/// lambda2 * the eikonal penalty on the same samples. Empty when no usable
/// ray survives tracing (the step is skipped).
struct DetailLossTerms {
    Value total;
    Value photo;
    Value drift;
    Value eik;
    std::vector<int> rays_used;  // indices into the ray batch
};

std::optional<DetailLossTerms> loss_detail(Tape& tape, const SdfField& field, const TapeBinding& geo_binding,
                                           const RadianceField& radiance, const TapeBinding& rad_binding,
                                           const std::vector<Ray>& rays, const std::vector<Hit>& hits,
                                           const Mat& target_rgb, const Mat& drift_points,
                                           const Eigen::RowVectorXd& drift_gt, double lambda1, double lambda2,
                                           const RenderToggles& toggles, double graze_eps,
                                           LossNorm norm = LossNorm::kL1);

/// Eikonal penalty mean (|grad_x f| - 1)^2 for points already on the tape.
Value eikonal_penalty(Tape& tape, Value points, Value sdf_at_points);

}  // namespace relief
