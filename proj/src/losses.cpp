#include "relief/losses.hpp"

#include <stdexcept>

namespace relief {

namespace {

Value norm_mean(Tape& tape, Value residual, LossNorm norm) {
    return norm == LossNorm::kL1 ? tape.mean_all(tape.abs(residual))
                                 : tape.mean_all(tape.mul(residual, residual));
}

}  // namespace

Value eikonal_penalty(Tape& tape, Value points, Value sdf_at_points) {
    const Value g = tape.input_gradient(tape.sum_all(sdf_at_points), points);
    const Value norms = tape.sqrt(tape.sum_rows(tape.mul(g, g)));  // 1 x n
    const Value dev = tape.add_scalar(norms, -1.0);
    return tape.mean_all(tape.mul(dev, dev));
}

CoarseLossTerms loss_coarse(Tape& tape, const SdfField& field, const TapeBinding& geo_binding,
                            const Mat& points, const Eigen::RowVectorXd& gt_sdf, double lambda_eik,
                            LossNorm norm) {
    if (points.cols() != gt_sdf.cols()) throw std::invalid_argument("loss_coarse: point/target count mismatch");
    const Value x = tape.leaf(points);
    const SdfOutputs out = field.forward(tape, geo_binding, x);

    CoarseLossTerms terms;
    terms.geo = norm_mean(tape, tape.sub(out.sdf, tape.constant(Mat(gt_sdf))), norm);
    terms.eik = eikonal_penalty(tape, x, out.sdf);
    terms.total = tape.add(terms.geo, tape.scale(terms.eik, lambda_eik));
    return terms;
}

std::optional<DetailLossTerms> loss_detail(Tape& tape, const SdfField& field, const TapeBinding& geo_binding,
                                           const RadianceField& radiance, const TapeBinding& rad_binding,
                                           const std::vector<Ray>& rays, const std::vector<Hit>& hits,
                                           const Mat& target_rgb, const Mat& drift_points,
                                           const Eigen::RowVectorXd& drift_gt, double lambda1, double lambda2,
                                           const RenderToggles& toggles, double graze_eps, LossNorm norm) {
    if (target_rgb.rows() != 3 || target_rgb.cols() != static_cast<Eigen::Index>(rays.size()))
        throw std::invalid_argument("loss_detail: target must be 3 x n_rays");
    if (drift_points.cols() != drift_gt.cols())
        throw std::invalid_argument("loss_detail: drift point/target count mismatch");

    const ShadeBatch shaded =
        shade_hits(tape, field, geo_binding, radiance, rad_binding, rays, hits, toggles, graze_eps);
    if (shaded.rays.empty()) return std::nullopt;

    Mat target(3, shaded.rays.size());
    for (size_t k = 0; k < shaded.rays.size(); ++k) target.col(k) = target_rgb.col(shaded.rays[k]);

    DetailLossTerms terms;
    terms.rays_used = shaded.rays;
    terms.photo = norm_mean(tape, tape.sub(shaded.rgb, tape.constant(target)), norm);

    const Value xd = tape.leaf(drift_points);
    const SdfOutputs at_drift = field.forward(tape, geo_binding, xd);
    terms.drift = norm_mean(tape, tape.sub(at_drift.sdf, tape.constant(Mat(drift_gt))), norm);
    terms.eik = eikonal_penalty(tape, xd, at_drift.sdf);

    terms.total =
        tape.add(terms.photo, tape.add(tape.scale(terms.drift, lambda1), tape.scale(terms.eik, lambda2)));
    return terms;
}

}  // namespace relief
