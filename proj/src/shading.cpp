#include "relief/shading.hpp"

#include <cmath>
#include <stdexcept>

#include "relief/trimesh.hpp"

namespace relief {

namespace {
// Bounding sphere of the scene box with a little slack for shell offsets.
const double kSceneBoundRadius = std::sqrt(3.0) * kSceneBoxHalf * 1.1;
}  // namespace

BatchSdf field_sdf(const SdfField& field) {
    return [&field](const Mat& pts) { return Eigen::RowVectorXd(field.sdf_raw(pts)); };
}

std::vector<std::pair<double, double>> scene_trace_bounds(const std::vector<Ray>& rays, const TracerConfig& cfg) {
    std::vector<std::pair<double, double>> bounds(rays.size());
    for (size_t i = 0; i < rays.size(); ++i) {
        double t0 = cfg.t_min, t1 = cfg.t_max;
        if (!clip_to_bounding_sphere(rays[i], kSceneBoundRadius, t0, t1)) t0 = t1 = cfg.t_max;  // bound missed
        bounds[i] = {t0, t1};
    }
    return bounds;
}

DiffHitBatch differentiable_hits(Tape& tape, const SdfField& field, const TapeBinding& geo,
                                 const std::vector<Ray>& rays, const std::vector<Hit>& hits,
                                 double graze_eps) {
    if (rays.size() != hits.size()) throw std::invalid_argument("differentiable_hits: ray/hit count mismatch");

    std::vector<int> candidates;
    for (size_t i = 0; i < rays.size(); ++i)
        if (hits[i].hit) candidates.push_back(static_cast<int>(i));

    DiffHitBatch out;
    if (candidates.empty()) {
        out.x = tape.constant(Mat::Zero(3, 0));
        return out;
    }

    Mat xh(3, candidates.size());
    Mat dirs(3, candidates.size());
    for (size_t k = 0; k < candidates.size(); ++k) {
        xh.col(k) = hits[candidates[k]].x;
        dirs.col(k) = rays[candidates[k]].dir;
    }
    const Mat grad0 = field.normals_raw(xh);  // frozen at current parameters

    std::vector<int> kept;
    for (size_t k = 0; k < candidates.size(); ++k)
        if (std::abs(grad0.col(k).dot(dirs.col(k))) >= graze_eps) kept.push_back(static_cast<int>(k));

    Mat xk(3, kept.size());
    Mat dk(3, kept.size());
    Mat factor(3, kept.size());
    out.rays.reserve(kept.size());
    for (size_t k = 0; k < kept.size(); ++k) {
        const int c = kept[k];
        xk.col(k) = xh.col(c);
        dk.col(k) = dirs.col(c);
        factor.col(k) = dirs.col(c) / grad0.col(c).dot(dirs.col(c));
        out.rays.push_back(candidates[c]);
    }

    const Value xc = tape.constant(xk);
    const SdfOutputs at_hat = field.forward(tape, geo, xc);  // live f_theta(x_hat)
    out.x = tape.sub(xc, tape.mul(tape.constant(factor), tape.broadcast_rows(at_hat.sdf, 3)));
    out.x_hat = std::move(xk);
    out.dirs = std::move(dk);
    return out;
}

std::optional<Value> differentiable_hit(Tape& tape, const SdfField& field, const TapeBinding& geo,
                                        const Ray& ray, const Hit& hit, double graze_eps) {
    if (!hit.hit) throw std::invalid_argument("differentiable_hit: ray did not hit");
    const DiffHitBatch b = differentiable_hits(tape, field, geo, {ray}, {hit}, graze_eps);
    if (b.rays.empty()) return std::nullopt;
    return b.x;
}

ShadeBatch shade_hits(Tape& tape, const SdfField& field, const TapeBinding& geo,
                      const RadianceField& radiance, const TapeBinding& rad,
                      const std::vector<Ray>& rays, const std::vector<Hit>& hits,
                      const RenderToggles& toggles, double graze_eps) {
    DiffHitBatch dh = differentiable_hits(tape, field, geo, rays, hits, graze_eps);
    ShadeBatch out;
    out.rays = dh.rays;
    if (dh.rays.empty()) {
        out.rgb = tape.constant(Mat::Zero(3, 0));
        out.hit_sdf = tape.constant(Mat::Zero(1, 0));
        return out;
    }

    const SdfOutputs at_x = field.forward(tape, geo, dh.x);
    // Normal at the live point; recorded on tape, so gradients w.r.t. the
    // geometry parameters flow through it into the loss.
    const Value n = tape.input_gradient(tape.sum_all(at_x.sdf), dh.x);
    out.rgb = radiance.forward(tape, rad, dh.x, n, tape.constant(dh.dirs), at_x.feature, toggles);
    out.hit_sdf = at_x.sdf;
    return out;
}

std::optional<Value> shade_pixel(Tape& tape, const SdfField& field, const TapeBinding& geo,
                                 const RadianceField& radiance, const TapeBinding& rad, const Ray& ray,
                                 const Hit& hit, const RenderToggles& toggles, double graze_eps) {
    if (!hit.hit) throw std::invalid_argument("shade_pixel: ray did not hit");
    const ShadeBatch b = shade_hits(tape, field, geo, radiance, rad, {ray}, {hit}, toggles, graze_eps);
    if (b.rays.empty()) return std::nullopt;
    return b.rgb;
}

namespace {

template <typename ShadeFn>
RenderOutputs render_frame(const BatchSdf& sdf, const Camera& cam, const TracerConfig& cfg,
                           const Eigen::Vector3d& background, ShadeFn&& shade_batch) {
    cam.validate();
    RenderOutputs out;
    out.rgb = ImageRGB(cam.height, cam.width, background);
    out.depth = ImageGray(cam.height, cam.width, 0.0);
    out.normal = ImageRGB(cam.height, cam.width, {0, 0, 0});
    out.mask = ImageGray(cam.height, cam.width, 0.0);

    const std::vector<Ray> rays = generate_all_rays(cam);
    constexpr size_t kChunk = 8192;  // fixed batches keep results schedule-independent
    for (size_t start = 0; start < rays.size(); start += kChunk) {
        const size_t n = std::min(kChunk, rays.size() - start);
        const std::vector<Ray> chunk(rays.begin() + start, rays.begin() + start + n);
        const auto bounds = scene_trace_bounds(chunk, cfg);
        const std::vector<Hit> hits = sphere_trace(sdf, chunk, bounds, cfg);

        std::vector<int> hit_ids;
        for (size_t i = 0; i < n; ++i)
            if (hits[i].hit) hit_ids.push_back(static_cast<int>(i));
        if (!hit_ids.empty()) {
            Mat pts(3, hit_ids.size());
            Mat dirs(3, hit_ids.size());
            for (size_t k = 0; k < hit_ids.size(); ++k) {
                pts.col(k) = hits[hit_ids[k]].x;
                dirs.col(k) = chunk[hit_ids[k]].dir;
            }
            Mat normals, rgb;
            shade_batch(pts, dirs, normals, rgb);
            for (size_t k = 0; k < hit_ids.size(); ++k) {
                const Ray& r = chunk[hit_ids[k]];
                out.rgb.set(r.row, r.col, rgb.col(k));
                out.normal.set(r.row, r.col, normals.col(k));
                out.depth.at(r.row, r.col) = hits[hit_ids[k]].t;
                out.mask.at(r.row, r.col) = 1.0;
            }
        }
    }
    return out;
}

}  // namespace

RenderOutputs render_image(const SdfField& field, const RadianceField& radiance, const Camera& cam,
                           const RenderToggles& toggles, const TracerConfig& cfg,
                           const Eigen::Vector3d& background) {
    return render_frame(field_sdf(field), cam, cfg, background,
                        [&](const Mat& pts, const Mat& dirs, Mat& normals, Mat& rgb) {
                            normals = field.normals_raw(pts);
                            const Mat geo = field.forward_raw(pts);
                            const Mat feature = geo.bottomRows(geo.rows() - 1);
                            rgb = radiance.forward_raw(pts, normals, dirs, feature, toggles);
                        });
}

RenderOutputs render_image_shaded(
    const BatchSdf& sdf, const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& normal_at,
    const std::function<Eigen::Vector3d(const Eigen::Vector3d&, const Eigen::Vector3d&, const Eigen::Vector3d&)>&
        shade,
    const Camera& cam, const TracerConfig& cfg, const Eigen::Vector3d& background) {
    return render_frame(sdf, cam, cfg, background,
                        [&](const Mat& pts, const Mat& dirs, Mat& normals, Mat& rgb) {
                            normals.resize(3, pts.cols());
                            rgb.resize(3, pts.cols());
                            for (Eigen::Index i = 0; i < pts.cols(); ++i) {
                                const Eigen::Vector3d n = normal_at(pts.col(i));
                                normals.col(i) = n;
                                rgb.col(i) = shade(pts.col(i), n, dirs.col(i));
                            }
                        });
}

}  // namespace relief
