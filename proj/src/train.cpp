#include "relief/train.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>

#include "relief/errors.hpp"

namespace relief {

namespace {

SamplePlan make_plan(int total, double sigma) {
    SamplePlan plan;
    plan.n_surface = std::max(1, static_cast<int>(std::lround(total * 0.8)));
    plan.n_uniform = std::max(1, total - plan.n_surface);
    plan.sigma = sigma;
    return plan;
}

double decayed_lr(double lr, double lr_final, int epoch, int epochs) {
    if (lr_final <= 0.0 || epochs <= 1) return lr;
    const double t = static_cast<double>(epoch) / static_cast<double>(epochs - 1);
    return lr * std::pow(lr_final / lr, t);
}

struct EarlyStop {
    double best = std::numeric_limits<double>::infinity();
    int since_best = 0;
    bool update(double loss, double delta, int patience) {
        if (loss < best - delta) {
            best = loss;
            since_best = 0;
        } else {
            ++since_best;
        }
        return since_best >= patience;
    }
};

}  // namespace

void save_report_ldjson(const std::string& path, const TrainReport& report) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write report: " + path);
    for (const EpochRecord& r : report.epochs) {
        nlohmann::json j = {{"epoch", r.epoch}, {"total", r.total}, {"geo", r.geo},
                            {"eik", r.eik},     {"photo", r.photo}, {"drift", r.drift},
                            {"rays_hit", r.rays_hit}};
        f << j.dump() << '\n';
    }
    nlohmann::json tail = {{"wall_seconds", report.wall_seconds},
                           {"early_stopped", report.early_stopped},
                           {"holdout_mean_abs_err", report.holdout_mean_abs_err},
                           {"holdout_eik_residual", report.holdout_eik_residual},
                           {"checkpoints_written", report.checkpoints_written}};
    f << tail.dump() << '\n';
}

TrainReport run_coarse(SdfField& field, const TriMesh& mesh, const Bvh& bvh, const CoarseConfig& cfg,
                       const EpochHook& hook) {
    if (cfg.epochs < 0) throw std::invalid_argument("run_coarse: negative epoch count");
    const auto t_start = std::chrono::steady_clock::now();
    TrainReport report;

    Rng rng(cfg.seed);
    Rng sample_rng = rng.split(1);
    Rng holdout_rng = rng.split(2);
    const SamplePlan plan = make_plan(cfg.points_per_epoch, cfg.sigma);

    AdamState adam(field.params(), {.lr = cfg.lr});
    EarlyStop stop;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        adam.set_lr(decayed_lr(cfg.lr, cfg.lr_final, epoch, cfg.epochs));
        const Mat pts = sample_points(mesh, plan, sample_rng);
        const Eigen::RowVectorXd gt = sdf_gt(mesh, bvh, pts, cfg.eps);

        Tape tape;
        const TapeBinding b = field.bind(tape);
        const CoarseLossTerms terms = loss_coarse(tape, field, b, pts, gt, cfg.lambda_eik, cfg.norm);
        const double total = terms.total.scalar();
        if (!std::isfinite(total))
            throw DivergenceError("coarse loss diverged at epoch " + std::to_string(epoch));

        const Gradients grads = backward(tape, terms.total, b);
        adam.step(field.params(), grads);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.total = total;
        rec.geo = terms.geo.scalar();
        rec.eik = terms.eik.scalar();
        report.epochs.push_back(rec);
        if (hook) hook(epoch, rec);

        if (cfg.early_stop && stop.update(total, cfg.early_stop_delta, cfg.early_stop_patience)) {
            report.early_stopped = true;
            break;
        }
    }

    // Held-out validation: fresh samples never seen by the optimizer.
    if (cfg.holdout_points > 0) {
        const Mat pts = sample_points(mesh, make_plan(cfg.holdout_points, cfg.sigma), holdout_rng);
        const Eigen::RowVectorXd gt = sdf_gt(mesh, bvh, pts, cfg.eps);
        const Eigen::RowVectorXd pred = field.sdf_raw(pts);
        report.holdout_mean_abs_err = (pred - gt).cwiseAbs().mean();

        // eikonal residual near the surface
        SamplePlan near_plan{.n_surface = cfg.holdout_points, .n_uniform = 1, .sigma = cfg.sigma};
        const Mat near_pts = sample_points(mesh, near_plan, holdout_rng).leftCols(cfg.holdout_points);
        const Mat grads = field.normals_raw(near_pts);
        report.holdout_eik_residual = (grads.colwise().norm().array() - 1.0).abs().mean();
    }

    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

TrainReport run_detail(SdfField& field, RadianceField& radiance, const ImageRGB& image, const ImageGray& mask,
                       const Camera& cam, const TriMesh& mesh, const Bvh& bvh, const DetailConfig& cfg,
                       const EpochHook& hook) {
    if (cfg.epochs < 0) throw std::invalid_argument("run_detail: negative epoch count");
    if (image.width != cam.width || image.height != cam.height || mask.width != cam.width ||
        mask.height != cam.height)
        throw std::invalid_argument("run_detail: image/mask/camera sizes disagree");
    cam.validate();

    const auto t_start = std::chrono::steady_clock::now();
    TrainReport report;

    std::vector<std::pair<int, int>> foreground;
    for (int r = 0; r < mask.height; ++r)
        for (int c = 0; c < mask.width; ++c)
            if (mask.at(r, c) != 0.0) foreground.emplace_back(r, c);
    if (foreground.empty()) throw std::invalid_argument("run_detail: empty mask");

    Rng rng(cfg.seed);
    Rng pixel_rng = rng.split(1);
    Rng drift_rng = rng.split(2);
    const SamplePlan drift_plan = make_plan(cfg.drift_points_per_step, cfg.sigma);

    AdamState adam_geo(field.params(), {.lr = cfg.lr});
    AdamState adam_rad(radiance.params(), {.lr = cfg.lr});
    EarlyStop stop;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr_now = decayed_lr(cfg.lr, cfg.lr_final, epoch, cfg.epochs);
        adam_geo.set_lr(lr_now);
        adam_rad.set_lr(lr_now);
        std::vector<std::pair<int, int>> pixels(cfg.rays_per_step);
        for (auto& p : pixels) p = foreground[pixel_rng.below(foreground.size())];
        const std::vector<Ray> rays = generate_rays(cam, pixels);
        const auto bounds = scene_trace_bounds(rays, cfg.tracer);
        const std::vector<Hit> hits = sphere_trace(field_sdf(field), rays, bounds, cfg.tracer);

        Mat target(3, rays.size());
        for (size_t i = 0; i < rays.size(); ++i) target.col(i) = image.at(pixels[i].first, pixels[i].second);

        const Mat drift_pts = sample_points(mesh, drift_plan, drift_rng);
        const Eigen::RowVectorXd drift_gt = sdf_gt(mesh, bvh, drift_pts, cfg.eps);

        Tape tape;
        const TapeBinding geo_b = field.bind(tape);
        const TapeBinding rad_b = radiance.bind(tape);
        const auto terms = loss_detail(tape, field, geo_b, radiance, rad_b, rays, hits, target, drift_pts,
                                       drift_gt, cfg.lambda1, cfg.lambda2, cfg.toggles, cfg.tracer.graze_eps,
                                       cfg.norm);
        if (!terms)
            throw DivergenceError("detail stage: every ray missed at epoch " + std::to_string(epoch) +
                                  " (field collapsed)");

        const double total = terms->total.scalar();
        if (!std::isfinite(total))
            throw DivergenceError("detail loss diverged at epoch " + std::to_string(epoch));

        std::vector<Value> wrt = geo_b.leaves;
        wrt.insert(wrt.end(), rad_b.leaves.begin(), rad_b.leaves.end());
        const std::vector<Mat> g = tape.gradients(terms->total, wrt);

        Gradients g_geo, g_rad;
        g_geo.g.assign(g.begin(), g.begin() + static_cast<long>(geo_b.leaves.size()));
        g_rad.g.assign(g.begin() + static_cast<long>(geo_b.leaves.size()), g.end());
        adam_geo.step(field.params(), g_geo);
        adam_rad.step(radiance.params(), g_rad);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.total = total;
        rec.photo = terms->photo.scalar();
        rec.drift = terms->drift.scalar();
        rec.eik = terms->eik.scalar();
        rec.rays_hit = static_cast<int>(terms->rays_used.size());
        report.epochs.push_back(rec);
        if (hook) hook(epoch, rec);

        if (cfg.early_stop && stop.update(total, cfg.early_stop_delta, cfg.early_stop_patience)) {
            report.early_stopped = true;
            break;
        }
    }

    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

}  // namespace relief
