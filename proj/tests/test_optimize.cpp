#include <doctest.h>

#include <cmath>
#include <cstring>

#include "relief/errors.hpp"
#include "relief/train.hpp"

using namespace relief;

namespace {

SdfFieldConfig tiny_geo_cfg(int width = 16, int feat = 4) {
    SdfFieldConfig cfg;
    cfg.width = width;
    cfg.depth = 8;
    cfg.skip_at = 4;
    cfg.feature_dim = feat;
    cfg.enc.num_freqs = 2;
    return cfg;
}

RadianceFieldConfig tiny_rad_cfg(int width = 16, int feat = 4) {
    RadianceFieldConfig cfg;
    cfg.width = width;
    cfg.depth = 3;
    cfg.feature_dim = feat;
    cfg.enc_x.num_freqs = 2;
    cfg.enc_v.num_freqs = 1;
    return cfg;
}

SdfField tiny_field(uint64_t seed) {
    SdfField f(tiny_geo_cfg());
    Rng rng(seed);
    f.geometric_init(0.5, rng);
    return f;
}

struct DetailFixture {
    TriMesh mesh = make_icosphere(2, 0.5);
    Bvh bvh{mesh};
    SdfField field = tiny_field(1);
    RadianceField radiance{tiny_rad_cfg()};
    Camera cam = Camera::look_at({0, 0, 2.0}, {0, 0, 0}, 40.0, 32, 32);
    std::vector<Ray> rays;
    std::vector<Hit> hits;
    Mat drift_pts;
    Eigen::RowVectorXd drift_gt;

    DetailFixture() {
        Rng rng(2);
        radiance.init(rng);
        std::vector<std::pair<int, int>> pixels;
        for (int i = 0; i < 12; ++i) pixels.emplace_back(12 + (i % 5), 12 + (i / 2));
        rays = generate_rays(cam, pixels);
        hits = sphere_trace(field_sdf(field), rays, {});
        Rng drift_rng(3);
        drift_pts = sample_points(mesh, {.n_surface = 24, .n_uniform = 8, .sigma = 0.05}, drift_rng);
        drift_gt = sdf_gt(mesh, bvh, drift_pts, 0.02);
    }
};

}  // namespace

TEST_CASE("loss_coarse: zero when predictions equal targets and lambda is off") {
    SdfField f = tiny_field(4);
    Rng rng(5);
    const Mat pts = rng.normal_matrix(3, 16, 0.0, 0.4);
    const Eigen::RowVectorXd gt = f.sdf_raw(pts);  // targets = own predictions
    Tape t;
    const auto b = f.bind(t);
    const auto terms = loss_coarse(t, f, b, pts, gt, 0.0);
    CHECK(terms.geo.scalar() == 0.0);
    CHECK(terms.total.scalar() == 0.0);
}

TEST_CASE("loss_coarse: constant field has eikonal penalty exactly 1") {
    SdfField f(tiny_geo_cfg());
    for (Mat& m : f.params().values()) m.setZero();
    f.params()["geo.l7.b"](0, 0) = 0.37;  // f == 0.37 everywhere
    Rng rng(6);
    const Mat pts = rng.normal_matrix(3, 8, 0.0, 0.4);
    const Eigen::RowVectorXd gt = Eigen::RowVectorXd::Zero(8);
    Tape t;
    const auto b = f.bind(t);
    const auto terms = loss_coarse(t, f, b, pts, gt, 1.0);
    CHECK(terms.eik.scalar() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("loss_coarse: matches an independent summation oracle") {
    SdfField f = tiny_field(7);
    const TriMesh mesh = make_icosphere(2);
    const Bvh bvh(mesh);
    Rng rng(8);
    const Mat pts = sample_points(mesh, {.n_surface = 40, .n_uniform = 10, .sigma = 0.05}, rng);
    const Eigen::RowVectorXd gt = sdf_gt(mesh, bvh, pts, 0.02);
    const double lambda = 0.1;

    Tape t;
    const auto b = f.bind(t);
    const auto terms = loss_coarse(t, f, b, pts, gt, lambda);

    // independent accumulation through the raw evaluators
    const Eigen::RowVectorXd pred = f.sdf_raw(pts);
    const Mat grads = f.normals_raw(pts);
    double geo = 0.0, eik = 0.0;
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
        geo += std::abs(pred(i) - gt(i));
        const double dev = grads.col(i).norm() - 1.0;
        eik += dev * dev;
    }
    geo /= double(pts.cols());
    eik /= double(pts.cols());

    CHECK(std::abs(terms.geo.scalar() - geo) < 1e-12);
    CHECK(std::abs(terms.eik.scalar() - eik) < 1e-12);
    CHECK(std::abs(terms.total.scalar() - (geo + lambda * eik)) < 1e-12);
    CHECK(terms.total.scalar() >= 0.0);
}

TEST_CASE("eikonal penalty is exactly zero on an exact distance field") {
    // hand-built f(x) = ||x|| on the tape
    Rng rng(9);
    Tape t;
    const Value x = t.leaf(rng.normal_matrix(3, 10, 0.0, 0.8));
    const Value f = t.sqrt(t.sum_rows(t.mul(x, x)));  // 1 x n of norms
    const Value pen = eikonal_penalty(t, x, f);
    CHECK(pen.scalar() == doctest::Approx(0.0).epsilon(1e-24));
}

TEST_CASE("loss_coarse: tape gradients match finite differences on a width-16 net") {
    SdfField f = tiny_field(10);
    const TriMesh mesh = make_icosphere(1);
    const Bvh bvh(mesh);
    Rng rng(11);
    const Mat pts = sample_points(mesh, {.n_surface = 6, .n_uniform = 2, .sigma = 0.05}, rng);
    const Eigen::RowVectorXd gt = sdf_gt(mesh, bvh, pts, 0.02);

    Tape t;
    const auto b = f.bind(t);
    const auto terms = loss_coarse(t, f, b, pts, gt, 0.1);
    const auto grads = t.gradients(terms.total, b.leaves);

    auto eval = [&]() {
        Tape t2;
        const auto b2 = f.bind(t2);
        return loss_coarse(t2, f, b2, pts, gt, 0.1).total.scalar();
    };

    Rng probe(12);
    int checked = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 120; ++trial) {
        const size_t pi = probe.below(f.params().size());
        Mat& w = f.params().values()[pi];
        const Eigen::Index k = static_cast<Eigen::Index>(probe.below(static_cast<uint64_t>(w.size())));
        const double tape_d = grads[pi].data()[k];
        const double orig = w.data()[k];
        const double h = 1e-5;
        w.data()[k] = orig + h;
        const double fp = eval();
        w.data()[k] = orig - h;
        const double fm = eval();
        w.data()[k] = orig;
        const double fd = (fp - fm) / (2.0 * h);
        if (std::abs(fd) < 1e-7 && std::abs(tape_d) < 1e-7) continue;
        worst = std::max(worst, std::abs(fd - tape_d) / std::max({std::abs(fd), std::abs(tape_d), 1e-6}));
        ++checked;
    }
    CHECK(checked > 40);
    CHECK(worst < 1e-3);
}

TEST_CASE("loss_detail: zero photometric loss when targets equal the render") {
    DetailFixture fx;
    // read the current rendered colors for these rays
    Tape t0;
    const auto geo0 = fx.field.bind(t0);
    const auto rad0 = fx.radiance.bind(t0);
    const ShadeBatch shaded =
        shade_hits(t0, fx.field, geo0, fx.radiance, rad0, fx.rays, fx.hits, {}, 1e-6);
    REQUIRE(!shaded.rays.empty());

    Mat target = Mat::Zero(3, fx.rays.size());
    const Mat rgb = shaded.rgb.mat();
    for (size_t k = 0; k < shaded.rays.size(); ++k) target.col(shaded.rays[k]) = rgb.col(k);

    Tape t;
    const auto geo = fx.field.bind(t);
    const auto rad = fx.radiance.bind(t);
    const auto terms = loss_detail(t, fx.field, geo, fx.radiance, rad, fx.rays, fx.hits, target,
                                   fx.drift_pts, fx.drift_gt, 0.0, 0.0, {}, 1e-6);
    REQUIRE(terms.has_value());
    CHECK(terms->photo.scalar() == 0.0);
    CHECK(terms->total.scalar() == 0.0);
}

TEST_CASE("loss_detail: lambda1=lambda2=0 reduces to the photometric mean") {
    DetailFixture fx;
    Rng rng(13);
    Mat target(3, fx.rays.size());
    for (Eigen::Index i = 0; i < target.size(); ++i) target.data()[i] = rng.uniform();

    Tape t;
    const auto geo = fx.field.bind(t);
    const auto rad = fx.radiance.bind(t);
    const auto terms = loss_detail(t, fx.field, geo, fx.radiance, rad, fx.rays, fx.hits, target,
                                   fx.drift_pts, fx.drift_gt, 0.0, 0.0, {}, 1e-6);
    REQUIRE(terms.has_value());
    CHECK(terms->total.scalar() == terms->photo.scalar());

    // independent accumulation of the photometric term
    Tape t2;
    const auto geo2 = fx.field.bind(t2);
    const auto rad2 = fx.radiance.bind(t2);
    const ShadeBatch shaded =
        shade_hits(t2, fx.field, geo2, fx.radiance, rad2, fx.rays, fx.hits, {}, 1e-6);
    const Mat rgb = shaded.rgb.mat();
    double acc = 0.0;
    for (size_t k = 0; k < shaded.rays.size(); ++k)
        acc += (rgb.col(k) - target.col(shaded.rays[k])).cwiseAbs().sum();
    acc /= double(3 * shaded.rays.size());
    CHECK(std::abs(terms->photo.scalar() - acc) < 1e-12);
}

TEST_CASE("loss_detail: component sum identity and non-negativity") {
    DetailFixture fx;
    Rng rng(14);
    Mat target(3, fx.rays.size());
    for (Eigen::Index i = 0; i < target.size(); ++i) target.data()[i] = rng.uniform();

    Tape t;
    const auto geo = fx.field.bind(t);
    const auto rad = fx.radiance.bind(t);
    const double l1 = 0.7, l2 = 0.23;
    const auto terms = loss_detail(t, fx.field, geo, fx.radiance, rad, fx.rays, fx.hits, target,
                                   fx.drift_pts, fx.drift_gt, l1, l2, {}, 1e-6);
    REQUIRE(terms.has_value());
    const double sum = terms->photo.scalar() + l1 * terms->drift.scalar() + l2 * terms->eik.scalar();
    CHECK(std::abs(terms->total.scalar() - sum) < 1e-12);
    CHECK(terms->total.scalar() >= 0.0);
    CHECK(terms->photo.scalar() >= 0.0);
    CHECK(terms->drift.scalar() >= 0.0);
    CHECK(terms->eik.scalar() >= 0.0);
}

TEST_CASE("loss_detail: tape gradients match re-trace finite differences") {
    DetailFixture fx;
    Rng rng(15);
    Mat target(3, fx.rays.size());
    for (Eigen::Index i = 0; i < target.size(); ++i) target.data()[i] = rng.uniform();

    TracerConfig tc;
    tc.tol = 1e-9;  // tight tracing so the re-trace oracle is clean
    tc.secant_steps = 30;
    const auto hits = sphere_trace(field_sdf(fx.field), fx.rays, {}, tc);

    auto eval = [&]() {
        const auto h = sphere_trace(field_sdf(fx.field), fx.rays, {}, tc);
        Tape t2;
        const auto g2 = fx.field.bind(t2);
        const auto r2 = fx.radiance.bind(t2);
        const auto terms = loss_detail(t2, fx.field, g2, fx.radiance, r2, fx.rays, h, target, fx.drift_pts,
                                       fx.drift_gt, 0.5, 0.1, {}, 1e-6);
        return terms->total.scalar();
    };

    Tape t;
    const auto geo = fx.field.bind(t);
    const auto rad = fx.radiance.bind(t);
    const auto terms = loss_detail(t, fx.field, geo, fx.radiance, rad, fx.rays, hits, target, fx.drift_pts,
                                   fx.drift_gt, 0.5, 0.1, {}, 1e-6);
    REQUIRE(terms.has_value());
    std::vector<Value> wrt = geo.leaves;
    wrt.insert(wrt.end(), rad.leaves.begin(), rad.leaves.end());
    const auto grads = t.gradients(terms->total, wrt);

    std::vector<ParamSet*> sets{&fx.field.params(), &fx.radiance.params()};
    Rng probe(16);
    int checked = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 60; ++trial) {
        const int which = static_cast<int>(probe.below(2));
        ParamSet& ps = *sets[which];
        const size_t pi = probe.below(ps.size());
        Mat& w = ps.values()[pi];
        const Eigen::Index k = static_cast<Eigen::Index>(probe.below(static_cast<uint64_t>(w.size())));
        const size_t grad_idx = which == 0 ? pi : fx.field.params().size() + pi;
        const double tape_d = grads[grad_idx].data()[k];
        const double orig = w.data()[k];
        const double h = 1e-4;
        w.data()[k] = orig + h;
        const double fp = eval();
        w.data()[k] = orig - h;
        const double fm = eval();
        w.data()[k] = orig;
        const double fd = (fp - fm) / (2.0 * h);
        if (std::abs(fd) < 1e-6 && std::abs(tape_d) < 1e-6) continue;
        worst = std::max(worst, std::abs(fd - tape_d) / std::max({std::abs(fd), std::abs(tape_d), 1e-5}));
        ++checked;
    }
    CHECK(checked > 25);
    CHECK(worst < 1e-2);
}

TEST_CASE("run_coarse: zero epochs is a no-op with an empty report") {
    const TriMesh mesh = make_icosphere(1, 0.5);
    const Bvh bvh(mesh);
    SdfField f = tiny_field(17);
    const ParamSet before = f.params();
    CoarseConfig cfg;
    cfg.epochs = 0;
    cfg.holdout_points = 0;
    const TrainReport rep = run_coarse(f, mesh, bvh, cfg);
    CHECK(rep.epochs.empty());
    for (size_t i = 0; i < before.size(); ++i)
        CHECK(std::memcmp(before.values()[i].data(), f.params().values()[i].data(),
                          sizeof(double) * before.values()[i].size()) == 0);
}

TEST_CASE("run_coarse: short run reduces the loss and is bit-reproducible") {
    const TriMesh mesh = make_icosphere(2, 0.5);
    const Bvh bvh(mesh);
    CoarseConfig cfg;
    cfg.epochs = 40;
    cfg.points_per_epoch = 128;
    cfg.lr = 5e-4;
    cfg.seed = 99;
    cfg.holdout_points = 128;
    cfg.early_stop = false;

    SdfField f1 = tiny_field(18);
    const TrainReport r1 = run_coarse(f1, mesh, bvh, cfg);
    SdfField f2 = tiny_field(18);
    const TrainReport r2 = run_coarse(f2, mesh, bvh, cfg);

    REQUIRE(r1.epochs.size() == 40);
    CHECK(r1.epochs.back().total < r1.epochs.front().total);
    REQUIRE(r2.epochs.size() == r1.epochs.size());
    for (size_t i = 0; i < r1.epochs.size(); ++i) CHECK(r1.epochs[i].total == r2.epochs[i].total);
    for (size_t i = 0; i < f1.params().size(); ++i)
        CHECK(std::memcmp(f1.params().values()[i].data(), f2.params().values()[i].data(),
                          sizeof(double) * f1.params().values()[i].size()) == 0);
    CHECK(r1.holdout_mean_abs_err == r2.holdout_mean_abs_err);
}

TEST_CASE("run_detail: single-pixel overfit drives its photometric loss down") {
    const TriMesh mesh = make_icosphere(2, 0.5);
    const Bvh bvh(mesh);
    SdfField f = tiny_field(19);
    RadianceField g(tiny_rad_cfg());
    Rng rng(20);
    g.init(rng);

    const Camera cam = Camera::look_at({0, 0, 2.0}, {0, 0, 0}, 40.0, 32, 32);
    ImageRGB image(32, 32, {0.8, 0.3, 0.1});
    ImageGray mask(32, 32, 0.0);
    mask.at(16, 16) = 1.0;  // single foreground pixel through the sphere center

    DetailConfig cfg;
    cfg.epochs = 80;
    cfg.rays_per_step = 4;
    cfg.lambda1 = 0.0;
    cfg.lambda2 = 0.0;
    cfg.lr = 3e-3;
    cfg.seed = 5;
    cfg.drift_points_per_step = 8;
    cfg.early_stop = false;

    const TrainReport rep = run_detail(f, g, image, mask, cam, mesh, bvh, cfg);
    REQUIRE(rep.epochs.size() == 80);
    CHECK(rep.epochs.back().photo < 0.2 * rep.epochs.front().photo);
}

TEST_CASE("run_detail: dominant drift term pins the field to the shell SDF") {
    const TriMesh mesh = make_icosphere(2, 0.5);
    const Bvh bvh(mesh);
    SdfField f = tiny_field(21);
    // distill briefly so the field starts near the shell
    CoarseConfig ccfg;
    ccfg.epochs = 150;
    ccfg.points_per_epoch = 256;
    ccfg.lr = 1e-3;
    ccfg.seed = 1;
    ccfg.holdout_points = 0;
    ccfg.early_stop = false;
    run_coarse(f, mesh, bvh, ccfg);

    RadianceField g(tiny_rad_cfg());
    Rng rng(22);
    g.init(rng);
    const Camera cam = Camera::look_at({0, 0, 2.0}, {0, 0, 0}, 40.0, 32, 32);
    ImageRGB image(32, 32, {1.0, 0.0, 0.0});  // target the render cannot reach
    ImageGray mask(32, 32, 1.0);

    DetailConfig cfg;
    cfg.epochs = 40;
    cfg.rays_per_step = 64;
    cfg.lambda1 = 1e3;
    cfg.lambda2 = 0.1;
    cfg.lr = 1e-3;
    cfg.seed = 6;
    cfg.drift_points_per_step = 128;
    cfg.early_stop = false;
    const double eps = cfg.eps;
    run_detail(f, g, image, mask, cam, mesh, bvh, cfg);

    Rng check_rng(23);
    const Mat pts = sample_points(mesh, {.n_surface = 200, .n_uniform = 50, .sigma = 0.05}, check_rng);
    const Eigen::RowVectorXd gt = sdf_gt(mesh, bvh, pts, eps);
    const Eigen::RowVectorXd pred = f.sdf_raw(pts);
    CHECK((pred - gt).cwiseAbs().maxCoeff() < 2.0 * eps);
}

TEST_CASE("run_detail: an all-miss epoch aborts with a collapse diagnostic") {
    const TriMesh mesh = make_icosphere(1, 0.5);
    const Bvh bvh(mesh);
    SdfField f = tiny_field(24);
    RadianceField g(tiny_rad_cfg());
    Rng rng(25);
    g.init(rng);

    // camera pointed away from the init sphere: every masked ray misses
    const Camera cam = Camera::look_at({0, 0, 3.0}, {0, 0, 6.0}, 40.0, 16, 16);
    ImageRGB image(16, 16, {0.5, 0.5, 0.5});
    ImageGray mask(16, 16, 1.0);
    DetailConfig cfg;
    cfg.epochs = 3;
    cfg.rays_per_step = 16;
    cfg.drift_points_per_step = 16;
    cfg.seed = 7;
    CHECK_THROWS_AS((void)run_detail(f, g, image, mask, cam, mesh, bvh, cfg), DivergenceError);
}
