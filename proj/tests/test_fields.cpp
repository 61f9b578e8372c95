#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "relief/checkpoint.hpp"
#include "relief/encoding.hpp"
#include "relief/fields.hpp"
#include "relief/rng.hpp"

using namespace relief;

namespace {

SdfFieldConfig small_geo(int width = 32, int feature_dim = 8) {
    SdfFieldConfig cfg;
    cfg.width = width;
    cfg.depth = 8;
    cfg.skip_at = 4;
    cfg.feature_dim = feature_dim;
    return cfg;
}

void randomize(ParamSet& p, uint64_t seed, double scale = 0.4) {
    Rng rng(seed);
    for (Mat& m : p.values()) m = rng.normal_matrix(m.rows(), m.cols(), 0.0, scale / std::sqrt(double(m.cols())));
}

}  // namespace

TEST_CASE("positional encoding: zeros map to zero sines and unit cosines") {
    EncodingConfig cfg{2, true};
    const Mat out = positional_encode(Mat::Zero(3, 1), cfg);
    REQUIRE(out.rows() == 3 * (1 + 2 * 2));
    CHECK(out.topRows(3).isZero(0.0));
    // block order per frequency: sin then cos
    CHECK(out.middleRows(3, 3).isZero(0.0));
    CHECK((out.middleRows(6, 3).array() == 1.0).all());
    CHECK(out.middleRows(9, 3).isZero(0.0));
    CHECK((out.middleRows(12, 3).array() == 1.0).all());
}

TEST_CASE("positional encoding: L=0 with input is the identity") {
    EncodingConfig cfg{0, true};
    Rng rng(1);
    const Mat p = rng.normal_matrix(3, 7);
    CHECK(positional_encode(p, cfg) == p);
}

TEST_CASE("positional encoding: half-period component") {
    EncodingConfig cfg{1, true};
    const Mat out = positional_encode(Mat::Constant(1, 1, 0.5), cfg);
    REQUIRE(out.rows() == 3);
    CHECK(out(0, 0) == doctest::Approx(0.5));
    CHECK(out(1, 0) == doctest::Approx(1.0));          // sin(pi/2)
    CHECK(out(2, 0) == doctest::Approx(0.0).epsilon(1e-12));  // cos(pi/2)
}

TEST_CASE("positional encoding: dimension formula and tape/raw agreement") {
    Rng rng(2);
    for (int d : {1, 2, 3}) {
        for (int L : {0, 1, 4, 6}) {
            for (bool inc : {true, false}) {
                if (L == 0 && !inc) continue;
                EncodingConfig cfg{L, inc};
                const Mat p = rng.normal_matrix(d, 5);
                const Mat raw = positional_encode(p, cfg);
                CHECK(raw.rows() == cfg.out_dim(d));
                Tape t;
                const Mat taped = positional_encode(t, t.leaf(p), cfg).mat();
                CHECK((raw - taped).cwiseAbs().maxCoeff() == 0.0);
            }
        }
    }
}

TEST_CASE("sdf field: geometric init stays near the target sphere") {
    SdfField f(small_geo(128, 16));
    Rng rng(1);
    f.geometric_init(0.5, rng);
    Rng dirs(2);
    for (int i = 0; i < 200; ++i) {
        const Eigen::Vector3d x = 0.5 * dirs.normal_vec3().normalized();
        CHECK(std::abs(f.sdf_eval(x).first) < 0.05);
    }
    // non-degenerate: negative inside, positive outside
    CHECK(f.sdf_eval(Eigen::Vector3d::Zero()).first < 0.0);
    CHECK(f.sdf_eval(Eigen::Vector3d(0, 0, 0.95)).first > 0.0);
}

TEST_CASE("sdf field: evaluation is deterministic") {
    SdfField f(small_geo());
    randomize(f.params(), 9);
    Rng rng(3);
    const Mat x = rng.normal_matrix(3, 6, 0.0, 0.5);
    const Mat a = f.forward_raw(x);
    const Mat b = f.forward_raw(x);
    CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
}

TEST_CASE("sdf field: tape forward matches raw forward") {
    SdfField f(small_geo());
    randomize(f.params(), 21);
    Rng rng(4);
    const Mat x = rng.normal_matrix(3, 5, 0.0, 0.5);
    Tape t;
    const auto b = f.bind(t);
    const auto out = f.forward(t, b, t.leaf(x));
    const Mat raw = f.forward_raw(x);
    CHECK((out.sdf.mat() - raw.row(0)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((out.feature.mat() - raw.bottomRows(raw.rows() - 1)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("sdf field: spatial gradient matches finite differences") {
    SdfField f(small_geo());
    randomize(f.params(), 33);
    Rng rng(5);
    for (int trial = 0; trial < 4; ++trial) {
        const Eigen::Vector3d x = 0.6 * rng.normal_vec3();
        const Eigen::Vector3d g = f.normal(x);
        for (int k = 0; k < 3; ++k) {
            Eigen::Vector3d xp = x, xm = x;
            xp[k] += 1e-5;
            xm[k] -= 1e-5;
            const double fd = (f.sdf_eval(xp).first - f.sdf_eval(xm).first) / 2e-5;
            const double denom = std::max({std::abs(fd), std::abs(g[k]), 1e-6});
            CHECK(std::abs(fd - g[k]) / denom < 1e-4);
        }
    }
}

TEST_CASE("sdf field: skip connection is live") {
    SdfField f(small_geo());
    randomize(f.params(), 55);
    Rng rng(6);
    const Mat x = rng.normal_matrix(3, 4, 0.0, 0.5);
    const Mat before = f.forward_raw(x);

    // Zero the skip-layer columns that read the concatenated encoding; if the
    // skip path were dead this would not change the output.
    const Eigen::Index enc_dim = f.config().enc.out_dim(3);
    Mat& w = f.params()["geo.l4.w"];
    REQUIRE(w.cols() == f.config().width + enc_dim);
    w.rightCols(enc_dim).setZero();
    const Mat after = f.forward_raw(x);
    CHECK((before - after).cwiseAbs().maxCoeff() > 1e-8);
}

TEST_CASE("sdf field: checkpoint round-trip forwards bit-identically") {
    SdfField f(small_geo());
    Rng rng(7);
    f.geometric_init(0.5, rng);
    const auto path = std::filesystem::temp_directory_path() / "relief_field_ckpt.bin";
    nlohmann::json meta;
    meta["geo"] = f.config().to_json();
    save_checkpoint(path.string(), f.params(), meta);

    const Checkpoint ck = load_checkpoint(path.string());
    const SdfField g = SdfField::from_params(SdfFieldConfig::from_json(ck.meta["geo"]), ck.params);

    Rng xs(8);
    const Mat x = xs.normal_matrix(3, 9, 0.0, 0.5);
    const Mat a = f.forward_raw(x);
    const Mat b = g.forward_raw(x);
    CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
    std::filesystem::remove(path);
}

TEST_CASE("radiance field: outputs bounded in [0,1] for random inputs") {
    RadianceFieldConfig cfg;
    cfg.width = 32;
    cfg.depth = 4;
    cfg.feature_dim = 8;
    RadianceField g(cfg);
    randomize(g.params(), 77, 2.0);  // deliberately large weights
    Rng rng(9);
    const int n = 10000;
    const Mat x = rng.normal_matrix(3, n);
    const Mat nrm = rng.normal_matrix(3, n);
    Mat v = rng.normal_matrix(3, n);
    for (int i = 0; i < n; ++i) v.col(i).normalize();
    const Mat feat = rng.normal_matrix(8, n);
    const Mat rgb = g.forward_raw(x, nrm, v, feat, {});
    CHECK(rgb.minCoeff() >= 0.0);
    CHECK(rgb.maxCoeff() <= 1.0);
}

TEST_CASE("radiance field: toggles zero the corresponding input blocks") {
    RadianceFieldConfig cfg;
    cfg.width = 24;
    cfg.depth = 3;
    cfg.feature_dim = 6;
    RadianceField g(cfg);
    Rng rng(10);
    g.init(rng);
    randomize(g.params(), 88);

    Rng in(11);
    const int n = 5;
    const Mat x = in.normal_matrix(3, n, 0.0, 0.5);
    const Mat nrm = in.normal_matrix(3, n);
    Mat v = in.normal_matrix(3, n);
    for (int i = 0; i < n; ++i) v.col(i).normalize();
    const Mat feat = in.normal_matrix(6, n);

    // Ablated evaluation equals hand-zeroed blocks (architecture unchanged).
    const Mat ab = g.forward_raw(x, nrm, v, feat, {.use_normals = false, .use_feature = false});
    const Mat manual = g.forward_raw(x, Mat::Zero(3, n), v, Mat::Zero(6, n), {});
    CHECK((ab - manual).cwiseAbs().maxCoeff() == 0.0);

    // and sensitivity exists when on
    const Mat on = g.forward_raw(x, nrm, v, feat, {});
    CHECK((on - ab).cwiseAbs().maxCoeff() > 1e-9);

    // determinism
    const Mat on2 = g.forward_raw(x, nrm, v, feat, {});
    CHECK(std::memcmp(on.data(), on2.data(), sizeof(double) * on.size()) == 0);
}

TEST_CASE("radiance field: tape forward matches raw and rejects bad shapes") {
    RadianceFieldConfig cfg;
    cfg.width = 16;
    cfg.depth = 3;
    cfg.feature_dim = 4;
    RadianceField g(cfg);
    Rng rng(12);
    g.init(rng);

    Rng in(13);
    const int n = 3;
    const Mat x = in.normal_matrix(3, n, 0.0, 0.5);
    const Mat nrm = in.normal_matrix(3, n);
    Mat v = in.normal_matrix(3, n);
    for (int i = 0; i < n; ++i) v.col(i).normalize();
    const Mat feat = in.normal_matrix(4, n);

    Tape t;
    const auto b = g.bind(t);
    const Mat taped =
        g.forward(t, b, t.leaf(x), t.leaf(nrm), t.leaf(v), t.leaf(feat), {}).mat();
    const Mat raw = g.forward_raw(x, nrm, v, feat, {});
    CHECK((taped - raw).cwiseAbs().maxCoeff() < 1e-14);

    const Mat bad_feat = in.normal_matrix(5, n);
    CHECK_THROWS_AS((void)g.forward_raw(x, nrm, v, bad_feat, {}), std::invalid_argument);
}
