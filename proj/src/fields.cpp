#include "relief/fields.hpp"

#include <cmath>
#include <stdexcept>

namespace relief {

namespace {

std::string lname(const char* prefix, int l, const char* part) {
    return std::string(prefix) + ".l" + std::to_string(l) + "." + part;
}

Mat raw_softplus(const Mat& x, double beta) {
    return x.unaryExpr([beta](double v) {
        const double bv = beta * v;
        return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(bv))) / beta;
    });
}

Mat raw_sigmoid(const Mat& x) {
    return x.unaryExpr([](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
    });
}

void check_params(const ParamSet& got, const ParamSet& expect, const char* what) {
    if (got.size() != expect.size()) throw std::invalid_argument(std::string(what) + ": parameter count mismatch");
    for (size_t i = 0; i < expect.size(); ++i) {
        const Mat& g = got[expect.names()[i]];
        const Mat& e = expect.values()[i];
        if (g.rows() != e.rows() || g.cols() != e.cols())
            throw std::invalid_argument(std::string(what) + ": shape mismatch for " + expect.names()[i]);
    }
}

}  // namespace

// --- SdfField ---------------------------------------------------------------

nlohmann::json SdfFieldConfig::to_json() const {
    return {{"width", width},         {"depth", depth},
            {"skip_at", skip_at},     {"feature_dim", feature_dim},
            {"softplus_beta", softplus_beta},
            {"enc", {{"num_freqs", enc.num_freqs}, {"include_input", enc.include_input}}}};
}

SdfFieldConfig SdfFieldConfig::from_json(const nlohmann::json& j) {
    SdfFieldConfig c;
    c.width = j.at("width").get<int>();
    c.depth = j.at("depth").get<int>();
    c.skip_at = j.at("skip_at").get<int>();
    c.feature_dim = j.at("feature_dim").get<int>();
    c.softplus_beta = j.at("softplus_beta").get<double>();
    c.enc.num_freqs = j.at("enc").at("num_freqs").get<int>();
    c.enc.include_input = j.at("enc").at("include_input").get<bool>();
    return c;
}

Eigen::Index SdfField::layer_in(int l) const {
    const Eigen::Index enc_dim = cfg_.enc.out_dim(3);
    if (l == 0) return enc_dim;
    if (l == cfg_.skip_at) return cfg_.width + enc_dim;
    return cfg_.width;
}

Eigen::Index SdfField::layer_out(int l) const {
    return l == cfg_.depth - 1 ? 1 + cfg_.feature_dim : cfg_.width;
}

SdfField::SdfField(SdfFieldConfig cfg) : cfg_(cfg) {
    if (cfg_.depth < 2 || cfg_.skip_at <= 0 || cfg_.skip_at >= cfg_.depth)
        throw std::invalid_argument("SdfField: bad depth/skip configuration");
    for (int l = 0; l < cfg_.depth; ++l) {
        params_.add(lname("geo", l, "w"), Mat::Zero(layer_out(l), layer_in(l)));
        params_.add(lname("geo", l, "b"), Mat::Zero(layer_out(l), 1));
    }
}

void SdfField::geometric_init(double radius, Rng& rng) {
    const Eigen::Index enc_dim = cfg_.enc.out_dim(3);
    for (int l = 0; l < cfg_.depth; ++l) {
        Mat& w = params_[lname("geo", l, "w")];
        Mat& b = params_[lname("geo", l, "b")];
        if (l == cfg_.depth - 1) {
            w = rng.normal_matrix(w.rows(), w.cols(), std::sqrt(M_PI) / std::sqrt(double(w.cols())), 1e-5);
            b.setZero();
            b(0, 0) = -radius;
        } else {
            w = rng.normal_matrix(w.rows(), w.cols(), 0.0, std::sqrt(2.0 / double(w.rows())));
            b.setZero();
            // Frequency channels start silent so the init is exact in xyz.
            if (l == 0 && cfg_.enc.include_input && enc_dim > 3) w.rightCols(enc_dim - 3).setZero();
            if (l == cfg_.skip_at && cfg_.enc.include_input && enc_dim > 3) w.rightCols(enc_dim - 3).setZero();
        }
    }

    // The random backbone only approximates a sphere to O(1/sqrt(width)),
    // which is too loose at small widths. Calibrate the SDF output row with a
    // closed-form ridge fit of the last hidden layer against ||x|| - radius,
    // sampled in the scene box and densified near the target surface.
    const int n_box = 2048;
    const int n_shell = 2048;
    Mat pts(3, n_box + n_shell);
    Rng fit_rng = rng.split(0x5EED);
    for (int i = 0; i < n_box; ++i)
        pts.col(i) = Eigen::Vector3d(fit_rng.uniform(-1, 1), fit_rng.uniform(-1, 1), fit_rng.uniform(-1, 1));
    for (int i = 0; i < n_shell; ++i) {
        const Eigen::Vector3d dir = fit_rng.normal_vec3().normalized();
        pts.col(n_box + i) = (radius + 0.25 * fit_rng.normal()) * dir;
    }

    Mat h = positional_encode(pts, cfg_.enc);
    const Mat enc = h;
    for (int l = 0; l < cfg_.depth - 1; ++l) {
        if (l == cfg_.skip_at) {
            Mat cat(h.rows() + enc.rows(), h.cols());
            cat.topRows(h.rows()) = h;
            cat.bottomRows(enc.rows()) = enc;
            h = (1.0 / std::sqrt(2.0)) * cat;
        }
        const Mat& w = params_.values()[2 * l];
        const Mat& bias = params_.values()[2 * l + 1];
        h = raw_softplus((w * h).colwise() + Eigen::VectorXd(bias.col(0)), cfg_.softplus_beta);
    }

    Mat haug(h.rows() + 1, h.cols());
    haug.topRows(h.rows()) = h;
    haug.bottomRows(1).setOnes();
    const Eigen::VectorXd target = pts.colwise().norm().array() - radius;
    const Mat gram = haug * haug.transpose() + 1e-6 * double(haug.cols()) * Mat::Identity(haug.rows(), haug.rows());
    const Eigen::VectorXd sol = gram.ldlt().solve(haug * target);

    Mat& w_last = params_[lname("geo", cfg_.depth - 1, "w")];
    Mat& b_last = params_[lname("geo", cfg_.depth - 1, "b")];
    w_last.row(0) = sol.head(h.rows()).transpose();
    b_last(0, 0) = sol(h.rows());
}

SdfOutputs SdfField::forward(Tape& tape, const TapeBinding& b, Value x) const {
    if (x.rows() != 3) throw std::invalid_argument("SdfField: expected 3 x n points");
    const Value enc = positional_encode(tape, x, cfg_.enc);
    const Eigen::Index n = x.cols();
    Value h = enc;
    for (int l = 0; l < cfg_.depth; ++l) {
        if (l == cfg_.skip_at) h = tape.scale(tape.concat_rows(h, enc), 1.0 / std::sqrt(2.0));
        const Value w = b.leaves[2 * l];
        const Value bias = b.leaves[2 * l + 1];
        h = tape.add(tape.matmul(w, h), tape.broadcast_cols(bias, n));
        if (l < cfg_.depth - 1) h = tape.softplus(h, cfg_.softplus_beta);
    }
    return {tape.slice_rows(h, 0, 1), tape.slice_rows(h, 1, 1 + cfg_.feature_dim)};
}

Mat SdfField::forward_raw(const Mat& x) const {
    if (x.rows() != 3) throw std::invalid_argument("SdfField: expected 3 x n points");
    const Mat enc = positional_encode(x, cfg_.enc);
    Mat h = enc;
    for (int l = 0; l < cfg_.depth; ++l) {
        if (l == cfg_.skip_at) {
            Mat cat(h.rows() + enc.rows(), h.cols());
            cat.topRows(h.rows()) = h;
            cat.bottomRows(enc.rows()) = enc;
            h = (1.0 / std::sqrt(2.0)) * cat;  // same op order as the tape path
        }
        const Mat& w = params_.values()[2 * l];
        const Mat& bias = params_.values()[2 * l + 1];
        h = (w * h).colwise() + Eigen::VectorXd(bias.col(0));
        if (l < cfg_.depth - 1) h = raw_softplus(h, cfg_.softplus_beta);
    }
    return h;
}

std::pair<double, Eigen::VectorXd> SdfField::sdf_eval(const Eigen::Vector3d& x) const {
    const Mat out = forward_raw(x);
    return {out(0, 0), out.col(0).tail(cfg_.feature_dim)};
}

Eigen::Vector3d SdfField::normal(const Eigen::Vector3d& x) const { return normals_raw(x).col(0); }

Mat SdfField::normals_raw(const Mat& x) const {
    Tape tape;
    const TapeBinding b = bind(tape);
    const Value xs = tape.leaf(x);
    const SdfOutputs out = forward(tape, b, xs);
    // Columns are independent, so one backward of the summed SDF yields the
    // per-point spatial gradients.
    return tape.gradients(tape.sum_all(out.sdf), {xs})[0];
}

SdfField SdfField::from_params(SdfFieldConfig cfg, ParamSet params) {
    SdfField f(cfg);
    check_params(params, f.params_, "SdfField");
    for (size_t i = 0; i < f.params_.size(); ++i)
        f.params_.values()[i] = params[f.params_.names()[i]];
    return f;
}

// --- RadianceField -----------------------------------------------------------

nlohmann::json RadianceFieldConfig::to_json() const {
    return {{"width", width},
            {"depth", depth},
            {"feature_dim", feature_dim},
            {"enc_x", {{"num_freqs", enc_x.num_freqs}, {"include_input", enc_x.include_input}}},
            {"enc_v", {{"num_freqs", enc_v.num_freqs}, {"include_input", enc_v.include_input}}}};
}

RadianceFieldConfig RadianceFieldConfig::from_json(const nlohmann::json& j) {
    RadianceFieldConfig c;
    c.width = j.at("width").get<int>();
    c.depth = j.at("depth").get<int>();
    c.feature_dim = j.at("feature_dim").get<int>();
    c.enc_x.num_freqs = j.at("enc_x").at("num_freqs").get<int>();
    c.enc_x.include_input = j.at("enc_x").at("include_input").get<bool>();
    c.enc_v.num_freqs = j.at("enc_v").at("num_freqs").get<int>();
    c.enc_v.include_input = j.at("enc_v").at("include_input").get<bool>();
    return c;
}

Eigen::Index RadianceField::layer_in(int l) const { return l == 0 ? cfg_.input_dim() : cfg_.width; }
Eigen::Index RadianceField::layer_out(int l) const { return l == cfg_.depth - 1 ? 3 : cfg_.width; }

RadianceField::RadianceField(RadianceFieldConfig cfg) : cfg_(cfg) {
    if (cfg_.depth < 2) throw std::invalid_argument("RadianceField: depth too small");
    for (int l = 0; l < cfg_.depth; ++l) {
        params_.add(lname("rad", l, "w"), Mat::Zero(layer_out(l), layer_in(l)));
        params_.add(lname("rad", l, "b"), Mat::Zero(layer_out(l), 1));
    }
}

void RadianceField::init(Rng& rng) {
    for (int l = 0; l < cfg_.depth; ++l) {
        Mat& w = params_[lname("rad", l, "w")];
        Mat& b = params_[lname("rad", l, "b")];
        b.setZero();
        if (l == cfg_.depth - 1) {
            // Small output weights: the initial render is mid-gray.
            w = rng.normal_matrix(w.rows(), w.cols(), 0.0, 1e-2 / std::sqrt(double(w.cols())));
        } else {
            w = rng.normal_matrix(w.rows(), w.cols(), 0.0, std::sqrt(2.0 / double(w.cols())));
        }
    }
}

Value RadianceField::forward(Tape& tape, const TapeBinding& b, Value x, Value n, Value v, Value feature,
                             const RenderToggles& toggles) const {
    const Eigen::Index cols = x.cols();
    if (n.rows() != 3 || v.rows() != 3 || feature.rows() != cfg_.feature_dim ||
        n.cols() != cols || v.cols() != cols || feature.cols() != cols)
        throw std::invalid_argument("RadianceField: input block shape mismatch");

    const Value enc_x = positional_encode(tape, x, cfg_.enc_x);
    const Value enc_v = positional_encode(tape, v, cfg_.enc_v);
    const Value nb = toggles.use_normals ? n : tape.constant(Mat::Zero(3, cols));
    const Value fb = toggles.use_feature ? feature : tape.constant(Mat::Zero(cfg_.feature_dim, cols));

    Value h = tape.concat_rows(tape.concat_rows(enc_x, nb), tape.concat_rows(enc_v, fb));
    for (int l = 0; l < cfg_.depth; ++l) {
        h = tape.add(tape.matmul(b.leaves[2 * l], h), tape.broadcast_cols(b.leaves[2 * l + 1], cols));
        if (l < cfg_.depth - 1) h = tape.relu(h);
    }
    return tape.sigmoid(h);
}

Mat RadianceField::forward_raw(const Mat& x, const Mat& n, const Mat& v, const Mat& feature,
                               const RenderToggles& toggles) const {
    const Eigen::Index cols = x.cols();
    if (n.rows() != 3 || v.rows() != 3 || feature.rows() != cfg_.feature_dim ||
        n.cols() != cols || v.cols() != cols || feature.cols() != cols)
        throw std::invalid_argument("RadianceField: input block shape mismatch");

    const Mat enc_x = positional_encode(x, cfg_.enc_x);
    const Mat enc_v = positional_encode(v, cfg_.enc_v);
    Mat h(cfg_.input_dim(), cols);
    Eigen::Index r = 0;
    h.middleRows(r, enc_x.rows()) = enc_x;
    r += enc_x.rows();
    h.middleRows(r, 3) = toggles.use_normals ? n : Mat::Zero(3, cols);
    r += 3;
    h.middleRows(r, enc_v.rows()) = enc_v;
    r += enc_v.rows();
    h.middleRows(r, cfg_.feature_dim) = toggles.use_feature ? feature : Mat::Zero(cfg_.feature_dim, cols);

    for (int l = 0; l < cfg_.depth; ++l) {
        const Mat& w = params_.values()[2 * l];
        const Mat& bias = params_.values()[2 * l + 1];
        h = (w * h).colwise() + Eigen::VectorXd(bias.col(0));
        if (l < cfg_.depth - 1) h = h.cwiseMax(0.0);
    }
    return raw_sigmoid(h);
}

RadianceField RadianceField::from_params(RadianceFieldConfig cfg, ParamSet params) {
    RadianceField f(cfg);
    check_params(params, f.params_, "RadianceField");
    for (size_t i = 0; i < f.params_.size(); ++i)
        f.params_.values()[i] = params[f.params_.names()[i]];
    return f;
}

}  // namespace relief
