#pragma once

#include <json.hpp>

#include "relief/encoding.hpp"
#include "relief/params.hpp"
#include "relief/rng.hpp"

namespace relief {

/// Geometry network: an MLP mapping an encoded point to a signed distance
/// plus a feature vector consumed by the rendering network. Affine layers
/// with a skip concatenation of the encoded input, softplus activations
/// (smooth so spatial gradients stay twice differentiable), no activation
/// on the output.
struct SdfFieldConfig {
    int width = 512;
    int depth = 8;
    int skip_at = 4;       // layer whose input is [h, encoded x] / sqrt(2)
    int feature_dim = 256;
    double softplus_beta = 100.0;
    EncodingConfig enc{6, true};

    nlohmann::json to_json() const;
    static SdfFieldConfig from_json(const nlohmann::json& j);
};

struct SdfOutputs {
    Value sdf;      // 1 x n
    Value feature;  // F x n
};

class SdfField {
public:
    explicit SdfField(SdfFieldConfig cfg);

    /// Initializes weights so the field approximates a sphere of radius r
    /// centered at the origin (frequency channels of the encoding start at
    /// zero weight). Prevents a degenerate empty field before any training.
    void geometric_init(double radius, Rng& rng);

    TapeBinding bind(Tape& tape) const { return relief::bind(tape, params_); }

    /// Differentiable forward; x is 3 x n (any Value, leaf or intermediate).
    SdfOutputs forward(Tape& tape, const TapeBinding& b, Value x) const;

    /// Forward without a tape: returns (1+F) x n, row 0 is the SDF.
    Mat forward_raw(const Mat& x) const;
    Eigen::RowVectorXd sdf_raw(const Mat& x) const { return forward_raw(x).row(0); }

    /// Single-point conveniences.
    std::pair<double, Eigen::VectorXd> sdf_eval(const Eigen::Vector3d& x) const;
    Eigen::Vector3d normal(const Eigen::Vector3d& x) const;  // tape-backed spatial gradient
    Mat normals_raw(const Mat& x) const;                     // 3 x n

    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }
    const SdfFieldConfig& config() const { return cfg_; }

    static SdfField from_params(SdfFieldConfig cfg, ParamSet params);

private:
    Eigen::Index layer_in(int l) const;
    Eigen::Index layer_out(int l) const;

    SdfFieldConfig cfg_;
    ParamSet params_;
};

/// Rendering network: maps (encoded point, normal, encoded view dir,
/// geometry feature) to RGB in [0,1]^3. The four input blocks keep fixed
/// dimensions; ablation toggles replace a block's values with zeros rather
/// than shrinking the architecture.
struct RadianceFieldConfig {
    int width = 512;
    int depth = 4;
    int feature_dim = 256;     // must match the geometry field
    EncodingConfig enc_x{6, true};
    EncodingConfig enc_v{4, true};

    Eigen::Index input_dim() const {
        return enc_x.out_dim(3) + 3 + enc_v.out_dim(3) + feature_dim;
    }

    nlohmann::json to_json() const;
    static RadianceFieldConfig from_json(const nlohmann::json& j);
};

struct RenderToggles {
    bool use_normals = true;
    bool use_feature = true;
};

class RadianceField {
public:
    explicit RadianceField(RadianceFieldConfig cfg);

    void init(Rng& rng);

    TapeBinding bind(Tape& tape) const { return relief::bind(tape, params_); }

    /// x: 3 x n points, n: 3 x n normals, v: 3 x n unit view dirs,
    /// feature: F x n. Encodings are applied internally.
    Value forward(Tape& tape, const TapeBinding& b, Value x, Value n, Value v, Value feature,
                  const RenderToggles& toggles) const;

    Mat forward_raw(const Mat& x, const Mat& n, const Mat& v, const Mat& feature,
                    const RenderToggles& toggles) const;

    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }
    const RadianceFieldConfig& config() const { return cfg_; }

    static RadianceField from_params(RadianceFieldConfig cfg, ParamSet params);

private:
    Eigen::Index layer_in(int l) const;
    Eigen::Index layer_out(int l) const;

    RadianceFieldConfig cfg_;
    ParamSet params_;
};

}  // namespace relief
