#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace relief {

using Mat = Eigen::MatrixXd;

class Tape;

/// Handle to a node on a tape. Cheap to copy; owns nothing.
struct Value {
    Tape* tape = nullptr;
    int32_t idx = -1;

    bool valid() const { return tape != nullptr && idx >= 0; }
    const Mat& mat() const;
    double scalar() const;  // requires a 1x1 node
    Eigen::Index rows() const;
    Eigen::Index cols() const;
};

/// Reverse-mode differentiation graph over dense f64 matrices.
///
/// Nodes are appended in topological order (parents strictly before
/// children). backward() replays the graph in reverse and records the
/// adjoint computation as ordinary tape ops, so gradients are themselves
/// differentiable: input gradients (surface normals, eikonal residuals)
/// can be fed into a loss and differentiated again w.r.t. parameters.
///
/// A tape is single-threaded. Parameters are bound as leaves per tape;
/// snapshots may be shared across tapes freely since the tape copies
/// leaf payloads.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // --- graph inputs -----------------------------------------------------
    Value leaf(const Mat& m);                 // differentiable leaf
    Value leaf(double s) { return leaf(Mat::Constant(1, 1, s)); }
    Value constant(const Mat& m);             // detached from differentiation
    Value constant(double s) { return constant(Mat::Constant(1, 1, s)); }

    // --- arithmetic -------------------------------------------------------
    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    Value neg(Value a);
    Value mul(Value a, Value b);              // elementwise
    Value scale(Value a, double c);
    Value add_scalar(Value a, double c);
    Value matmul(Value a, Value b);
    Value transpose(Value a);

    // --- reductions and broadcasts ----------------------------------------
    Value sum_cols(Value a);                  // r x n -> r x 1
    Value broadcast_cols(Value a, Eigen::Index n);
    Value sum_rows(Value a);                  // r x n -> 1 x n
    Value broadcast_rows(Value a, Eigen::Index r);
    Value sum_all(Value a);                   // -> 1 x 1
    Value broadcast_all(Value a, Eigen::Index r, Eigen::Index n);
    Value mean_all(Value a);

    // --- elementwise nonlinearities ----------------------------------------
    Value sin(Value a);
    Value cos(Value a);
    Value sqrt(Value a);
    Value abs(Value a);
    Value relu(Value a);
    Value sigmoid(Value a);
    Value softplus(Value a, double beta);     // (1/beta) * log(1 + exp(beta*x))
    Value recip_clamped(Value a, double floor);  // 1 / max(a, floor)

    // --- shape surgery ------------------------------------------------------
    Value concat_rows(Value a, Value b);
    Value slice_rows(Value a, Eigen::Index r0, Eigen::Index r1);  // half-open
    Value pad_rows(Value a, Eigen::Index r0, Eigen::Index total);

    // --- differentiation ----------------------------------------------------
    /// d(loss)/d(each wrt), materialized. loss must be scalar; wrt entries
    /// unreachable from loss get zero gradients of matching shape.
    std::vector<Mat> gradients(Value loss, const std::vector<Value>& wrt);

    /// Same, but the gradients stay live on the tape for further
    /// differentiation (this is the nested-gradient entry point).
    std::vector<Value> gradient_values(Value loss, const std::vector<Value>& wrt);

    /// Gradient of a scalar output w.r.t. one input as a live Value.
    Value input_gradient(Value f_out, Value x_in) { return gradient_values(f_out, {x_in})[0]; }

    // --- introspection ------------------------------------------------------
    const Mat& value(Value v) const;
    size_t size() const { return nodes_.size(); }
    bool requires_grad(Value v) const;

private:
    enum class Op : uint8_t {
        kLeaf, kConst,
        kAdd, kSub, kNeg, kMul, kScale, kAddScalar, kMatMul, kTranspose,
        kSumCols, kBroadcastCols, kSumRows, kBroadcastRows, kSumAll, kBroadcastAll,
        kSin, kCos, kSqrt, kAbs, kRelu, kSigmoid, kSoftplus, kRecipClamped,
        kConcatRows, kSliceRows, kPadRows,
    };

    struct Node {
        Op op;
        bool diff;        // depends on a differentiable leaf
        int32_t a = -1;   // parents
        int32_t b = -1;
        double c = 0.0;   // scalar operand (scale factor, beta, clamp floor)
        int64_t i0 = 0;   // aux (slice bounds, broadcast extents)
        int64_t i1 = 0;
        Mat val;
    };

    Value push(Op op, Mat val, int32_t a = -1, int32_t b = -1, double c = 0.0, int64_t i0 = 0, int64_t i1 = 0);
    const Node& node(Value v) const;
    void check_same_tape(Value v) const;
    void check_same_shape(Value a, Value b) const;
    void accumulate(std::vector<int32_t>& adj, int32_t target, Value contribution);
    void backward_sweep(Value loss, std::vector<int32_t>& adj);

    std::vector<Node> nodes_;
};

inline const Mat& Value::mat() const { return tape->value(*this); }
inline double Value::scalar() const { return mat()(0, 0); }
inline Eigen::Index Value::rows() const { return mat().rows(); }
inline Eigen::Index Value::cols() const { return mat().cols(); }

}  // namespace relief
