#include "relief/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace relief {

namespace {

Mat stable_sigmoid(const Mat& x) {
    return x.unaryExpr([](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
    });
}

Mat stable_softplus(const Mat& x, double beta) {
    return x.unaryExpr([beta](double v) {
        const double bv = beta * v;
        return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(bv))) / beta;
    });
}

}  // namespace

Value Tape::push(Op op, Mat val, int32_t a, int32_t b, double c, int64_t i0, int64_t i1) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.c = c;
    n.i0 = i0;
    n.i1 = i1;
    n.val = std::move(val);
    n.diff = (op == Op::kLeaf);
    if (a >= 0) n.diff = n.diff || nodes_[a].diff;
    if (b >= 0) n.diff = n.diff || nodes_[b].diff;
    nodes_.push_back(std::move(n));
    return Value{this, static_cast<int32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Value v) const {
    check_same_tape(v);
    return nodes_[v.idx];
}

void Tape::check_same_tape(Value v) const {
    if (v.tape != this || v.idx < 0 || v.idx >= static_cast<int32_t>(nodes_.size()))
        throw std::invalid_argument("tape: value does not belong to this tape");
}

void Tape::check_same_shape(Value a, Value b) const {
    const Mat& ma = node(a).val;
    const Mat& mb = node(b).val;
    if (ma.rows() != mb.rows() || ma.cols() != mb.cols())
        throw std::invalid_argument("tape: shape mismatch");
}

const Mat& Tape::value(Value v) const { return node(v).val; }

bool Tape::requires_grad(Value v) const { return node(v).diff; }

Value Tape::leaf(const Mat& m) { return push(Op::kLeaf, m); }
Value Tape::constant(const Mat& m) { return push(Op::kConst, m); }

Value Tape::add(Value a, Value b) {
    check_same_shape(a, b);
    return push(Op::kAdd, node(a).val + node(b).val, a.idx, b.idx);
}

Value Tape::sub(Value a, Value b) {
    check_same_shape(a, b);
    return push(Op::kSub, node(a).val - node(b).val, a.idx, b.idx);
}

Value Tape::neg(Value a) { return push(Op::kNeg, -node(a).val, a.idx); }

Value Tape::mul(Value a, Value b) {
    check_same_shape(a, b);
    return push(Op::kMul, node(a).val.cwiseProduct(node(b).val), a.idx, b.idx);
}

Value Tape::scale(Value a, double c) { return push(Op::kScale, c * node(a).val, a.idx, -1, c); }

Value Tape::add_scalar(Value a, double c) {
    return push(Op::kAddScalar, (node(a).val.array() + c).matrix(), a.idx, -1, c);
}

Value Tape::matmul(Value a, Value b) {
    if (node(a).val.cols() != node(b).val.rows()) throw std::invalid_argument("tape: matmul inner dims");
    return push(Op::kMatMul, node(a).val * node(b).val, a.idx, b.idx);
}

Value Tape::transpose(Value a) { return push(Op::kTranspose, node(a).val.transpose(), a.idx); }

Value Tape::sum_cols(Value a) { return push(Op::kSumCols, node(a).val.rowwise().sum(), a.idx); }

Value Tape::broadcast_cols(Value a, Eigen::Index n) {
    if (node(a).val.cols() != 1) throw std::invalid_argument("tape: broadcast_cols wants a column");
    return push(Op::kBroadcastCols, node(a).val.replicate(1, n), a.idx, -1, 0.0, n);
}

Value Tape::sum_rows(Value a) { return push(Op::kSumRows, node(a).val.colwise().sum(), a.idx); }

Value Tape::broadcast_rows(Value a, Eigen::Index r) {
    if (node(a).val.rows() != 1) throw std::invalid_argument("tape: broadcast_rows wants a row");
    return push(Op::kBroadcastRows, node(a).val.replicate(r, 1), a.idx, -1, 0.0, r);
}

Value Tape::sum_all(Value a) { return push(Op::kSumAll, Mat::Constant(1, 1, node(a).val.sum()), a.idx); }

Value Tape::broadcast_all(Value a, Eigen::Index r, Eigen::Index n) {
    if (node(a).val.size() != 1) throw std::invalid_argument("tape: broadcast_all wants a scalar");
    return push(Op::kBroadcastAll, Mat::Constant(r, n, node(a).val(0, 0)), a.idx, -1, 0.0, r, n);
}

Value Tape::mean_all(Value a) {
    const auto sz = static_cast<double>(node(a).val.size());
    return scale(sum_all(a), 1.0 / sz);
}

Value Tape::sin(Value a) { return push(Op::kSin, node(a).val.array().sin().matrix(), a.idx); }
Value Tape::cos(Value a) { return push(Op::kCos, node(a).val.array().cos().matrix(), a.idx); }
Value Tape::sqrt(Value a) { return push(Op::kSqrt, node(a).val.array().sqrt().matrix(), a.idx); }
Value Tape::abs(Value a) { return push(Op::kAbs, node(a).val.array().abs().matrix(), a.idx); }
Value Tape::relu(Value a) { return push(Op::kRelu, node(a).val.cwiseMax(0.0), a.idx); }
Value Tape::sigmoid(Value a) { return push(Op::kSigmoid, stable_sigmoid(node(a).val), a.idx); }

Value Tape::softplus(Value a, double beta) {
    if (beta <= 0.0) throw std::invalid_argument("tape: softplus beta must be positive");
    return push(Op::kSoftplus, stable_softplus(node(a).val, beta), a.idx, -1, beta);
}

Value Tape::recip_clamped(Value a, double floor) {
    if (floor <= 0.0) throw std::invalid_argument("tape: recip_clamped floor must be positive");
    return push(Op::kRecipClamped, node(a).val.cwiseMax(floor).cwiseInverse(), a.idx, -1, floor);
}

Value Tape::concat_rows(Value a, Value b) {
    const Mat& ma = node(a).val;
    const Mat& mb = node(b).val;
    if (ma.cols() != mb.cols()) throw std::invalid_argument("tape: concat_rows column mismatch");
    Mat out(ma.rows() + mb.rows(), ma.cols());
    out.topRows(ma.rows()) = ma;
    out.bottomRows(mb.rows()) = mb;
    return push(Op::kConcatRows, std::move(out), a.idx, b.idx, 0.0, ma.rows());
}

Value Tape::slice_rows(Value a, Eigen::Index r0, Eigen::Index r1) {
    const Mat& m = node(a).val;
    if (r0 < 0 || r1 > m.rows() || r0 >= r1) throw std::invalid_argument("tape: slice_rows bounds");
    return push(Op::kSliceRows, m.middleRows(r0, r1 - r0), a.idx, -1, 0.0, r0, r1);
}

Value Tape::pad_rows(Value a, Eigen::Index r0, Eigen::Index total) {
    const Mat& m = node(a).val;
    if (r0 < 0 || r0 + m.rows() > total) throw std::invalid_argument("tape: pad_rows bounds");
    Mat out = Mat::Zero(total, m.cols());
    out.middleRows(r0, m.rows()) = m;
    return push(Op::kPadRows, std::move(out), a.idx, -1, 0.0, r0, total);
}

void Tape::accumulate(std::vector<int32_t>& adj, int32_t target, Value contribution) {
    if (adj[target] < 0)
        adj[target] = contribution.idx;
    else
        adj[target] = add(Value{this, adj[target]}, contribution).idx;
}

// Reverse sweep from `loss`. Adjoints are created as ordinary tape nodes so
// every gradient remains differentiable. Adjoints only flow into parents
// that depend on a differentiable leaf; detached subgraphs stay untouched.
void Tape::backward_sweep(Value loss, std::vector<int32_t>& adj) {
    const int32_t top = loss.idx;
    std::vector<uint8_t> reach(top + 1, 0);
    reach[top] = 1;
    for (int32_t i = top; i >= 0; --i) {
        if (!reach[i]) continue;
        const Node& n = nodes_[i];
        if (n.a >= 0 && nodes_[n.a].diff) reach[n.a] = 1;
        if (n.b >= 0 && nodes_[n.b].diff) reach[n.b] = 1;
    }

    adj.assign(top + 1, -1);
    adj[top] = constant(Mat::Ones(1, 1)).idx;

    for (int32_t i = top; i >= 0; --i) {
        if (!reach[i] || adj[i] < 0) continue;
        // Snapshot: vjp rules append nodes, which may invalidate references.
        const Node n = nodes_[i];
        const Value g{this, adj[i]};
        const bool da = n.a >= 0 && nodes_[n.a].diff;
        const bool db = n.b >= 0 && nodes_[n.b].diff;
        const Value pa{this, n.a};
        const Value pb{this, n.b};

        switch (n.op) {
            case Op::kLeaf:
            case Op::kConst:
                break;
            case Op::kAdd:
                if (da) accumulate(adj, n.a, g);
                if (db) accumulate(adj, n.b, g);
                break;
            case Op::kSub:
                if (da) accumulate(adj, n.a, g);
                if (db) accumulate(adj, n.b, neg(g));
                break;
            case Op::kNeg:
                if (da) accumulate(adj, n.a, neg(g));
                break;
            case Op::kMul:
                if (da) accumulate(adj, n.a, mul(g, pb));
                if (db) accumulate(adj, n.b, mul(g, pa));
                break;
            case Op::kScale:
                if (da) accumulate(adj, n.a, scale(g, n.c));
                break;
            case Op::kAddScalar:
                if (da) accumulate(adj, n.a, g);
                break;
            case Op::kMatMul:
                if (da) accumulate(adj, n.a, matmul(g, transpose(pb)));
                if (db) accumulate(adj, n.b, matmul(transpose(pa), g));
                break;
            case Op::kTranspose:
                if (da) accumulate(adj, n.a, transpose(g));
                break;
            case Op::kSumCols:
                if (da) accumulate(adj, n.a, broadcast_cols(g, nodes_[n.a].val.cols()));
                break;
            case Op::kBroadcastCols:
                if (da) accumulate(adj, n.a, sum_cols(g));
                break;
            case Op::kSumRows:
                if (da) accumulate(adj, n.a, broadcast_rows(g, nodes_[n.a].val.rows()));
                break;
            case Op::kBroadcastRows:
                if (da) accumulate(adj, n.a, sum_rows(g));
                break;
            case Op::kSumAll:
                if (da) accumulate(adj, n.a, broadcast_all(g, nodes_[n.a].val.rows(), nodes_[n.a].val.cols()));
                break;
            case Op::kBroadcastAll:
                if (da) accumulate(adj, n.a, sum_all(g));
                break;
            case Op::kSin:
                if (da) accumulate(adj, n.a, mul(g, cos(pa)));
                break;
            case Op::kCos:
                if (da) accumulate(adj, n.a, neg(mul(g, sin(pa))));
                break;
            case Op::kSqrt: {
                // d sqrt = g / (2 sqrt); the clamp keeps the degenerate
                // zero-norm case finite (subgradient 0 there).
                if (da) {
                    const Value y{this, i};
                    accumulate(adj, n.a, scale(mul(g, recip_clamped(y, 1e-100)), 0.5));
                }
                break;
            }
            case Op::kAbs:
                if (da) {
                    Mat sign = n.val;  // |a|
                    const Mat& src = nodes_[n.a].val;
                    for (Eigen::Index k = 0; k < sign.size(); ++k)
                        sign.data()[k] = src.data()[k] > 0.0 ? 1.0 : (src.data()[k] < 0.0 ? -1.0 : 0.0);
                    accumulate(adj, n.a, mul(g, constant(sign)));
                }
                break;
            case Op::kRelu:
                if (da) {
                    const Mat mask = (nodes_[n.a].val.array() > 0.0).cast<double>().matrix();
                    accumulate(adj, n.a, mul(g, constant(mask)));
                }
                break;
            case Op::kSigmoid:
                if (da) {
                    const Value y{this, i};
                    accumulate(adj, n.a, mul(g, sub(y, mul(y, y))));
                }
                break;
            case Op::kSoftplus:
                if (da) accumulate(adj, n.a, mul(g, sigmoid(scale(pa, n.c))));
                break;
            case Op::kRecipClamped:
                if (da) {
                    const Value y{this, i};
                    const Mat mask = (nodes_[n.a].val.array() > n.c).cast<double>().matrix();
                    accumulate(adj, n.a, neg(mul(mul(g, constant(mask)), mul(y, y))));
                }
                break;
            case Op::kConcatRows:
                if (da) accumulate(adj, n.a, slice_rows(g, 0, n.i0));
                if (db) accumulate(adj, n.b, slice_rows(g, n.i0, n.val.rows()));
                break;
            case Op::kSliceRows:
                if (da) accumulate(adj, n.a, pad_rows(g, n.i0, nodes_[n.a].val.rows()));
                break;
            case Op::kPadRows:
                if (da) accumulate(adj, n.a, slice_rows(g, n.i0, n.i0 + nodes_[n.a].val.rows()));
                break;
        }
    }
}

std::vector<Value> Tape::gradient_values(Value loss, const std::vector<Value>& wrt) {
    check_same_tape(loss);
    if (node(loss).val.size() != 1) throw std::invalid_argument("tape: backward needs a scalar loss");
    for (size_t i = 0; i < wrt.size(); ++i) {
        check_same_tape(wrt[i]);
        for (size_t j = i + 1; j < wrt.size(); ++j)
            if (wrt[i].idx == wrt[j].idx) throw std::invalid_argument("tape: duplicate parameter in backward");
    }

    std::vector<int32_t> adj;
    backward_sweep(loss, adj);

    std::vector<Value> out;
    out.reserve(wrt.size());
    for (const Value& w : wrt) {
        if (w.idx <= loss.idx && adj[w.idx] >= 0)
            out.push_back(Value{this, adj[w.idx]});
        else
            out.push_back(constant(Mat::Zero(node(w).val.rows(), node(w).val.cols())));
    }
    return out;
}

std::vector<Mat> Tape::gradients(Value loss, const std::vector<Value>& wrt) {
    std::vector<Value> vals = gradient_values(loss, wrt);
    std::vector<Mat> out;
    out.reserve(vals.size());
    for (const Value& v : vals) out.push_back(v.mat());
    return out;
}

}  // namespace relief
