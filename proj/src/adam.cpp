#include "relief/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace relief {

AdamState::AdamState(const ParamSet& params, AdamConfig cfg) : cfg_(cfg) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const Mat& p : params.values()) {
        m_.push_back(Mat::Zero(p.rows(), p.cols()));
        v_.push_back(Mat::Zero(p.rows(), p.cols()));
    }
}

void AdamState::step(ParamSet& params, const Gradients& grads) {
    if (grads.g.size() != m_.size() || params.size() != m_.size())
        throw std::invalid_argument("adam: parameter/gradient count mismatch");

    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));

    for (size_t i = 0; i < m_.size(); ++i) {
        Mat& p = params.values()[i];
        const Mat& g = grads.g[i];
        if (g.rows() != p.rows() || g.cols() != p.cols())
            throw std::invalid_argument("adam: gradient shape mismatch");

        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);

        const Mat m_hat = m_[i] / bc1;
        const Mat v_hat = v_[i] / bc2;
        p.array() -= cfg_.lr * m_hat.array() / (v_hat.array().sqrt() + cfg_.eps);
    }
}

}  // namespace relief
