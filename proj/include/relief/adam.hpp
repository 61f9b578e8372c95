#pragma once

#include "relief/params.hpp"

namespace relief {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction. Moment shapes are pinned to the parameter set
/// at construction; step() is the only mutator and increments the counter by 1.
class AdamState {
public:
    AdamState(const ParamSet& params, AdamConfig cfg);

    void step(ParamSet& params, const Gradients& grads);

    int64_t steps_taken() const { return step_; }
    const AdamConfig& config() const { return cfg_; }
    void set_lr(double lr) { cfg_.lr = lr; }

private:
    AdamConfig cfg_;
    int64_t step_ = 0;
    std::vector<Mat> m_;
    std::vector<Mat> v_;
};

}  // namespace relief
