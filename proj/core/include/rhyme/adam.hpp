#pragma once

#include "rhyme/param_bundle.hpp"

#include <Eigen/Dense>

#include <vector>

namespace rhyme {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    long step = 0;

    AdamState() = default;
    explicit AdamState(Eigen::Index n) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

/// Bias-corrected Adam step on a copy of `params`. Throws TrainingDiverged on
/// a non-finite gradient, leaving state untouched.
Eigen::VectorXd adam_update(AdamState& state,
                            const AdamConfig& config,
                            const Eigen::VectorXd& params,
                            const Eigen::VectorXd& grads);

/// Adam over several parameter bundles updated in lockstep. All gradients
/// are validated before any bundle is written.
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<ParamBundle*> bundles, AdamConfig config);

    void step(const std::vector<ParamBundle>& grads);

    double lr() const noexcept { return config_.lr; }
    void set_lr(double lr) noexcept { config_.lr = lr; }
    long step_count() const noexcept { return states_.empty() ? 0 : states_.front().step; }

private:
    std::vector<ParamBundle*> bundles_;
    std::vector<AdamState> states_;
    AdamConfig config_;
};

}  // namespace rhyme
