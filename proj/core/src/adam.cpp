#include "rhyme/adam.hpp"

#include "rhyme/error.hpp"

#include <cmath>

namespace rhyme {

namespace {
void apply(AdamState& s, const AdamConfig& c, Eigen::VectorXd& p, const Eigen::VectorXd& g) {
    ++s.step;
    s.m = c.beta1 * s.m + (1.0 - c.beta1) * g;
    s.v = c.beta2 * s.v + (1.0 - c.beta2) * g.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(s.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(s.step));
    p.array() -= c.lr * (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + c.eps);
}
}  // namespace

Eigen::VectorXd adam_update(AdamState& state, const AdamConfig& config, const Eigen::VectorXd& params,
                            const Eigen::VectorXd& grads) {
    RHYME_REQUIRE(params.size() == grads.size() && state.m.size() == params.size() && state.v.size() == params.size(),
                  "adam_update: shape mismatch");
    if (!grads.allFinite()) throw TrainingDiverged("non-finite gradient in Adam update");
    Eigen::VectorXd out = params;
    apply(state, config, out, grads);
    return out;
}

AdamOptimizer::AdamOptimizer(std::vector<ParamBundle*> bundles, AdamConfig config)
    : bundles_(std::move(bundles)), config_(config) {
    for (auto* b : bundles_) states_.emplace_back(b->size());
}

void AdamOptimizer::step(const std::vector<ParamBundle>& grads) {
    RHYME_REQUIRE(grads.size() == bundles_.size(), "AdamOptimizer::step: one gradient bundle per parameter bundle");
    for (std::size_t i = 0; i < grads.size(); ++i) {
        RHYME_REQUIRE(grads[i].size() == bundles_[i]->size(), "AdamOptimizer::step: gradient layout mismatch");
        if (!grads[i].flat().allFinite()) throw TrainingDiverged("non-finite gradient in Adam update");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) apply(states_[i], config_, bundles_[i]->flat(), grads[i].flat());
}

}  // namespace rhyme
