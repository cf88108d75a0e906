#include "rhyme/mlp.hpp"

#include "rhyme/error.hpp"

#include <cmath>

namespace rhyme {

Mlp::Mlp(std::vector<Eigen::Index> widths, const std::string& prefix) : widths_(std::move(widths)) {
    RHYME_REQUIRE(widths_.size() >= 2, "Mlp: need at least input and output widths");
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        params_.add(prefix + ".W" + std::to_string(l), widths_[l + 1], widths_[l]);
        params_.add(prefix + ".b" + std::to_string(l), widths_[l + 1], 1);
    }
}

Eigen::Index Mlp::parameter_count(const std::vector<Eigen::Index>& widths) {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) n += widths[l + 1] * (widths[l] + 1);
    return n;
}

void Mlp::init_glorot(std::mt19937_64& rng) {
    for (std::size_t l = 0; l < n_layers(); ++l) {
        auto w = params_.matrix(2 * l);
        const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
        params_.matrix(2 * l + 1).setZero();
    }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, MlpCache* cache) const {
    RHYME_REQUIRE(x.rows() == input_width(), "Mlp::forward: input width mismatch");
    if (cache) {
        cache->activations.resize(n_layers());
        cache->generation = params_.generation();
        cache->owner = this;
    }
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < n_layers(); ++l) {
        Eigen::MatrixXd z = params_.matrix(2 * l) * a;
        z.colwise() += params_.matrix(2 * l + 1).col(0);
        if (cache) cache->activations[l] = std::move(a);
        if (l + 1 < n_layers()) z = z.array().tanh();
        a = std::move(z);
    }
    return a;
}

Eigen::MatrixXd Mlp::backward(const MlpCache& cache, const Eigen::MatrixXd& dy, ParamBundle& grads) const {
    RHYME_REQUIRE(cache.owner == this && cache.generation == params_.generation() &&
                      cache.activations.size() == n_layers(),
                  "Mlp::backward: stale or foreign cache");
    RHYME_REQUIRE(grads.size() == params_.size(), "Mlp::backward: gradient bundle layout mismatch");
    RHYME_REQUIRE(dy.rows() == output_width() && dy.cols() == cache.activations.front().cols(),
                  "Mlp::backward: upstream gradient shape mismatch");
    Eigen::MatrixXd delta = dy;
    for (std::size_t l = n_layers(); l-- > 0;) {
        const Eigen::MatrixXd& input = cache.activations[l];
        grads.matrix(2 * l).noalias() += delta * input.transpose();
        grads.matrix(2 * l + 1).col(0) += delta.rowwise().sum();
        Eigen::MatrixXd upstream = params_.matrix(2 * l).transpose() * delta;
        if (l > 0) upstream.array() *= 1.0 - input.array().square();
        delta = std::move(upstream);
    }
    return delta;
}

}  // namespace rhyme
