#pragma once

#include "rhyme/param_bundle.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace rhyme {

/// Activations kept by Mlp::forward. activations[l] is the input of layer l;
/// for l > 0 it is also the tanh output of layer l-1.
struct MlpCache {
    std::vector<Eigen::MatrixXd> activations;
    std::uint64_t generation = 0;
    const void* owner = nullptr;
};

/// Fully connected network: tanh on hidden layers, identity on the output.
/// Batches are columns: forward maps (in x B) to (out x B).
class Mlp {
public:
    Mlp() = default;
    /// widths = {input, hidden..., output}.
    explicit Mlp(std::vector<Eigen::Index> widths, const std::string& prefix = "mlp");

    /// Glorot-uniform weights, zero biases.
    void init_glorot(std::mt19937_64& rng);

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, MlpCache* cache = nullptr) const;

    /// Accumulates parameter gradients into `grads` (same layout as params())
    /// and returns d loss / d input.
    Eigen::MatrixXd backward(const MlpCache& cache, const Eigen::MatrixXd& dy, ParamBundle& grads) const;

    const std::vector<Eigen::Index>& widths() const noexcept { return widths_; }
    Eigen::Index input_width() const { return widths_.front(); }
    Eigen::Index output_width() const { return widths_.back(); }
    std::size_t n_layers() const noexcept { return widths_.empty() ? 0 : widths_.size() - 1; }

    ParamBundle& params() noexcept { return params_; }
    const ParamBundle& params() const noexcept { return params_; }

    /// Number of trainable scalars for the given widths.
    static Eigen::Index parameter_count(const std::vector<Eigen::Index>& widths);

private:
    std::vector<Eigen::Index> widths_;
    ParamBundle params_;
};

}  // namespace rhyme
