#pragma once

#include "rhyme/param_bundle.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>

namespace rhyme {

struct LstmStepCache {
    Eigen::MatrixXd xh;      // [x; h_prev], (I + H) x B
    Eigen::MatrixXd gates;   // activated i, f, g, o stacked, 4H x B
    Eigen::MatrixXd c_prev;
    Eigen::MatrixXd tanh_c;
    std::uint64_t generation = 0;
    const void* owner = nullptr;
};

/// Single-layer LSTM cell, gate order (input, forget, candidate, output):
///   c = f * c_prev + i * g,   h = o * tanh(c).
/// Parameters: W (4H x (I + H)) acting on [x; h_prev] and bias b (4H).
class Lstm {
public:
    Lstm() = default;
    Lstm(Eigen::Index input_width, Eigen::Index hidden_width, const std::string& prefix = "lstm");

    void init_glorot(std::mt19937_64& rng);

    void step(const Eigen::MatrixXd& x,
              const Eigen::MatrixXd& h_prev,
              const Eigen::MatrixXd& c_prev,
              Eigen::MatrixXd& h,
              Eigen::MatrixXd& c,
              LstmStepCache* cache = nullptr) const;

    /// Given dL/dh and dL/dc of the step outputs, accumulates parameter
    /// gradients and writes the gradients w.r.t. x, h_prev and c_prev.
    void step_backward(const LstmStepCache& cache,
                       const Eigen::MatrixXd& dh,
                       const Eigen::MatrixXd& dc,
                       ParamBundle& grads,
                       Eigen::MatrixXd& dx,
                       Eigen::MatrixXd& dh_prev,
                       Eigen::MatrixXd& dc_prev) const;

    Eigen::Index input_width() const noexcept { return input_; }
    Eigen::Index hidden_width() const noexcept { return hidden_; }

    ParamBundle& params() noexcept { return params_; }
    const ParamBundle& params() const noexcept { return params_; }

    static Eigen::Index parameter_count(Eigen::Index input_width, Eigen::Index hidden_width) {
        return 4 * hidden_width * (input_width + hidden_width + 1);
    }

private:
    Eigen::Index input_ = 0;
    Eigen::Index hidden_ = 0;
    ParamBundle params_;
};

}  // namespace rhyme
