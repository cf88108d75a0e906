#pragma once

#include "rhyme/checkpoint.hpp"
#include "rhyme/mlp.hpp"
#include "rhyme/sampled_dataset.hpp"

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace rhyme {

struct DeepOnetWidths {
    Eigen::Index branch = 0;
    Eigen::Index trunk = 0;
    Eigen::Index parameters = 0;
};

struct DeepOnetConfig {
    Eigen::Index n_sensors = 100;  // N_x; branch input is 2 N_x
    Eigen::Index modes = 700;      // r_b
    std::size_t depth = 4;         // linear layers per branch/trunk network
    std::vector<Eigen::Index> recon_hidden{50, 50};
    double window = 5.0;           // hold length of one input block
    double x_min = -10.0;
    double x_max = 10.0;
};

Eigen::Index deeponet_parameter_count(const DeepOnetConfig& config, Eigen::Index branch_width, Eigen::Index trunk_width);

/// Hidden widths (shared by all hidden layers of each network) whose total
/// parameter count is closest to `target`; among pairs within `tolerance`
/// (relative) the most balanced one wins. Throws if none is within tolerance.
DeepOnetWidths deeponet_parity_search(const DeepOnetConfig& config, Eigen::Index target, double tolerance = 0.01);

/// u_hat = h_u(branch(u0 (+) f) .* trunk(x, t_local)).
///
/// Inputs are normalized before the networks: branch values are divided by
/// input_scale, x is mapped to [-1, 1] and t_local / window to [-1, 1].
class DeepOnet {
public:
    DeepOnet() = default;
    DeepOnet(const DeepOnetConfig& config, DeepOnetWidths widths, std::mt19937_64& rng);

    const DeepOnetConfig& config() const noexcept { return config_; }
    const DeepOnetWidths& widths() const noexcept { return widths_; }
    Eigen::Index parameter_count() const;
    double input_scale() const noexcept { return input_scale_; }
    void set_input_scale(double s);

    Mlp& branch() noexcept { return branch_; }
    Mlp& trunk() noexcept { return trunk_; }
    Mlp& recon() noexcept { return recon_; }
    const Mlp& branch() const noexcept { return branch_; }
    const Mlp& trunk() const noexcept { return trunk_; }
    const Mlp& recon() const noexcept { return recon_; }
    std::vector<ParamBundle*> bundles() { return {&branch_.params(), &trunk_.params(), &recon_.params()}; }

    /// Single evaluation.
    double forward(const Eigen::VectorXd& u0, const Eigen::VectorXd& f, double x, double t_local) const;

    Checkpoint to_checkpoint() const;
    static DeepOnet from_checkpoint(const Checkpoint& ck);

private:
    DeepOnetConfig config_;
    DeepOnetWidths widths_;
    Mlp branch_;
    Mlp trunk_;
    Mlp recon_;
    double input_scale_ = 1.0;
};

/// Points evaluated against shared branch columns: point p uses branch
/// column owner[p] at coordinates (x[p], t_local[p]).
struct DeepOnetBatch {
    Eigen::MatrixXd branch_inputs;  // 2 N_x x S (raw u0 and f values)
    std::vector<Eigen::Index> owner;
    std::vector<double> x;
    std::vector<double> t_local;
};

struct DeepOnetCache {
    MlpCache branch;
    MlpCache trunk;
    MlpCache recon;
    Eigen::MatrixXd b;  // r_b x S
    Eigen::MatrixXd t;  // r_b x P
};

struct DeepOnetGrads {
    ParamBundle branch;
    ParamBundle trunk;
    ParamBundle recon;
    void set_zero() {
        branch.set_zero();
        trunk.set_zero();
        recon.set_zero();
    }
};

DeepOnetGrads deeponet_zero_grads(const DeepOnet& net);
/// Row vector of P predictions.
Eigen::RowVectorXd don_forward(const DeepOnet& net, const DeepOnetBatch& batch, DeepOnetCache* cache = nullptr);
void don_backward(const DeepOnet& net, const DeepOnetCache& cache, const DeepOnetBatch& batch,
                  const Eigen::RowVectorXd& d_out, DeepOnetGrads& grads);

/// Window index and local time of t: windows are [w W, (w+1) W); a time
/// exactly at the end of the last window stays in that window.
std::pair<std::size_t, double> don_window(double t, double window, std::size_t n_windows);

/// Rollout over the trajectory's input: each window starts from the
/// prediction at the end of the previous one (evaluated at the sample
/// points). Returns K x N_x predictions for `times`.
Eigen::MatrixXd don_rollout(const DeepOnet& net,
                            const Eigen::VectorXd& u0,
                            const Eigen::MatrixXd& profiles,
                            double delta,
                            const std::vector<double>& positions,
                            const std::vector<double>& times,
                            std::vector<Eigen::VectorXd>* window_states = nullptr);

}  // namespace rhyme
