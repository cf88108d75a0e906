#pragma once

#include "rhyme/checkpoint.hpp"
#include "rhyme/lstm.hpp"
#include "rhyme/mlp.hpp"
#include "rhyme/projection.hpp"

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace rhyme {

/// k_t = floor(t / delta) and the fractions tau_0..tau_{k_t}.
struct TimeSchedule {
    double t = 0.0;
    double delta = 0.5;
    std::size_t k_t = 0;
    std::vector<double> taus;
    double last_tau() const { return taus.back(); }
};

/// t / delta within 1e-12 (relative) of an integer m is treated as exactly m,
/// so boundary queries get tau = 0 despite floating-point division.
TimeSchedule schedule(double t, double delta);

struct FlowNetConfig {
    Eigen::Index r = 50;
    Eigen::Index hidden = 250;  // |Z|, also the LSTM width
    std::vector<Eigen::Index> encoder_hidden{500, 500};
    std::vector<Eigen::Index> decoder_hidden{250, 250, 250};
};

/// One query of a batch: group g (trajectory) evaluated at k_t = k with the
/// final fraction tau.
struct FlowQuery {
    std::size_t group = 0;
    std::size_t k = 0;
    double tau = 0.0;
};

/// Queries sharing one recurrent prefix per group.
struct FlowBatch {
    Eigen::MatrixXd a0;                              // r x G
    std::vector<const Eigen::MatrixXd*> profiles;    // per group, r x n_profiles
    std::vector<FlowQuery> queries;
};

struct FlowCache {
    MlpCache encoder;
    std::vector<LstmStepCache> chain;      // tau = 1 steps shared by each group
    std::vector<Eigen::MatrixXd> chain_c;  // cell states c_0..c_K, H x G
    std::vector<Eigen::MatrixXd> chain_h;  // hidden states z_0..z_K, H x G
    LstmStepCache last;                    // per-query final step (tau > 0 only)
    std::vector<Eigen::Index> last_columns;  // query index of each column of `last`
    MlpCache decoder;
    std::vector<FlowQuery> queries;
    Eigen::Index groups = 0;
};

/// Gradients laid out as {encoder, cell, decoder}.
struct FlowGrads {
    ParamBundle encoder;
    ParamBundle cell;
    ParamBundle decoder;
    void set_zero() {
        encoder.set_zero();
        cell.set_zero();
        decoder.set_zero();
    }
};

/// a_hat(t) = h_dec((1 - tau) z_k + tau f_RNN(z_k, [f_k; tau])) with z_0 =
/// h_enc(a_0), c_0 = 0 and tau = 1 for the k_t preceding steps. Inputs to the
/// encoder and to the cell are divided by input_scale.
class FlowNet {
public:
    FlowNet() = default;
    FlowNet(const FlowNetConfig& config, std::mt19937_64& rng);

    /// Single query.
    Eigen::VectorXd forward(const Eigen::VectorXd& a0, const ProjectedInputSequence& f, double t) const;
    /// Several times for one trajectory; columns follow `times`.
    Eigen::MatrixXd forward_times(const Eigen::VectorXd& a0,
                                  const Eigen::MatrixXd& coeff_profiles,
                                  double delta,
                                  const std::vector<double>& times) const;
    /// r x Q outputs in query order.
    Eigen::MatrixXd forward_batch(const FlowBatch& batch, FlowCache* cache = nullptr) const;
    /// Accumulates parameter gradients for d_out (r x Q).
    void backward_batch(const FlowCache& cache, const Eigen::MatrixXd& d_out, FlowGrads& grads) const;

    FlowGrads zero_grads() const;
    std::vector<ParamBundle*> bundles() { return {&encoder_.params(), &cell_.params(), &decoder_.params()}; }
    static std::vector<ParamBundle> as_vector(const FlowGrads& g) { return {g.encoder, g.cell, g.decoder}; }

    const FlowNetConfig& config() const noexcept { return config_; }
    Eigen::Index rank() const noexcept { return config_.r; }
    double input_scale() const noexcept { return input_scale_; }
    void set_input_scale(double s);
    Mlp& encoder() noexcept { return encoder_; }
    Lstm& cell() noexcept { return cell_; }
    Mlp& decoder() noexcept { return decoder_; }
    const Mlp& encoder() const noexcept { return encoder_; }
    const Lstm& cell() const noexcept { return cell_; }
    const Mlp& decoder() const noexcept { return decoder_; }
    Eigen::Index parameter_count() const;

    Checkpoint to_checkpoint() const;
    static FlowNet from_checkpoint(const Checkpoint& ck);

private:
    FlowNetConfig config_;
    Mlp encoder_;
    Lstm cell_;
    Mlp decoder_;
    double input_scale_ = 1.0;
};

}  // namespace rhyme
