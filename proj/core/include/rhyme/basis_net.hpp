#pragma once

#include "rhyme/checkpoint.hpp"
#include "rhyme/mlp.hpp"
#include "rhyme/pod.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace rhyme {

struct BasisNetConfig {
    Eigen::Index n_features = 128;  // L
    double feature_std = 0.5;
    std::vector<Eigen::Index> hidden{100, 100, 100, 100};
    /// Map Omega affinely onto [-1, 1] before the feature map. Off by
    /// default: with std 0.5 the normalized features are too smooth to fit
    /// the higher POD modes.
    bool normalize_input = false;
};

/// gamma(x) = [cos(Bx); sin(Bx)] with B ~ N(0, s^2), frozen after sampling.
struct FourierFeatureMap {
    Eigen::VectorXd frequencies;  // L (d = 1)
    double center = 0.0;
    double half_width = 1.0;

    Eigen::Index n_features() const noexcept { return frequencies.size(); }
    double scaled(double x) const noexcept { return (x - center) / half_width; }
    /// 2L x n feature matrix for the given positions.
    Eigen::MatrixXd features(std::span<const double> xs) const;
};

/// phi_hat(x) = h_phi(gamma(x)).
///
/// The network output is trained against unit-l2 POD columns on N_x points.
/// eval() multiplies by sqrt(N_x / |Omega|) so that the returned functions are
/// approximately orthonormal in L2(Omega); eval_raw() returns the plain
/// network output.
class BasisNet {
public:
    BasisNet() = default;
    BasisNet(const BasisNetConfig& config, Eigen::Index r, double x_min, double x_max, Eigen::Index n_x,
             std::mt19937_64& rng);

    /// r x n, columns are phi_hat(x_j).
    Eigen::MatrixXd eval_raw(std::span<const double> xs) const;
    Eigen::MatrixXd eval(std::span<const double> xs) const { return continuum_scale_ * eval_raw(xs); }
    /// N_x x r matrix Phi_hat of raw values (rows are points).
    Eigen::MatrixXd raw_matrix(std::span<const double> xs) const { return eval_raw(xs).transpose(); }
    /// N_x x r continuum-normalized basis values, ready for project().
    Eigen::MatrixXd basis_values(std::span<const double> xs) const { return eval(xs).transpose(); }

    Eigen::Index rank() const noexcept { return mlp_.output_width(); }
    double continuum_scale() const noexcept { return continuum_scale_; }
    const FourierFeatureMap& feature_map() const noexcept { return features_; }
    Mlp& mlp() noexcept { return mlp_; }
    const Mlp& mlp() const noexcept { return mlp_; }

    Checkpoint to_checkpoint() const;
    static BasisNet from_checkpoint(const Checkpoint& ck);

private:
    FourierFeatureMap features_;
    Mlp mlp_;
    double continuum_scale_ = 1.0;
};

struct BasisLoss {
    double value = 0.0;
    double fit = 0.0;          // ||Phi - U||_1
    double orthogonality = 0.0;  // ||Phi^T Phi - I||_1
    Eigen::MatrixXd grad;      // d value / d Phi, sign(0) = 0
};

/// ||Phi - U||_1 + ||Phi^T Phi - I_r||_1 with entrywise l1 norms.
BasisLoss basis_loss(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& targets);

struct BasisTrainConfig {
    double lr = 1e-3;
    int max_epochs = 5000;
    /// Halve the learning rate after this many epochs without a new best loss.
    int lr_patience = 250;
    double min_lr = 1e-6;
    /// Stop after this many epochs without a new best loss.
    int stop_patience = 1000;
};

struct BasisTrainResult {
    BasisNet net;  // best-loss parameters
    std::vector<double> loss_history;
    std::vector<double> best_history;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    int epochs = 0;
};

/// Full-batch Adam on basis_loss at the POD spatial points.
BasisTrainResult train_basis(const PodBasis& pod_basis,
                             const BasisNetConfig& net_config,
                             const BasisTrainConfig& train_config,
                             double x_min,
                             double x_max,
                             std::uint64_t seed);

/// Same, continuing from an existing network.
BasisTrainResult train_basis(const PodBasis& pod_basis, BasisNet initial, const BasisTrainConfig& train_config);

/// max_{n != m} |(Phi^T Phi)_{nm}|
double max_off_diagonal_gram(const Eigen::MatrixXd& phi);

}  // namespace rhyme
