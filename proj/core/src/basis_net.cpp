#include "rhyme/basis_net.hpp"

#include "rhyme/adam.hpp"
#include "rhyme/error.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace rhyme {

Eigen::MatrixXd FourierFeatureMap::features(std::span<const double> xs) const {
    const Eigen::Index L = n_features();
    Eigen::MatrixXd out(2 * L, static_cast<Eigen::Index>(xs.size()));
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const double s = scaled(xs[static_cast<std::size_t>(j)]);
        for (Eigen::Index l = 0; l < L; ++l) {
            const double arg = frequencies[l] * s;
            out(l, j) = std::cos(arg);
            out(L + l, j) = std::sin(arg);
        }
    }
    return out;
}

BasisNet::BasisNet(const BasisNetConfig& config, Eigen::Index r, double x_min, double x_max, Eigen::Index n_x,
                   std::mt19937_64& rng) {
    RHYME_REQUIRE(r >= 1 && config.n_features >= 1 && n_x >= 1, "BasisNet: invalid sizes");
    features_.frequencies.resize(config.n_features);
    std::normal_distribution<double> normal(0.0, config.feature_std);
    for (Eigen::Index l = 0; l < config.n_features; ++l) features_.frequencies[l] = normal(rng);
    if (config.normalize_input) {
        features_.center = 0.5 * (x_min + x_max);
        features_.half_width = 0.5 * (x_max - x_min);
    }
    std::vector<Eigen::Index> widths{2 * config.n_features};
    widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
    widths.push_back(r);
    mlp_ = Mlp(widths, "basis");
    mlp_.init_glorot(rng);
    continuum_scale_ = std::sqrt(static_cast<double>(n_x) / (x_max - x_min));
}

Eigen::MatrixXd BasisNet::eval_raw(std::span<const double> xs) const { return mlp_.forward(features_.features(xs)); }

Checkpoint BasisNet::to_checkpoint() const {
    Checkpoint ck;
    ck.add("feature_map.B", {static_cast<std::uint32_t>(features_.n_features()), 1},
           std::vector<double>(features_.frequencies.data(), features_.frequencies.data() + features_.n_features()));
    ck.add_scalar("feature_map.center", features_.center);
    ck.add_scalar("feature_map.half_width", features_.half_width);
    ck.add_scalar("basis.continuum_scale", continuum_scale_);
    std::vector<double> widths;
    for (auto w : mlp_.widths()) widths.push_back(static_cast<double>(w));
    ck.add("basis.widths", {static_cast<std::uint32_t>(widths.size())}, widths);
    ck.add_bundle(mlp_.params());
    return ck;
}

BasisNet BasisNet::from_checkpoint(const Checkpoint& ck) {
    BasisNet net;
    const auto& b = ck.get("feature_map.B");
    net.features_.frequencies = Eigen::Map<const Eigen::VectorXd>(b.data.data(), static_cast<Eigen::Index>(b.data.size()));
    net.features_.center = ck.scalar("feature_map.center");
    net.features_.half_width = ck.scalar("feature_map.half_width");
    net.continuum_scale_ = ck.scalar("basis.continuum_scale");
    std::vector<Eigen::Index> widths;
    for (double w : ck.get("basis.widths").data) widths.push_back(static_cast<Eigen::Index>(w));
    RHYME_REQUIRE(!widths.empty() && widths.front() == 2 * net.features_.n_features(),
                  "BasisNet checkpoint: feature count does not match network input");
    net.mlp_ = Mlp(widths, "basis");
    ck.read_bundle(net.mlp_.params());
    return net;
}

namespace {
inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }
}  // namespace

BasisLoss basis_loss(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& targets) {
    RHYME_REQUIRE(phi.rows() == targets.rows() && phi.cols() == targets.cols(), "basis_loss: shape mismatch");
    const Eigen::Index r = phi.cols();
    BasisLoss out;
    const Eigen::MatrixXd diff = phi - targets;
    const Eigen::MatrixXd gram_err = phi.transpose() * phi - Eigen::MatrixXd::Identity(r, r);
    out.fit = diff.cwiseAbs().sum();
    out.orthogonality = gram_err.cwiseAbs().sum();
    out.value = out.fit + out.orthogonality;
    const Eigen::MatrixXd s_fit = diff.unaryExpr(&sign0);
    const Eigen::MatrixXd s_gram = gram_err.unaryExpr(&sign0);
    out.grad = s_fit + phi * (s_gram + s_gram.transpose());
    return out;
}

double max_off_diagonal_gram(const Eigen::MatrixXd& phi) {
    Eigen::MatrixXd g = phi.transpose() * phi;
    g.diagonal().setZero();
    return g.cwiseAbs().maxCoeff();
}

BasisTrainResult train_basis(const PodBasis& pod_basis, BasisNet initial, const BasisTrainConfig& cfg) {
    RHYME_REQUIRE(initial.rank() == pod_basis.rank(), "train_basis: network rank differs from POD rank");
    const auto& xs = pod_basis.spatial_points;
    const Eigen::MatrixXd features = initial.feature_map().features(xs);
    const Eigen::MatrixXd targets = pod_basis.modes;  // N_x x r

    BasisTrainResult result;
    result.net = initial;
    Mlp& mlp = initial.mlp();
    AdamOptimizer opt({&mlp.params()}, AdamConfig{cfg.lr});
    std::vector<ParamBundle> grads{mlp.params().zeros_like()};

    double best = std::numeric_limits<double>::infinity();
    int since_best = 0;
    int since_lr = 0;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        MlpCache cache;
        const Eigen::MatrixXd out = mlp.forward(features, &cache);  // r x N_x
        const BasisLoss loss = basis_loss(out.transpose(), targets);
        if (!std::isfinite(loss.value)) throw TrainingDiverged("basis training produced a non-finite loss");
        if (epoch == 0) result.initial_loss = loss.value;
        result.loss_history.push_back(loss.value);
        if (loss.value < best) {
            best = loss.value;
            result.net.mlp().params().flat() = std::as_const(mlp).params().flat();
            since_best = 0;
            since_lr = 0;
        } else {
            ++since_best;
            ++since_lr;
        }
        result.best_history.push_back(best);
        result.epochs = epoch + 1;
        if (since_best >= cfg.stop_patience) break;
        if (since_lr >= cfg.lr_patience && opt.lr() > cfg.min_lr) {
            opt.set_lr(std::max(cfg.min_lr, 0.5 * opt.lr()));
            since_lr = 0;
        }
        grads[0].set_zero();
        mlp.backward(cache, loss.grad.transpose(), grads[0]);
        opt.step(grads);
    }
    result.final_loss = best;
    return result;
}

BasisTrainResult train_basis(const PodBasis& pod_basis,
                             const BasisNetConfig& net_config,
                             const BasisTrainConfig& train_config,
                             double x_min,
                             double x_max,
                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    BasisNet net(net_config, pod_basis.rank(), x_min, x_max, static_cast<Eigen::Index>(pod_basis.spatial_points.size()), rng);
    return train_basis(pod_basis, std::move(net), train_config);
}

}  // namespace rhyme
