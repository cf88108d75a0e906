#include "rhyme/deeponet.hpp"

#include "rhyme/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rhyme {

namespace {

std::vector<Eigen::Index> stack(Eigen::Index in, Eigen::Index width, std::size_t depth, Eigen::Index out) {
    std::vector<Eigen::Index> w{in};
    for (std::size_t i = 0; i + 1 < depth; ++i) w.push_back(width);
    w.push_back(out);
    return w;
}

std::vector<Eigen::Index> recon_widths(const DeepOnetConfig& c) {
    std::vector<Eigen::Index> w{c.modes};
    w.insert(w.end(), c.recon_hidden.begin(), c.recon_hidden.end());
    w.push_back(1);
    return w;
}

}  // namespace

Eigen::Index deeponet_parameter_count(const DeepOnetConfig& c, Eigen::Index branch_width, Eigen::Index trunk_width) {
    return Mlp::parameter_count(stack(2 * c.n_sensors, branch_width, c.depth, c.modes)) +
           Mlp::parameter_count(stack(2, trunk_width, c.depth, c.modes)) + Mlp::parameter_count(recon_widths(c));
}

DeepOnetWidths deeponet_parity_search(const DeepOnetConfig& c, Eigen::Index target, double tolerance) {
    RHYME_REQUIRE(target > 0 && c.depth >= 2, "deeponet_parity_search: invalid target or depth");
    constexpr Eigen::Index kMaxWidth = 4096;
    DeepOnetWidths best;
    Eigen::Index best_gap = std::numeric_limits<Eigen::Index>::max();
    Eigen::Index best_imbalance = std::numeric_limits<Eigen::Index>::max();
    bool best_within = false;
    const auto allowed = static_cast<Eigen::Index>(std::floor(tolerance * static_cast<double>(target)));
    for (Eigen::Index wb = 1; wb <= kMaxWidth; ++wb) {
        // count is increasing in the trunk width; find the crossing
        Eigen::Index lo = 1, hi = kMaxWidth;
        while (lo < hi) {
            const Eigen::Index mid = (lo + hi) / 2;
            if (deeponet_parameter_count(c, wb, mid) < target)
                lo = mid + 1;
            else
                hi = mid;
        }
        for (Eigen::Index wt : {lo - 1, lo}) {
            if (wt < 1) continue;
            const Eigen::Index n = deeponet_parameter_count(c, wb, wt);
            const Eigen::Index gap = std::abs(n - target);
            const bool within = gap <= allowed;
            const Eigen::Index imbalance = std::abs(wb - wt);
            bool better;
            if (within != best_within)
                better = within;
            else if (within)
                better = imbalance < best_imbalance || (imbalance == best_imbalance && gap < best_gap);
            else
                better = gap < best_gap;
            if (better) {
                best = {wb, wt, n};
                best_gap = gap;
                best_imbalance = imbalance;
                best_within = within;
            }
        }
    }
    if (!best_within)
        throw ContractViolation("deeponet_parity_search: no widths within tolerance of " + std::to_string(target));
    return best;
}

DeepOnet::DeepOnet(const DeepOnetConfig& config, DeepOnetWidths widths, std::mt19937_64& rng)
    : config_(config), widths_(widths) {
    RHYME_REQUIRE(config.n_sensors >= 1 && config.modes >= 1 && config.window > 0.0 && config.x_max > config.x_min,
                  "DeepOnet: invalid configuration");
    branch_ = Mlp(stack(2 * config.n_sensors, widths.branch, config.depth, config.modes), "don.branch");
    trunk_ = Mlp(stack(2, widths.trunk, config.depth, config.modes), "don.trunk");
    recon_ = Mlp(recon_widths(config), "don.recon");
    branch_.init_glorot(rng);
    trunk_.init_glorot(rng);
    recon_.init_glorot(rng);
    widths_.parameters = parameter_count();
}

Eigen::Index DeepOnet::parameter_count() const {
    return branch_.params().size() + trunk_.params().size() + recon_.params().size();
}

void DeepOnet::set_input_scale(double s) {
    RHYME_REQUIRE(std::isfinite(s) && s > 0.0, "DeepOnet: input scale must be positive");
    input_scale_ = s;
}

DeepOnetGrads deeponet_zero_grads(const DeepOnet& net) {
    return {net.branch().params().zeros_like(), net.trunk().params().zeros_like(), net.recon().params().zeros_like()};
}

Eigen::RowVectorXd don_forward(const DeepOnet& net, const DeepOnetBatch& batch, DeepOnetCache* cache) {
    const auto& c = net.config();
    const auto P = static_cast<Eigen::Index>(batch.owner.size());
    RHYME_REQUIRE(batch.branch_inputs.rows() == 2 * c.n_sensors, "don_forward: branch input has wrong length");
    RHYME_REQUIRE(batch.x.size() == batch.owner.size() && batch.t_local.size() == batch.owner.size(),
                  "don_forward: point arrays differ in length");
    const double xc = 0.5 * (c.x_min + c.x_max);
    const double xh = 0.5 * (c.x_max - c.x_min);
    Eigen::MatrixXd coords(2, P);
    for (Eigen::Index p = 0; p < P; ++p) {
        const auto i = static_cast<std::size_t>(p);
        RHYME_REQUIRE(batch.owner[i] >= 0 && batch.owner[i] < batch.branch_inputs.cols(), "don_forward: owner out of range");
        coords(0, p) = (batch.x[i] - xc) / xh;
        coords(1, p) = 2.0 * batch.t_local[i] / c.window - 1.0;
    }
    DeepOnetCache local;
    DeepOnetCache& k = cache ? *cache : local;
    k.b = net.branch().forward(batch.branch_inputs / net.input_scale(), cache ? &k.branch : nullptr);
    k.t = net.trunk().forward(coords, cache ? &k.trunk : nullptr);
    Eigen::MatrixXd prod(c.modes, P);
    for (Eigen::Index p = 0; p < P; ++p) prod.col(p) = k.b.col(batch.owner[static_cast<std::size_t>(p)]).cwiseProduct(k.t.col(p));
    return net.recon().forward(prod, cache ? &k.recon : nullptr);
}

void don_backward(const DeepOnet& net, const DeepOnetCache& cache, const DeepOnetBatch& batch,
                  const Eigen::RowVectorXd& d_out, DeepOnetGrads& grads) {
    const auto P = static_cast<Eigen::Index>(batch.owner.size());
    RHYME_REQUIRE(d_out.size() == P && cache.t.cols() == P, "don_backward: gradient shape mismatch");
    const Eigen::MatrixXd d_prod = net.recon().backward(cache.recon, d_out, grads.recon);
    Eigen::MatrixXd d_b = Eigen::MatrixXd::Zero(cache.b.rows(), cache.b.cols());
    Eigen::MatrixXd d_t(cache.t.rows(), P);
    for (Eigen::Index p = 0; p < P; ++p) {
        const Eigen::Index o = batch.owner[static_cast<std::size_t>(p)];
        d_t.col(p) = d_prod.col(p).cwiseProduct(cache.b.col(o));
        d_b.col(o) += d_prod.col(p).cwiseProduct(cache.t.col(p));
    }
    net.trunk().backward(cache.trunk, d_t, grads.trunk);
    net.branch().backward(cache.branch, d_b, grads.branch);
}

double DeepOnet::forward(const Eigen::VectorXd& u0, const Eigen::VectorXd& f, double x, double t_local) const {
    RHYME_REQUIRE(u0.size() == config_.n_sensors && f.size() == config_.n_sensors, "DeepOnet::forward: shape mismatch");
    DeepOnetBatch b;
    b.branch_inputs.resize(2 * config_.n_sensors, 1);
    b.branch_inputs.col(0) << u0, f;
    b.owner = {0};
    b.x = {x};
    b.t_local = {t_local};
    return don_forward(*this, b)(0);
}

std::pair<std::size_t, double> don_window(double t, double window, std::size_t n_windows) {
    RHYME_REQUIRE(t >= 0.0 && window > 0.0 && n_windows >= 1, "don_window: invalid arguments");
    const double q = t / window;
    const double m = std::round(q);
    std::size_t w = (std::abs(q - m) <= 1e-12 * std::max(1.0, m)) ? static_cast<std::size_t>(m)
                                                                   : static_cast<std::size_t>(std::floor(q));
    if (w >= n_windows) w = n_windows - 1;
    const double local = t - static_cast<double>(w) * window;
    return {w, std::clamp(local, 0.0, window)};
}

Eigen::MatrixXd don_rollout(const DeepOnet& net,
                            const Eigen::VectorXd& u0,
                            const Eigen::MatrixXd& profiles,
                            double delta,
                            const std::vector<double>& positions,
                            const std::vector<double>& times,
                            std::vector<Eigen::VectorXd>* window_states) {
    const auto& c = net.config();
    const Eigen::Index nx = c.n_sensors;
    RHYME_REQUIRE(u0.size() == nx && profiles.cols() == nx && static_cast<Eigen::Index>(positions.size()) == nx,
                  "don_rollout: fields must be sampled at the sensor points");
    const double per_window = c.window / delta;
    const auto hold = static_cast<Eigen::Index>(std::llround(per_window));
    RHYME_REQUIRE(hold >= 1 && std::abs(per_window - static_cast<double>(hold)) < 1e-9,
                  "don_rollout: window must be a whole number of hold periods");
    const double t_max = times.empty() ? 0.0 : *std::max_element(times.begin(), times.end());
    const auto n_windows = static_cast<std::size_t>(std::max(1.0, std::ceil(t_max / c.window - 1e-12)));
    RHYME_REQUIRE(static_cast<Eigen::Index>(n_windows) * hold <= profiles.rows(),
                  "don_rollout: input does not cover the requested horizon");
    for (std::size_t w = 0; w < n_windows; ++w)
        for (Eigen::Index k = 1; k < hold; ++k)
            if (profiles.row(static_cast<Eigen::Index>(w) * hold + k) != profiles.row(static_cast<Eigen::Index>(w) * hold))
                throw ContractViolation("don_rollout: input is not constant over a window");

    std::vector<std::vector<std::size_t>> by_window(n_windows);
    std::vector<double> local(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto [w, tl] = don_window(times[i], c.window, n_windows);
        by_window[w].push_back(i);
        local[i] = tl;
    }

    Eigen::MatrixXd out(static_cast<Eigen::Index>(times.size()), nx);
    Eigen::VectorXd state = u0;
    if (window_states) window_states->clear();
    for (std::size_t w = 0; w < n_windows; ++w) {
        if (window_states) window_states->push_back(state);
        Eigen::MatrixXd branch_in(2 * nx, 1);
        branch_in.col(0) << state, profiles.row(static_cast<Eigen::Index>(w) * hold).transpose();
        auto points_at = [&](const std::vector<double>& tls) {
            DeepOnetBatch b;
            b.branch_inputs = branch_in;
            for (double tl : tls)
                for (Eigen::Index j = 0; j < nx; ++j) {
                    b.owner.push_back(0);
                    b.x.push_back(positions[static_cast<std::size_t>(j)]);
                    b.t_local.push_back(tl);
                }
            return don_forward(net, b);
        };
        if (!by_window[w].empty()) {
            std::vector<double> tls;
            for (std::size_t i : by_window[w]) tls.push_back(local[i]);
            const Eigen::RowVectorXd y = points_at(tls);
            for (std::size_t q = 0; q < by_window[w].size(); ++q)
                out.row(static_cast<Eigen::Index>(by_window[w][q])) = y.segment(static_cast<Eigen::Index>(q) * nx, nx);
        }
        if (w + 1 < n_windows) state = points_at({c.window}).transpose();
    }
    return out;
}

Checkpoint DeepOnet::to_checkpoint() const {
    Checkpoint ck;
    ck.add_scalar("don.n_sensors", static_cast<double>(config_.n_sensors));
    ck.add_scalar("don.modes", static_cast<double>(config_.modes));
    ck.add_scalar("don.depth", static_cast<double>(config_.depth));
    ck.add_scalar("don.window", config_.window);
    ck.add_scalar("don.x_min", config_.x_min);
    ck.add_scalar("don.x_max", config_.x_max);
    ck.add_scalar("don.branch_width", static_cast<double>(widths_.branch));
    ck.add_scalar("don.trunk_width", static_cast<double>(widths_.trunk));
    ck.add_scalar("don.input_scale", input_scale_);
    std::vector<double> rh;
    for (auto w : config_.recon_hidden) rh.push_back(static_cast<double>(w));
    ck.add("don.recon_hidden", {static_cast<std::uint32_t>(rh.size())}, rh);
    ck.add_bundle(branch_.params());
    ck.add_bundle(trunk_.params());
    ck.add_bundle(recon_.params());
    return ck;
}

DeepOnet DeepOnet::from_checkpoint(const Checkpoint& ck) {
    DeepOnetConfig c;
    c.n_sensors = static_cast<Eigen::Index>(ck.scalar("don.n_sensors"));
    c.modes = static_cast<Eigen::Index>(ck.scalar("don.modes"));
    c.depth = static_cast<std::size_t>(ck.scalar("don.depth"));
    c.window = ck.scalar("don.window");
    c.x_min = ck.scalar("don.x_min");
    c.x_max = ck.scalar("don.x_max");
    c.recon_hidden.clear();
    for (double w : ck.get("don.recon_hidden").data) c.recon_hidden.push_back(static_cast<Eigen::Index>(w));
    DeepOnetWidths w{static_cast<Eigen::Index>(ck.scalar("don.branch_width")),
                     static_cast<Eigen::Index>(ck.scalar("don.trunk_width")), 0};
    std::mt19937_64 rng(0);
    DeepOnet net(c, w, rng);
    net.input_scale_ = ck.scalar("don.input_scale");
    ck.read_bundle(net.branch_.params());
    ck.read_bundle(net.trunk_.params());
    ck.read_bundle(net.recon_.params());
    return net;
}

}  // namespace rhyme
