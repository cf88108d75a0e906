#include "rhyme/flow_net.hpp"

#include "rhyme/error.hpp"

#include <algorithm>
#include <cmath>

namespace rhyme {

TimeSchedule schedule(double t, double delta) {
    RHYME_REQUIRE(std::isfinite(t) && t >= 0.0, "schedule: t must be finite and nonnegative");
    RHYME_REQUIRE(std::isfinite(delta) && delta > 0.0, "schedule: delta must be positive");
    TimeSchedule s;
    s.t = t;
    s.delta = delta;
    const double q = t / delta;
    const double m = std::round(q);
    double tau = 0.0;
    if (std::abs(q - m) <= 1e-12 * std::max(1.0, m)) {
        s.k_t = static_cast<std::size_t>(m);
    } else {
        s.k_t = static_cast<std::size_t>(std::floor(q));
        tau = std::clamp((t - static_cast<double>(s.k_t) * delta) / delta, 0.0, 1.0);
        if (tau >= 1.0) tau = std::nextafter(1.0, 0.0);
    }
    s.taus.assign(s.k_t + 1, 1.0);
    s.taus.back() = tau;
    return s;
}

FlowNet::FlowNet(const FlowNetConfig& config, std::mt19937_64& rng) : config_(config) {
    RHYME_REQUIRE(config.r >= 1 && config.hidden >= 1, "FlowNet: invalid widths");
    std::vector<Eigen::Index> enc{config.r};
    enc.insert(enc.end(), config.encoder_hidden.begin(), config.encoder_hidden.end());
    enc.push_back(config.hidden);
    std::vector<Eigen::Index> dec{config.hidden};
    dec.insert(dec.end(), config.decoder_hidden.begin(), config.decoder_hidden.end());
    dec.push_back(config.r);
    encoder_ = Mlp(enc, "flow.encoder");
    cell_ = Lstm(config.r + 1, config.hidden, "flow.cell");
    decoder_ = Mlp(dec, "flow.decoder");
    encoder_.init_glorot(rng);
    cell_.init_glorot(rng);
    decoder_.init_glorot(rng);
}

void FlowNet::set_input_scale(double s) {
    RHYME_REQUIRE(std::isfinite(s) && s > 0.0, "FlowNet: input scale must be positive");
    input_scale_ = s;
}

Eigen::Index FlowNet::parameter_count() const {
    return encoder_.params().size() + cell_.params().size() + decoder_.params().size();
}

FlowGrads FlowNet::zero_grads() const {
    return {encoder_.params().zeros_like(), cell_.params().zeros_like(), decoder_.params().zeros_like()};
}

Eigen::MatrixXd FlowNet::forward_batch(const FlowBatch& batch, FlowCache* cache) const {
    const Eigen::Index r = config_.r;
    const Eigen::Index H = config_.hidden;
    const Eigen::Index G = batch.a0.cols();
    const auto Q = static_cast<Eigen::Index>(batch.queries.size());
    RHYME_REQUIRE(batch.a0.rows() == r, "FlowNet: a0 has wrong length");
    RHYME_REQUIRE(static_cast<Eigen::Index>(batch.profiles.size()) == G, "FlowNet: one profile matrix per group");

    // Steps needed per group: the shared prefix reaches z_{k}; tau > 0 also needs f_k.
    std::vector<std::size_t> prefix(static_cast<std::size_t>(G), 0);
    std::size_t k_max = 0;
    for (const auto& q : batch.queries) {
        RHYME_REQUIRE(q.group < static_cast<std::size_t>(G), "FlowNet: query group out of range");
        RHYME_REQUIRE(q.tau >= 0.0 && q.tau <= 1.0, "FlowNet: tau must lie in [0, 1]");
        const auto* prof = batch.profiles[q.group];
        RHYME_REQUIRE(prof != nullptr && prof->rows() == r, "FlowNet: profile matrix has wrong rank");
        const std::size_t needed = q.k + (q.tau > 0.0 ? 1 : 0);
        RHYME_REQUIRE(needed <= static_cast<std::size_t>(prof->cols()),
                      "FlowNet: input sequence does not cover the query time");
        prefix[q.group] = std::max(prefix[q.group], q.k);
        k_max = std::max(k_max, q.k);
    }

    const double inv_scale = 1.0 / input_scale_;
    FlowCache local;
    FlowCache& c = cache ? *cache : local;
    const bool keep = cache != nullptr;
    c.groups = G;
    c.queries = batch.queries;
    c.chain.assign(keep ? k_max : 0, {});
    c.chain_h.assign(k_max + 1, {});
    c.chain_c.assign(k_max + 1, {});

    c.chain_h[0] = encoder_.forward(batch.a0 * inv_scale, keep ? &c.encoder : nullptr);
    c.chain_c[0] = Eigen::MatrixXd::Zero(H, G);
    Eigen::MatrixXd x(r + 1, G);
    for (std::size_t k = 0; k < k_max; ++k) {
        for (Eigen::Index g = 0; g < G; ++g) {
            const auto* prof = batch.profiles[static_cast<std::size_t>(g)];
            if (k < prefix[static_cast<std::size_t>(g)])
                x.col(g).head(r) = prof->col(static_cast<Eigen::Index>(k)) * inv_scale;
            else
                x.col(g).head(r).setZero();  // group already past its last needed step
        }
        x.row(r).setOnes();
        cell_.step(x, c.chain_h[k], c.chain_c[k], c.chain_h[k + 1], c.chain_c[k + 1], keep ? &c.chain[k] : nullptr);
    }

    // Final step with tau < 1; skipped when tau == 0 since its weight vanishes.
    c.last_columns.clear();
    for (Eigen::Index qi = 0; qi < Q; ++qi)
        if (batch.queries[static_cast<std::size_t>(qi)].tau > 0.0) c.last_columns.push_back(qi);
    const auto L = static_cast<Eigen::Index>(c.last_columns.size());
    Eigen::MatrixXd z(H, Q);
    for (Eigen::Index qi = 0; qi < Q; ++qi) {
        const auto& q = batch.queries[static_cast<std::size_t>(qi)];
        z.col(qi) = c.chain_h[q.k].col(static_cast<Eigen::Index>(q.group));
    }
    if (L > 0) {
        Eigen::MatrixXd xl(r + 1, L), hl(H, L), cl(H, L), h_out, c_out;
        for (Eigen::Index j = 0; j < L; ++j) {
            const auto& q = batch.queries[static_cast<std::size_t>(c.last_columns[static_cast<std::size_t>(j)])];
            const auto g = static_cast<Eigen::Index>(q.group);
            xl.col(j).head(r) = batch.profiles[q.group]->col(static_cast<Eigen::Index>(q.k)) * inv_scale;
            xl(r, j) = q.tau;
            hl.col(j) = c.chain_h[q.k].col(g);
            cl.col(j) = c.chain_c[q.k].col(g);
        }
        cell_.step(xl, hl, cl, h_out, c_out, keep ? &c.last : nullptr);
        for (Eigen::Index j = 0; j < L; ++j) {
            const Eigen::Index qi = c.last_columns[static_cast<std::size_t>(j)];
            const double tau = batch.queries[static_cast<std::size_t>(qi)].tau;
            z.col(qi) = (1.0 - tau) * z.col(qi) + tau * h_out.col(j);
        }
    }
    return decoder_.forward(z, keep ? &c.decoder : nullptr);
}

void FlowNet::backward_batch(const FlowCache& c, const Eigen::MatrixXd& d_out, FlowGrads& grads) const {
    const Eigen::Index H = config_.hidden;
    const Eigen::Index G = c.groups;
    const auto Q = static_cast<Eigen::Index>(c.queries.size());
    RHYME_REQUIRE(d_out.rows() == config_.r && d_out.cols() == Q, "FlowNet::backward_batch: gradient shape mismatch");
    RHYME_REQUIRE(c.chain.size() + 1 == c.chain_h.size(), "FlowNet::backward_batch: cache was built without caching");

    const Eigen::MatrixXd dz = decoder_.backward(c.decoder, d_out, grads.decoder);
    const std::size_t K = c.chain.size();
    std::vector<Eigen::MatrixXd> dh(K + 1, Eigen::MatrixXd::Zero(H, G));
    std::vector<Eigen::MatrixXd> dcs(K + 1, Eigen::MatrixXd::Zero(H, G));

    Eigen::VectorXd direct_weight = Eigen::VectorXd::Ones(Q);
    const auto L = static_cast<Eigen::Index>(c.last_columns.size());
    if (L > 0) {
        Eigen::MatrixXd dh_last(H, L);
        for (Eigen::Index j = 0; j < L; ++j) {
            const Eigen::Index qi = c.last_columns[static_cast<std::size_t>(j)];
            const double tau = c.queries[static_cast<std::size_t>(qi)].tau;
            dh_last.col(j) = tau * dz.col(qi);
            direct_weight[qi] = 1.0 - tau;
        }
        Eigen::MatrixXd dx, dh_prev, dc_prev;
        cell_.step_backward(c.last, dh_last, Eigen::MatrixXd::Zero(H, L), grads.cell, dx, dh_prev, dc_prev);
        for (Eigen::Index j = 0; j < L; ++j) {
            const auto& q = c.queries[static_cast<std::size_t>(c.last_columns[static_cast<std::size_t>(j)])];
            const auto g = static_cast<Eigen::Index>(q.group);
            dh[q.k].col(g) += dh_prev.col(j);
            dcs[q.k].col(g) += dc_prev.col(j);
        }
    }
    for (Eigen::Index qi = 0; qi < Q; ++qi) {
        const auto& q = c.queries[static_cast<std::size_t>(qi)];
        dh[q.k].col(static_cast<Eigen::Index>(q.group)) += direct_weight[qi] * dz.col(qi);
    }
    for (std::size_t k = K; k-- > 0;) {
        Eigen::MatrixXd dx, dh_prev, dc_prev;
        cell_.step_backward(c.chain[k], dh[k + 1], dcs[k + 1], grads.cell, dx, dh_prev, dc_prev);
        dh[k] += dh_prev;
        dcs[k] += dc_prev;
    }
    encoder_.backward(c.encoder, dh[0], grads.encoder);
}

Eigen::MatrixXd FlowNet::forward_times(const Eigen::VectorXd& a0,
                                       const Eigen::MatrixXd& coeff_profiles,
                                       double delta,
                                       const std::vector<double>& times) const {
    FlowBatch batch;
    batch.a0 = a0;
    batch.profiles = {&coeff_profiles};
    batch.queries.reserve(times.size());
    for (double t : times) {
        const TimeSchedule s = schedule(t, delta);
        batch.queries.push_back({0, s.k_t, s.last_tau()});
    }
    return forward_batch(batch);
}

Eigen::VectorXd FlowNet::forward(const Eigen::VectorXd& a0, const ProjectedInputSequence& f, double t) const {
    return forward_times(a0, f.coeff_profiles, f.delta, {t}).col(0);
}

Checkpoint FlowNet::to_checkpoint() const {
    Checkpoint ck;
    auto widths = [](const std::vector<Eigen::Index>& w) {
        std::vector<double> out;
        for (auto v : w) out.push_back(static_cast<double>(v));
        return out;
    };
    ck.add_scalar("flow.r", static_cast<double>(config_.r));
    ck.add_scalar("flow.hidden", static_cast<double>(config_.hidden));
    ck.add_scalar("flow.input_scale", input_scale_);
    const auto ew = widths(encoder_.widths());
    const auto dw = widths(decoder_.widths());
    ck.add("flow.encoder.widths", {static_cast<std::uint32_t>(ew.size())}, ew);
    ck.add("flow.decoder.widths", {static_cast<std::uint32_t>(dw.size())}, dw);
    ck.add_bundle(encoder_.params());
    ck.add_bundle(cell_.params());
    ck.add_bundle(decoder_.params());
    return ck;
}

FlowNet FlowNet::from_checkpoint(const Checkpoint& ck) {
    FlowNetConfig cfg;
    cfg.r = static_cast<Eigen::Index>(ck.scalar("flow.r"));
    cfg.hidden = static_cast<Eigen::Index>(ck.scalar("flow.hidden"));
    auto inner = [](const std::vector<double>& w) {
        std::vector<Eigen::Index> out;
        for (std::size_t i = 1; i + 1 < w.size(); ++i) out.push_back(static_cast<Eigen::Index>(w[i]));
        return out;
    };
    cfg.encoder_hidden = inner(ck.get("flow.encoder.widths").data);
    cfg.decoder_hidden = inner(ck.get("flow.decoder.widths").data);
    std::mt19937_64 rng(0);
    FlowNet net(cfg, rng);
    net.input_scale_ = ck.scalar("flow.input_scale");
    ck.read_bundle(net.encoder_.params());
    ck.read_bundle(net.cell_.params());
    ck.read_bundle(net.decoder_.params());
    return net;
}

}  // namespace rhyme
