#include "rhyme/training.hpp"

#include "rhyme/adam.hpp"
#include "rhyme/error.hpp"
#include "rhyme/lhs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <utility>

namespace rhyme {

PlateauScheduler::PlateauScheduler(double lr, double factor, int patience, int stop_patience)
    : lr_(lr), factor_(factor), patience_(patience), stop_patience_(stop_patience),
      best_(std::numeric_limits<double>::infinity()) {
    RHYME_REQUIRE(lr > 0.0 && factor > 0.0 && factor <= 1.0 && patience >= 1 && stop_patience >= 1,
                  "PlateauScheduler: invalid settings");
}

PlateauScheduler::Decision PlateauScheduler::observe(double val_loss) {
    Decision d;
    if (val_loss < best_) {
        best_ = val_loss;
        bad_ = 0;
        since_best_ = 0;
        d.improved = true;
        return d;
    }
    ++bad_;
    ++since_best_;
    if (bad_ >= patience_) {
        lr_ *= factor_;
        bad_ = 0;
        d.lr_reduced = true;
    }
    d.stop = since_best_ >= stop_patience_;
    return d;
}

double mean_squared_error(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred) {
    RHYME_REQUIRE(truth.rows() == pred.rows() && truth.cols() == pred.cols(), "mean_squared_error: shape mismatch");
    RHYME_REQUIRE(truth.size() > 0, "mean_squared_error: empty input");
    return (pred - truth).squaredNorm() / static_cast<double>(truth.size());
}

namespace {

std::size_t nearest_time_index(const std::vector<double>& times, double t) {
    auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.end()) return times.size() - 1;
    const auto i = static_cast<std::size_t>(it - times.begin());
    if (i > 0 && t - times[i - 1] <= times[i] - t) return i - 1;
    return i;
}

template <class Rng>
void shuffle_in_place(std::vector<std::size_t>& v, Rng& rng) {
    // explicit Fisher-Yates: std::shuffle's draw pattern is library specific
    for (std::size_t i = v.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(v[i - 1], v[pick(rng)]);
    }
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct BuiltBatch {
    FlowBatch flow;
    Eigen::MatrixXd truth;  // N_x x Q
};

BuiltBatch build_flow_batch(const ProjectedSet& set, const std::vector<QueryRef>& queries,
                            const std::vector<std::size_t>& members, double delta) {
    BuiltBatch b;
    std::map<std::size_t, std::size_t> group_of;
    std::vector<std::size_t> order;
    for (std::size_t m : members) {
        const std::size_t tr = queries[m].traj;
        if (group_of.emplace(tr, order.size()).second) order.push_back(tr);
    }
    const auto& trajs = *set.trajs;
    const Eigen::Index r = set.a0.front().size();
    b.flow.a0.resize(r, static_cast<Eigen::Index>(order.size()));
    for (std::size_t g = 0; g < order.size(); ++g) {
        b.flow.a0.col(static_cast<Eigen::Index>(g)) = set.a0[order[g]];
        b.flow.profiles.push_back(&set.profiles[order[g]]);
    }
    const Eigen::Index nx = trajs.front().states.cols();
    b.truth.resize(nx, static_cast<Eigen::Index>(members.size()));
    for (std::size_t i = 0; i < members.size(); ++i) {
        const auto& q = queries[members[i]];
        const auto& tr = trajs[q.traj];
        const TimeSchedule s = schedule(tr.times[q.time_index], delta);
        b.flow.queries.push_back({group_of.at(q.traj), s.k_t, s.last_tau()});
        b.truth.col(static_cast<Eigen::Index>(i)) = tr.states.row(static_cast<Eigen::Index>(q.time_index)).transpose();
    }
    return b;
}

/// Splits query indices into evaluation chunks of whole trajectories.
std::vector<std::vector<std::size_t>> chunk_by_traj(const std::vector<QueryRef>& queries, std::size_t max_chunk) {
    std::vector<std::vector<std::size_t>> chunks;
    std::map<std::size_t, std::vector<std::size_t>> per;
    for (std::size_t i = 0; i < queries.size(); ++i) per[queries[i].traj].push_back(i);
    std::vector<std::size_t> cur;
    for (auto& [traj, list] : per) {
        if (!cur.empty() && cur.size() + list.size() > max_chunk) {
            chunks.push_back(std::move(cur));
            cur.clear();
        }
        cur.insert(cur.end(), list.begin(), list.end());
    }
    if (!cur.empty()) chunks.push_back(std::move(cur));
    return chunks;
}

}  // namespace

std::vector<QueryRef> lhs_queries(const std::vector<SampledTrajectory>& trajs, std::size_t n_per_traj, std::mt19937_64& rng) {
    std::vector<QueryRef> out;
    out.reserve(trajs.size() * n_per_traj);
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        const auto& times = trajs[i].times;
        RHYME_REQUIRE(times.size() >= 2, "lhs_queries: trajectory needs at least two stored times");
        for (double t : lhs_times(times.back() - times.front(), n_per_traj, rng))
            out.push_back({i, nearest_time_index(times, times.front() + t)});
    }
    return out;
}

ProjectedSet project_set(const SurrogateModel& model, const std::vector<SampledTrajectory>& trajs) {
    ProjectedSet s;
    s.trajs = &trajs;
    for (const auto& t : trajs) {
        s.a0.push_back(model.project_state(t.u0));
        s.profiles.push_back(model.project_profiles(t.profiles));
    }
    return s;
}

double coefficient_scale(const ProjectedSet& set) {
    double sum = 0.0;
    double n = 0.0;
    for (std::size_t i = 0; i < set.a0.size(); ++i) {
        sum += set.a0[i].squaredNorm() + set.profiles[i].squaredNorm();
        n += static_cast<double>(set.a0[i].size() + set.profiles[i].size());
    }
    RHYME_REQUIRE(n > 0.0, "coefficient_scale: empty set");
    const double rms = std::sqrt(sum / n);
    return rms > 0.0 ? rms : 1.0;
}

double field_scale(const std::vector<SampledTrajectory>& trajs) {
    double sum = 0.0;
    double n = 0.0;
    for (const auto& t : trajs) {
        sum += t.u0.squaredNorm() + t.profiles.squaredNorm();
        n += static_cast<double>(t.u0.size() + t.profiles.size());
    }
    RHYME_REQUIRE(n > 0.0, "field_scale: empty set");
    const double rms = std::sqrt(sum / n);
    return rms > 0.0 ? rms : 1.0;
}

double empirical_loss(const SurrogateModel& model, const ProjectedSet& set, const std::vector<QueryRef>& queries) {
    RHYME_REQUIRE(!queries.empty(), "empirical_loss: no queries");
    double sse = 0.0;
    double count = 0.0;
    for (const auto& chunk : chunk_by_traj(queries, 512)) {
        const BuiltBatch b = build_flow_batch(set, queries, chunk, model.delta());
        const Eigen::MatrixXd pred = predict_batch(model, b.flow);
        sse += (pred - b.truth).squaredNorm();
        count += static_cast<double>(b.truth.size());
    }
    return sse / count;
}

TrainResult run_training(const TrainConfig& config, std::uint64_t seed, const TrainHooks& hooks,
                         const EpochCallback& on_epoch) {
    std::mt19937_64 rng(seed);
    PlateauScheduler sched(config.lr, config.lr_decay, config.plateau_patience, config.early_stop);
    TrainResult res;
    const double lr0 = sched.lr();
    const double val0 = hooks.val_loss();
    const double train0 = hooks.train_loss();
    if (!std::isfinite(val0) || !std::isfinite(train0)) throw TrainingDiverged("non-finite loss before training");
    res.curve.push_back({0, train0, val0, lr0});
    if (on_epoch) on_epoch(res.curve.back());
    sched.observe(val0);
    hooks.snapshot();
    res.best_val = val0;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const double lr = sched.lr();
        double sum = 0.0;
        double weight = 0.0;
        for (const auto& batch : hooks.make_batches(rng)) {
            const double l = hooks.step(batch, lr);
            const double w = hooks.weight(batch);
            sum += l * w;
            weight += w;
        }
        const double train = sum / weight;
        const double val = hooks.val_loss();
        if (!std::isfinite(train) || !std::isfinite(val))
            throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch));
        res.curve.push_back({epoch, train, val, lr});
        res.epochs = epoch;
        if (on_epoch) on_epoch(res.curve.back());
        const auto d = sched.observe(val);
        if (d.improved) {
            hooks.snapshot();
            res.best_epoch = epoch;
            res.best_val = val;
        }
        if (d.stop) {
            res.early_stopped = true;
            break;
        }
    }
    hooks.restore();
    return res;
}

TrainResult train_stage2(SurrogateModel& model,
                         const std::vector<SampledTrajectory>& train,
                         const std::vector<SampledTrajectory>& validation,
                         const TrainConfig& config,
                         std::uint64_t seed,
                         const EpochCallback& on_epoch) {
    RHYME_REQUIRE(!train.empty(), "train_stage2: empty training set");
    const ProjectedSet tr = project_set(model, train);
    const ProjectedSet va = project_set(model, validation);
    std::mt19937_64 lhs_train(mix(seed, 1));
    std::mt19937_64 lhs_val(mix(seed, 2));
    const std::vector<QueryRef> train_q = lhs_queries(train, config.n_time_samples, lhs_train);
    const std::vector<QueryRef> val_q = lhs_queries(validation, config.n_time_samples, lhs_val);

    std::vector<std::vector<std::size_t>> per_traj(train.size());
    for (std::size_t i = 0; i < train_q.size(); ++i) per_traj[train_q[i].traj].push_back(i);

    auto bundles = model.flow().bundles();
    bundles.push_back(&model.recon().params());
    AdamOptimizer opt(bundles, AdamConfig{config.lr});
    FlowGrads fg = model.flow().zero_grads();
    ParamBundle rg = model.recon().params().zeros_like();
    std::vector<Eigen::VectorXd> best;

    TrainHooks hooks;
    hooks.make_batches = [&](std::mt19937_64& rng) {
        std::vector<std::vector<std::size_t>> groups;
        for (auto list : per_traj) {
            shuffle_in_place(list, rng);
            for (std::size_t s = 0; s < list.size(); s += config.group_size)
                groups.emplace_back(list.begin() + static_cast<std::ptrdiff_t>(s),
                                    list.begin() + static_cast<std::ptrdiff_t>(std::min(list.size(), s + config.group_size)));
        }
        std::vector<std::size_t> order(groups.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_in_place(order, rng);
        std::vector<std::vector<std::size_t>> batches;
        std::vector<std::size_t> cur;
        for (std::size_t g : order) {
            if (!cur.empty() && cur.size() + groups[g].size() > config.batch_size) {
                batches.push_back(std::move(cur));
                cur.clear();
            }
            cur.insert(cur.end(), groups[g].begin(), groups[g].end());
        }
        if (!cur.empty()) batches.push_back(std::move(cur));
        return batches;
    };
    hooks.step = [&](const std::vector<std::size_t>& members, double lr) {
        const BuiltBatch b = build_flow_batch(tr, train_q, members, model.delta());
        SurrogateCache cache;
        const Eigen::MatrixXd pred = predict_batch(model, b.flow, &cache);
        const Eigen::MatrixXd diff = pred - b.truth;
        const double n = static_cast<double>(diff.size());
        const double loss = diff.squaredNorm() / n;
        if (!std::isfinite(loss)) throw TrainingDiverged("non-finite training loss");
        fg.set_zero();
        rg.set_zero();
        predict_backward(model, cache, (2.0 / n) * diff, fg, rg);
        opt.set_lr(lr);
        opt.step({fg.encoder, fg.cell, fg.decoder, rg});
        return loss;
    };
    hooks.weight = [](const std::vector<std::size_t>& members) { return static_cast<double>(members.size()); };
    hooks.train_loss = [&] { return empirical_loss(model, tr, train_q); };
    hooks.val_loss = [&] { return val_q.empty() ? empirical_loss(model, tr, train_q) : empirical_loss(model, va, val_q); };
    hooks.snapshot = [&] {
        best.clear();
        for (auto* b : bundles) best.push_back(std::as_const(*b).flat());
    };
    hooks.restore = [&] {
        for (std::size_t i = 0; i < bundles.size(); ++i) bundles[i]->flat() = best[i];
    };
    return run_training(config, mix(seed, 3), hooks, on_epoch);
}

SurrogateModel transfer_model(const SurrogateModel& pretrained, BasisNet basis, Grid1D grid, SamplePoints points) {
    RHYME_REQUIRE(basis.rank() == pretrained.rank(), "transfer_model: basis rank differs from the pretrained model");
    return SurrogateModel(std::move(basis), pretrained.flow(), pretrained.recon(), std::move(grid), std::move(points),
                          pretrained.delta());
}

TrainResult fine_tune(SurrogateModel& model,
                      const std::vector<SampledTrajectory>& train,
                      const std::vector<SampledTrajectory>& validation,
                      const TrainConfig& config,
                      std::uint64_t seed,
                      const EpochCallback& on_epoch) {
    return train_stage2(model, train, validation, config, seed, on_epoch);
}

EvalReport evaluate(const SurrogateModel& model, const std::vector<SampledTrajectory>& trajs, double horizon,
                    const std::string& label) {
    EvalReport rep;
    rep.label = label;
    rep.horizon = horizon;
    for (const auto& tr : trajs) {
        RHYME_REQUIRE(!tr.times.empty() && tr.times.back() >= horizon - 1e-9,
                      "evaluate: trajectory does not cover the evaluation horizon");
        std::vector<double> times;
        for (double t : tr.times)
            if (t <= horizon + 1e-9) times.push_back(t);
        const Eigen::MatrixXd pred = model.predict_on_points(tr, times);
        rep.trajectory_ids.push_back(tr.source_index);
        rep.errors.push_back(relative_l2(tr.states.topRows(static_cast<Eigen::Index>(times.size())), pred));
    }
    return rep;
}

namespace {

struct DonUnit {
    std::size_t traj = 0;
    std::size_t time_index = 0;
    std::vector<Eigen::Index> points;
};

struct DonBuilt {
    DeepOnetBatch batch;
    Eigen::RowVectorXd truth;
};

std::vector<DonUnit> don_units(const std::vector<SampledTrajectory>& trajs, std::size_t n_times, std::size_t per_time,
                               std::mt19937_64& rng) {
    std::vector<DonUnit> units;
    for (const auto& q : lhs_queries(trajs, n_times, rng)) {
        DonUnit u{q.traj, q.time_index, {}};
        const auto nx = static_cast<std::size_t>(trajs[q.traj].states.cols());
        std::vector<std::size_t> idx(nx);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        if (per_time > 0 && per_time < nx) {
            shuffle_in_place(idx, rng);
            idx.resize(per_time);
            std::sort(idx.begin(), idx.end());
        }
        for (auto j : idx) u.points.push_back(static_cast<Eigen::Index>(j));
        units.push_back(std::move(u));
    }
    return units;
}

DonBuilt build_don_batch(const DeepOnet& net, const std::vector<SampledTrajectory>& trajs,
                         const std::vector<DonUnit>& units, const std::vector<std::size_t>& members,
                         const std::vector<double>& positions) {
    const auto& c = net.config();
    const Eigen::Index nx = c.n_sensors;
    DonBuilt b;
    std::map<std::pair<std::size_t, std::size_t>, Eigen::Index> column;
    std::vector<std::pair<std::size_t, std::size_t>> keys;
    std::vector<std::pair<std::size_t, double>> where(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
        const auto& u = units[members[i]];
        const auto& tr = trajs[u.traj];
        const auto n_windows = static_cast<std::size_t>(
            std::max(1.0, std::ceil((tr.times.back() - tr.times.front()) / c.window - 1e-12)));
        where[i] = don_window(tr.times[u.time_index] - tr.times.front(), c.window, n_windows);
        const auto key = std::make_pair(u.traj, where[i].first);
        if (column.emplace(key, static_cast<Eigen::Index>(keys.size())).second) keys.push_back(key);
    }
    b.batch.branch_inputs.resize(2 * nx, static_cast<Eigen::Index>(keys.size()));
    for (std::size_t s = 0; s < keys.size(); ++s) {
        const auto& tr = trajs[keys[s].first];
        const double t_start = tr.times.front() + static_cast<double>(keys[s].second) * c.window;
        const std::size_t ti = nearest_time_index(tr.times, t_start);
        const double hold_count = c.window / tr.delta;
        const auto k = static_cast<Eigen::Index>(std::llround(hold_count * static_cast<double>(keys[s].second)));
        RHYME_REQUIRE(k < tr.profiles.rows(), "train_deeponet: input does not cover the window");
        b.batch.branch_inputs.col(static_cast<Eigen::Index>(s)) << tr.states.row(static_cast<Eigen::Index>(ti)).transpose(),
            tr.profiles.row(k).transpose();
    }
    std::size_t total = 0;
    for (std::size_t m : members) total += units[m].points.size();
    b.truth.resize(static_cast<Eigen::Index>(total));
    Eigen::Index p = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
        const auto& u = units[members[i]];
        const Eigen::Index col = column.at({u.traj, where[i].first});
        for (Eigen::Index j : u.points) {
            b.batch.owner.push_back(col);
            b.batch.x.push_back(positions[static_cast<std::size_t>(j)]);
            b.batch.t_local.push_back(where[i].second);
            b.truth[p++] = trajs[u.traj].states(static_cast<Eigen::Index>(u.time_index), j);
        }
    }
    return b;
}

double don_loss(const DeepOnet& net, const std::vector<SampledTrajectory>& trajs, const std::vector<DonUnit>& units,
                const std::vector<double>& positions) {
    double sse = 0.0;
    double n = 0.0;
    for (std::size_t s = 0; s < units.size(); s += 64) {
        std::vector<std::size_t> members;
        for (std::size_t i = s; i < std::min(units.size(), s + 64); ++i) members.push_back(i);
        const DonBuilt b = build_don_batch(net, trajs, units, members, positions);
        sse += (don_forward(net, b.batch) - b.truth).squaredNorm();
        n += static_cast<double>(b.truth.size());
    }
    return sse / n;
}

}  // namespace

TrainResult train_deeponet(DeepOnet& net,
                           const std::vector<SampledTrajectory>& train,
                           const std::vector<SampledTrajectory>& validation,
                           const std::vector<double>& positions,
                           const TrainConfig& config,
                           std::size_t points_per_time,
                           std::uint64_t seed,
                           const EpochCallback& on_epoch) {
    RHYME_REQUIRE(!train.empty(), "train_deeponet: empty training set");
    RHYME_REQUIRE(static_cast<Eigen::Index>(positions.size()) == net.config().n_sensors,
                  "train_deeponet: positions differ from sensor count");
    std::mt19937_64 unit_train(mix(seed, 11));
    std::mt19937_64 unit_val(mix(seed, 12));
    const auto train_u = don_units(train, config.n_time_samples, points_per_time, unit_train);
    const auto val_u = don_units(validation, config.n_time_samples, points_per_time, unit_val);

    auto bundles = net.bundles();
    AdamOptimizer opt(bundles, AdamConfig{config.lr});
    DeepOnetGrads g = deeponet_zero_grads(net);
    std::vector<Eigen::VectorXd> best;

    TrainHooks hooks;
    hooks.make_batches = [&](std::mt19937_64& rng) {
        std::vector<std::size_t> order(train_u.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_in_place(order, rng);
        std::vector<std::vector<std::size_t>> batches;
        for (std::size_t s = 0; s < order.size(); s += config.batch_size)
            batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s),
                                 order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), s + config.batch_size)));
        return batches;
    };
    hooks.step = [&](const std::vector<std::size_t>& members, double lr) {
        const DonBuilt b = build_don_batch(net, train, train_u, members, positions);
        DeepOnetCache cache;
        const Eigen::RowVectorXd diff = don_forward(net, b.batch, &cache) - b.truth;
        const double n = static_cast<double>(diff.size());
        const double loss = diff.squaredNorm() / n;
        if (!std::isfinite(loss)) throw TrainingDiverged("non-finite baseline training loss");
        g.set_zero();
        don_backward(net, cache, b.batch, (2.0 / n) * diff, g);
        opt.set_lr(lr);
        opt.step({g.branch, g.trunk, g.recon});
        return loss;
    };
    hooks.weight = [&](const std::vector<std::size_t>& members) {
        double w = 0.0;
        for (std::size_t m : members) w += static_cast<double>(train_u[m].points.size());
        return w;
    };
    hooks.train_loss = [&] { return don_loss(net, train, train_u, positions); };
    hooks.val_loss = [&] {
        return val_u.empty() ? don_loss(net, train, train_u, positions) : don_loss(net, validation, val_u, positions);
    };
    hooks.snapshot = [&] {
        best.clear();
        for (auto* b : bundles) best.push_back(std::as_const(*b).flat());
    };
    hooks.restore = [&] {
        for (std::size_t i = 0; i < bundles.size(); ++i) bundles[i]->flat() = best[i];
    };
    return run_training(config, mix(seed, 13), hooks, on_epoch);
}

EvalReport evaluate_deeponet(const DeepOnet& net, const std::vector<SampledTrajectory>& trajs,
                             const std::vector<double>& positions, double horizon, const std::string& label) {
    EvalReport rep;
    rep.label = label;
    rep.horizon = horizon;
    for (const auto& tr : trajs) {
        RHYME_REQUIRE(!tr.times.empty() && tr.times.back() >= horizon - 1e-9,
                      "evaluate_deeponet: trajectory does not cover the evaluation horizon");
        std::vector<double> times;
        for (double t : tr.times)
            if (t <= horizon + 1e-9) times.push_back(t);
        const Eigen::MatrixXd pred = don_rollout(net, tr.u0, tr.profiles, tr.delta, positions, times);
        rep.trajectory_ids.push_back(tr.source_index);
        rep.errors.push_back(relative_l2(tr.states.topRows(static_cast<Eigen::Index>(times.size())), pred));
    }
    return rep;
}

}  // namespace rhyme
