#pragma once

#include "rhyme/config.hpp"
#include "rhyme/deeponet.hpp"
#include "rhyme/metrics.hpp"
#include "rhyme/surrogate.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace rhyme {

/// Halves (by `factor`) the learning rate once the validation loss has not
/// improved on its best value for `patience` consecutive epochs, and signals
/// a stop after `stop_patience` epochs without improvement.
class PlateauScheduler {
public:
    PlateauScheduler(double lr, double factor, int patience, int stop_patience);

    struct Decision {
        bool improved = false;
        bool lr_reduced = false;
        bool stop = false;
    };
    Decision observe(double val_loss);

    double lr() const noexcept { return lr_; }
    double best() const noexcept { return best_; }
    int epochs_since_best() const noexcept { return since_best_; }

private:
    double lr_;
    double factor_;
    int patience_;
    int stop_patience_;
    double best_;
    int bad_ = 0;
    int since_best_ = 0;
};

/// mean((pred - truth)^2) over all entries.
double mean_squared_error(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred);

/// Query: stored time index `time_index` of trajectory `traj`.
struct QueryRef {
    std::size_t traj = 0;
    std::size_t time_index = 0;
};

/// Latin hypercube times over each trajectory's horizon, snapped to the
/// nearest stored time.
std::vector<QueryRef> lhs_queries(const std::vector<SampledTrajectory>& trajs, std::size_t n_per_traj, std::mt19937_64& rng);

/// Coefficients of each trajectory under the model's learned basis.
struct ProjectedSet {
    const std::vector<SampledTrajectory>* trajs = nullptr;
    std::vector<Eigen::VectorXd> a0;
    std::vector<Eigen::MatrixXd> profiles;  // r x n_profiles
};
ProjectedSet project_set(const SurrogateModel& model, const std::vector<SampledTrajectory>& trajs);

/// Mean squared error over every (query, sample point) pair.
double empirical_loss(const SurrogateModel& model, const ProjectedSet& set, const std::vector<QueryRef>& queries);

using EpochCallback = std::function<void(const CurveRow&)>;

struct TrainResult {
    std::vector<CurveRow> curve;  // row 0 is the untrained state
    int best_epoch = 0;
    double best_val = 0.0;
    int epochs = 0;
    bool early_stopped = false;
};

/// Generic epoch loop shared by the surrogate and the baseline.
struct TrainHooks {
    std::function<std::vector<std::vector<std::size_t>>(std::mt19937_64&)> make_batches;
    /// Runs one optimizer step, returns the batch's mean loss.
    std::function<double(const std::vector<std::size_t>&, double lr)> step;
    std::function<double()> train_loss;
    std::function<double()> val_loss;
    std::function<void()> snapshot;
    std::function<void()> restore;
    /// Units per batch entry, used to weight the running training loss.
    std::function<double(const std::vector<std::size_t>&)> weight;
};
TrainResult run_training(const TrainConfig& config, std::uint64_t seed, const TrainHooks& hooks,
                         const EpochCallback& on_epoch = {});

/// Flow and reconstruction training with the basis frozen. The model keeps
/// the best-validation parameters on return.
TrainResult train_stage2(SurrogateModel& model,
                         const std::vector<SampledTrajectory>& train,
                         const std::vector<SampledTrajectory>& validation,
                         const TrainConfig& config,
                         std::uint64_t seed,
                         const EpochCallback& on_epoch = {});

/// Input normalization for the flow network: RMS of all projected a_0 and
/// input coefficients of the training set.
double coefficient_scale(const ProjectedSet& set);

/// New model on `basis` whose flow and reconstruction weights (and input
/// scale) are copied from `pretrained`.
SurrogateModel transfer_model(const SurrogateModel& pretrained, BasisNet basis, Grid1D grid, SamplePoints points);

/// Transfer learning: train_stage2 starting from the pretrained weights.
TrainResult fine_tune(SurrogateModel& model,
                      const std::vector<SampledTrajectory>& train,
                      const std::vector<SampledTrajectory>& validation,
                      const TrainConfig& config,
                      std::uint64_t seed,
                      const EpochCallback& on_epoch = {});

/// Per-trajectory relative l2 over all stored times in [0, horizon].
EvalReport evaluate(const SurrogateModel& model, const std::vector<SampledTrajectory>& trajs, double horizon,
                    const std::string& label = "rhyme");

/// Baseline training with teacher forcing: the branch sees the true state at
/// the start of each input window.
TrainResult train_deeponet(DeepOnet& net,
                           const std::vector<SampledTrajectory>& train,
                           const std::vector<SampledTrajectory>& validation,
                           const std::vector<double>& positions,
                           const TrainConfig& config,
                           std::size_t points_per_time,
                           std::uint64_t seed,
                           const EpochCallback& on_epoch = {});

/// Rollout evaluation of the baseline.
EvalReport evaluate_deeponet(const DeepOnet& net, const std::vector<SampledTrajectory>& trajs,
                             const std::vector<double>& positions, double horizon, const std::string& label = "deeponet");

/// RMS of u0 and input samples over a set of trajectories.
double field_scale(const std::vector<SampledTrajectory>& trajs);

}  // namespace rhyme
