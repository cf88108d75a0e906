#pragma once

#include "rhyme/config.hpp"
#include "rhyme/pod.hpp"
#include "rhyme/training.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace rhyme {

/// Independent seed stream `name` derived from the run seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view name);

/// Dataset restricted to the N_x sample points and cut into train /
/// validation / test.
struct SplitData {
    SamplePoints points;
    DatasetSplit split;
    std::vector<SampledTrajectory> train;
    std::vector<SampledTrajectory> validation;
    std::vector<SampledTrajectory> test;
};

SplitData split_dataset(const Dataset& dataset, std::size_t n_spatial, const TrainConfig& train, std::uint64_t seed);

/// POD of the training trajectories.
PodBasis training_pod(const SplitData& data, const PodConfig& config);

BasisTrainResult fit_basis(const PodBasis& pod_basis, const ExperimentConfig& config, const Grid1D& grid, std::uint64_t seed);

/// Fresh flow and reconstruction networks on a trained basis.
SurrogateModel init_surrogate(BasisNet basis, const ExperimentConfig& config, const Grid1D& grid,
                              const SamplePoints& points, double delta, std::uint64_t seed);

struct RhymeRun {
    SplitData data;
    PodBasis pod_basis;
    BasisTrainResult basis;
    SurrogateModel model;
    TrainResult train;
};

/// split -> POD -> basis -> stage-2 training. If `basis` is given, stage 1
/// is skipped.
RhymeRun train_rhyme(const Dataset& dataset, const ExperimentConfig& config, std::uint64_t seed,
                     const BasisNet* basis = nullptr, const EpochCallback& on_epoch = {});

struct BaselineRun {
    DeepOnet net;
    TrainResult train;
};

/// Baseline sized to `target_parameters` and trained on the same split.
BaselineRun train_baseline(const SplitData& data, const ExperimentConfig& config, Eigen::Index target_parameters,
                           std::uint64_t seed, const EpochCallback& on_epoch = {});

/// Test trajectories re-simulated out to `horizon` with the same seeds and
/// extended inputs, sampled at the model points.
std::vector<SampledTrajectory> extended_trajectories(const Dataset& dataset, const std::vector<std::size_t>& indices,
                                                     const SamplePoints& points, double horizon);

/// Subset of round(fraction * N) trajectories (at least one) chosen by seed.
Dataset small_subset(const Dataset& dataset, double fraction, std::uint64_t seed);

/// The source-system dataset configuration for transfer learning.
DatasetConfig gaussian_source_config(const ExperimentConfig& config);

/// Basis for fine-tuning: POD of the target training split, rotated towards
/// the pretrained basis so the pretrained flow sees familiar coordinates,
/// then fitted by stage 1.
BasisTrainResult fit_transfer_basis(const SplitData& data, const SurrogateModel& pretrained,
                                    const ExperimentConfig& config, const Grid1D& grid, std::uint64_t seed);

struct TransferRun {
    BasisTrainResult basis;
    SurrogateModel fine_tuned;
    TrainResult fine_tuned_train;
    SurrogateModel scratch;
    TrainResult scratch_train;
};

/// Fine-tunes `pretrained` on `small` and trains a from-scratch model on
/// the same data and basis for comparison.
TransferRun transfer_experiment(const SurrogateModel& pretrained, const Dataset& small, const ExperimentConfig& config,
                                std::uint64_t seed, const EpochCallback& on_epoch = {});

}  // namespace rhyme
