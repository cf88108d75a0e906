#pragma once

#include "rhyme/basis_net.hpp"
#include "rhyme/dataset.hpp"
#include "rhyme/flow_net.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rhyme {

struct PodConfig {
    std::size_t n_spatial = 100;  // N_x
    Eigen::Index r = 50;
    std::size_t time_stride = 1;
};

struct TrainConfig {
    std::size_t batch_size = 128;
    double lr = 1.2e-4;
    double lr_decay = 0.5;
    int plateau_patience = 5;
    int early_stop = 30;
    int max_epochs = 500;
    std::size_t n_time_samples = 200;
    double train_fraction = 0.7;
    double validation_fraction = 0.2;
    /// Queries of one trajectory that share a recurrent prefix in a batch.
    std::size_t group_size = 16;
};

struct BaselineConfig {
    Eigen::Index modes = 700;  // r_b
    std::size_t depth = 4;     // layers per branch/trunk network
    std::vector<Eigen::Index> recon_hidden{50, 50};
    double parity_tolerance = 0.01;
    /// Spatial points per sampled time in the training loss (0 = all N_x).
    std::size_t points_per_time = 0;
    TrainConfig train;
};

struct TransferConfig {
    double fraction = 0.02;
    // mass a w sqrt(2 pi) = 0.94 < theta, so full activation does not sustain itself
    double source_amplitude = 0.25;
    double source_width = 1.5;
    TrainConfig train;
};

/// Everything a pipeline run needs. Defaults follow the full-size setting;
/// configs/desk.ini holds the reduced one.
struct ExperimentConfig {
    DatasetConfig data;
    PodConfig pod;
    BasisNetConfig basis;
    BasisTrainConfig basis_train;
    FlowNetConfig flow;
    std::vector<Eigen::Index> recon_hidden{50, 50};
    TrainConfig train;
    BaselineConfig baseline;
    TransferConfig transfer;
    std::vector<double> eval_horizons;  // empty = training horizon only
    std::uint64_t seed = 0;
};

/// INI-style "key = value" sections. Unknown sections or keys are rejected.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config(const std::string& text);
std::string to_ini(const ExperimentConfig& config);

}  // namespace rhyme
