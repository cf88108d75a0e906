#pragma once

#include "rhyme/grid.hpp"
#include "rhyme/input_signal.hpp"
#include "rhyme/neural_field.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rhyme {

/// Everything needed to regenerate a dataset bit-for-bit.
struct DatasetConfig {
    double x_min = -10.0;
    double x_max = 10.0;
    std::size_t n_points = 800;
    double dt = 0.025;
    double t_end = 50.0;
    double delta = 0.5;
    std::size_t block_length = 10;
    std::size_t n_trajectories = 1000;
    double theta = 1.0;
    double slope = 1000.0;
    KernelParams kernel;
    std::string kernel_name = "mexican_hat";
    BumpLaw initial_law;
    BumpLaw input_law;
    /// 0 picks std::thread::hardware_concurrency().
    unsigned threads = 0;

    Grid1D grid() const { return Grid1D(x_min, x_max, n_points); }
};

struct Dataset {
    DatasetConfig config;
    Grid1D grid;
    std::uint64_t master_seed = 0;
    std::vector<Trajectory> trajectories;

    std::size_t size() const noexcept { return trajectories.size(); }
};

/// Per-trajectory seed derived from the master seed (splitmix64 of seed + index).
std::uint64_t trajectory_seed(std::uint64_t master_seed, std::size_t index);

/// Draws u0 then the input blocks from one generator seeded with `seed`, so a
/// longer horizon extends the same input sequence.
Trajectory generate_trajectory(const DatasetConfig& config,
                               const NeuralFieldModel& model,
                               std::uint64_t seed);

/// Simulates N independent trajectories. Parallel over trajectories; the
/// result does not depend on the thread count.
Dataset generate_dataset(const DatasetConfig& config, std::uint64_t master_seed);

/// Regenerates selected trajectories of `config` out to a longer horizon.
std::vector<Trajectory> regenerate_trajectories(const DatasetConfig& config,
                                                std::uint64_t master_seed,
                                                const std::vector<std::size_t>& indices,
                                                double t_end);

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);
DatasetConfig load_dataset_config(const std::filesystem::path& dir, std::uint64_t* master_seed = nullptr);

/// Binary trajectory file: "RXT1", u32 n_points, u32 K, u32 n_profiles, then
/// little-endian f64 u0, profiles, times, states (row-major).
void write_trajectory_file(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_trajectory_file(const std::filesystem::path& path, double delta);

std::string trajectory_file_name(std::size_t index);

}  // namespace rhyme
