#pragma once

#include "rhyme/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace rhyme {

/// A subset of grid nodes used as the training/evaluation view together with
/// quadrature weights for inner products on that subset.
struct SamplePoints {
    std::vector<std::size_t> indices;
    std::vector<double> positions;
    std::vector<double> weights;
    double domain_length = 0.0;

    std::size_t size() const noexcept { return indices.size(); }

    /// n points at the nodes nearest to x_min + j*L/n. Weights are the
    /// periodic midpoint (Voronoi) cell lengths, so they sum to L and reduce
    /// to dx when n == n_points.
    static SamplePoints uniform(const Grid1D& grid, std::size_t n);
    static SamplePoints from_positions(std::vector<double> positions, double x_min, double x_max);
};

/// Trajectory restricted to the sample points. states is K x N_x.
struct SampledTrajectory {
    Eigen::VectorXd u0;
    Eigen::MatrixXd profiles;   // n_profiles x N_x
    std::vector<double> times;
    Eigen::MatrixXd states;     // K x N_x
    double delta = 0.5;
    std::size_t source_index = 0;
};

SampledTrajectory sample_trajectory(const Trajectory& traj, const SamplePoints& points, std::size_t source_index = 0);

struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

/// Deterministic shuffle of 0..n-1 cut into train/validation/test by the
/// given fractions (rounded; test takes the remainder).
DatasetSplit split_indices(std::size_t n, std::uint64_t seed, double train_fraction = 0.7, double validation_fraction = 0.2);

}  // namespace rhyme
