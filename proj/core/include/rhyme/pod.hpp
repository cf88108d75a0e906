#pragma once

#include "rhyme/sampled_dataset.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace rhyme {

/// N_x x M snapshot matrix; columns are ordered trajectory-major, then time.
struct SnapshotMatrix {
    Eigen::MatrixXd values;
    std::vector<double> spatial_points;
    std::string provenance;
};

/// Which stored time slices enter the snapshot matrix. stride == 1 is the
/// full set of temporal points.
struct TimeSelection {
    std::size_t stride = 1;
    static TimeSelection all() { return {}; }
};

SnapshotMatrix assemble_snapshots(const std::vector<SampledTrajectory>& trajectories,
                                  const SamplePoints& points,
                                  TimeSelection selection = TimeSelection::all(),
                                  std::string provenance = {});

/// Restricts `dataset` (or the listed trajectories of it) to n_spatial nodes
/// and stacks the snapshots.
SnapshotMatrix assemble_snapshots(const Dataset& dataset,
                                  std::size_t n_spatial,
                                  TimeSelection selection = TimeSelection::all(),
                                  const std::vector<std::size_t>* subset = nullptr);

/// Truncated POD: left singular vectors and singular values of the snapshot matrix.
struct PodBasis {
    Eigen::MatrixXd modes;            // N_x x r, orthonormal columns
    Eigen::VectorXd singular_values;  // descending
    std::vector<double> spatial_points;

    Eigen::Index rank() const noexcept { return modes.cols(); }
};

/// Method of snapshots: eigendecomposition of the Gram matrix A A^T.
/// Each mode is signed so its largest-magnitude entry is positive.
PodBasis pod(const SnapshotMatrix& snapshots, Eigen::Index r);

/// A A^T accumulated over column blocks in a fixed order.
Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& snapshots);

/// Flip column signs so that the first largest-|.| entry of each column is positive.
void fix_mode_signs(Eigen::MatrixXd& modes);

/// Rotates the modes within their span to best match `reference` (N_x x r)
/// in the Frobenius norm (orthogonal Procrustes). The subspace is unchanged;
/// singular values are kept as the spectrum of that subspace.
PodBasis align_modes(const PodBasis& basis, const Eigen::MatrixXd& reference);

/// RXP1: "RXP1", u32 N_x, u32 r, f64 spatial_points[N_x], f64 sigma[r], f64 modes[N_x*r] row-major.
void save_pod_basis(const PodBasis& basis, const std::filesystem::path& path);
PodBasis load_pod_basis(const std::filesystem::path& path);

}  // namespace rhyme
