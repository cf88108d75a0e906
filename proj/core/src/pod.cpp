#include "rhyme/pod.hpp"

#include "rhyme/binary_io.hpp"
#include "rhyme/error.hpp"
#include "rhyme/symmetric_eigen.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <fstream>

namespace rhyme {

SnapshotMatrix assemble_snapshots(const std::vector<SampledTrajectory>& trajectories,
                                  const SamplePoints& points,
                                  TimeSelection selection,
                                  std::string provenance) {
    RHYME_REQUIRE(!trajectories.empty(), "assemble_snapshots: empty dataset");
    RHYME_REQUIRE(selection.stride >= 1, "assemble_snapshots: stride must be >= 1");
    const auto nx = static_cast<Eigen::Index>(points.size());
    Eigen::Index cols = 0;
    for (const auto& t : trajectories) {
        RHYME_REQUIRE(t.states.cols() == nx, "assemble_snapshots: trajectory not sampled on these points");
        cols += (t.states.rows() + static_cast<Eigen::Index>(selection.stride) - 1) / static_cast<Eigen::Index>(selection.stride);
    }
    SnapshotMatrix s;
    s.values.resize(nx, cols);
    s.spatial_points = points.positions;
    s.provenance = std::move(provenance);
    Eigen::Index c = 0;
    for (const auto& t : trajectories)
        for (Eigen::Index k = 0; k < t.states.rows(); k += static_cast<Eigen::Index>(selection.stride))
            s.values.col(c++) = t.states.row(k).transpose();
    RHYME_REQUIRE(s.values.allFinite(), "assemble_snapshots: non-finite snapshot entries");
    return s;
}

SnapshotMatrix assemble_snapshots(const Dataset& dataset,
                                  std::size_t n_spatial,
                                  TimeSelection selection,
                                  const std::vector<std::size_t>* subset) {
    RHYME_REQUIRE(dataset.size() > 0, "assemble_snapshots: empty dataset");
    RHYME_REQUIRE(n_spatial >= 1 && n_spatial <= dataset.grid.n_points(),
                  "assemble_snapshots: n_spatial must not exceed the grid size");
    const SamplePoints points = SamplePoints::uniform(dataset.grid, n_spatial);
    std::vector<SampledTrajectory> sampled;
    if (subset) {
        for (std::size_t i : *subset) {
            RHYME_REQUIRE(i < dataset.size(), "assemble_snapshots: subset index out of range");
            sampled.push_back(sample_trajectory(dataset.trajectories[i], points, i));
        }
    } else {
        for (std::size_t i = 0; i < dataset.size(); ++i) sampled.push_back(sample_trajectory(dataset.trajectories[i], points, i));
    }
    return assemble_snapshots(sampled, points, selection, "seed:" + std::to_string(dataset.master_seed));
}

Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& a) {
    const Eigen::Index block = 4096;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(a.rows(), a.rows());
    for (Eigen::Index c = 0; c < a.cols(); c += block) {
        const Eigen::Index w = std::min(block, a.cols() - c);
        g.noalias() += a.middleCols(c, w) * a.middleCols(c, w).transpose();
    }
    return g;
}

void fix_mode_signs(Eigen::MatrixXd& modes) {
    for (Eigen::Index j = 0; j < modes.cols(); ++j) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < modes.rows(); ++i) {
            if (std::abs(modes(i, j)) > best) {
                best = std::abs(modes(i, j));
                arg = i;
            }
        }
        if (modes(arg, j) < 0.0) modes.col(j) *= -1.0;
    }
}

PodBasis pod(const SnapshotMatrix& snapshots, Eigen::Index r) {
    const Eigen::MatrixXd& a = snapshots.values;
    RHYME_REQUIRE(r >= 1 && r <= std::min(a.rows(), a.cols()), "pod: r must lie in [1, min(N_x, M)]");
    RHYME_REQUIRE(a.allFinite(), "pod: non-finite snapshot matrix");
    const SymmetricEigen eig = jacobi_eigen(gram_matrix(a));
    PodBasis basis;
    basis.modes = eig.vectors.leftCols(r);
    fix_mode_signs(basis.modes);
    basis.singular_values.resize(r);
    for (Eigen::Index n = 0; n < r; ++n) basis.singular_values[n] = std::sqrt(std::max(eig.values[n], 0.0));
    basis.spatial_points = snapshots.spatial_points;
    return basis;
}

PodBasis align_modes(const PodBasis& basis, const Eigen::MatrixXd& reference) {
    RHYME_REQUIRE(reference.rows() == basis.modes.rows() && reference.cols() == basis.modes.cols(),
                  "align_modes: reference shape differs from the modes");
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(basis.modes.transpose() * reference,
                                                Eigen::ComputeFullU | Eigen::ComputeFullV);
    PodBasis out = basis;
    out.modes = basis.modes * (svd.matrixU() * svd.matrixV().transpose());
    return out;
}

void save_pod_basis(const PodBasis& basis, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const auto nx = basis.modes.rows();
    const auto r = basis.modes.cols();
    RHYME_REQUIRE(static_cast<Eigen::Index>(basis.spatial_points.size()) == nx, "PodBasis: spatial point count mismatch");
    io::write_magic(out, "RXP1");
    io::write_u32(out, io::checked_u32(static_cast<std::size_t>(nx), "N_x"));
    io::write_u32(out, io::checked_u32(static_cast<std::size_t>(r), "r"));
    io::write_f64(out, basis.spatial_points);
    io::write_f64(out, std::span<const double>(basis.singular_values.data(), static_cast<std::size_t>(r)));
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major = basis.modes;
    io::write_f64(out, std::span<const double>(row_major.data(), static_cast<std::size_t>(row_major.size())));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

PodBasis load_pod_basis(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContractViolation("cannot open POD file " + path.string());
    io::expect_magic(in, "RXP1", path.string());
    const std::size_t nx = io::read_u32(in);
    const std::size_t r = io::read_u32(in);
    PodBasis basis;
    basis.spatial_points = io::read_f64(in, nx);
    basis.singular_values.resize(static_cast<Eigen::Index>(r));
    io::read_f64(in, std::span<double>(basis.singular_values.data(), r));
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major(nx, r);
    io::read_f64(in, std::span<double>(row_major.data(), nx * r));
    basis.modes = row_major;
    return basis;
}

}  // namespace rhyme
