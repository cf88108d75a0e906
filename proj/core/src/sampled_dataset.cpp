#include "rhyme/sampled_dataset.hpp"

#include "rhyme/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace rhyme {

namespace {
std::vector<double> voronoi_weights(const std::vector<double>& xs, double length) {
    const std::size_t n = xs.size();
    std::vector<double> w(n);
    if (n == 1) {
        w[0] = length;
        return w;
    }
    for (std::size_t j = 0; j < n; ++j) {
        const double left = j == 0 ? xs[n - 1] - length : xs[j - 1];
        const double right = j + 1 == n ? xs[0] + length : xs[j + 1];
        w[j] = 0.5 * (right - left);
    }
    return w;
}
}  // namespace

SamplePoints SamplePoints::uniform(const Grid1D& grid, std::size_t n) {
    RHYME_REQUIRE(n >= 1 && n <= grid.n_points(), "SamplePoints: need 1 <= n <= n_points");
    SamplePoints sp;
    sp.domain_length = grid.length();
    const double ratio = static_cast<double>(grid.n_points()) / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto idx = static_cast<std::size_t>(std::llround(static_cast<double>(j) * ratio)) % grid.n_points();
        sp.indices.push_back(idx);
        sp.positions.push_back(grid.node(idx));
    }
    sp.weights = voronoi_weights(sp.positions, sp.domain_length);
    return sp;
}

SamplePoints SamplePoints::from_positions(std::vector<double> positions, double x_min, double x_max) {
    RHYME_REQUIRE(!positions.empty(), "SamplePoints: empty position list");
    RHYME_REQUIRE(std::is_sorted(positions.begin(), positions.end()), "SamplePoints: positions must be sorted");
    RHYME_REQUIRE(positions.front() >= x_min && positions.back() < x_max, "SamplePoints: positions outside domain");
    SamplePoints sp;
    sp.domain_length = x_max - x_min;
    sp.positions = std::move(positions);
    sp.indices.resize(sp.positions.size());
    std::iota(sp.indices.begin(), sp.indices.end(), std::size_t{0});
    sp.weights = voronoi_weights(sp.positions, sp.domain_length);
    return sp;
}

SampledTrajectory sample_trajectory(const Trajectory& traj, const SamplePoints& points, std::size_t source_index) {
    const auto nx = static_cast<Eigen::Index>(points.size());
    for (std::size_t idx : points.indices) RHYME_REQUIRE(idx < traj.n_points, "sample point outside trajectory grid");
    SampledTrajectory s;
    s.delta = traj.input.delta;
    s.source_index = source_index;
    s.times = traj.times;
    s.u0.resize(nx);
    for (Eigen::Index j = 0; j < nx; ++j) s.u0[j] = traj.u0[points.indices[j]];
    const auto np = static_cast<Eigen::Index>(traj.input.n_profiles());
    s.profiles.resize(np, nx);
    for (Eigen::Index k = 0; k < np; ++k)
        for (Eigen::Index j = 0; j < nx; ++j) s.profiles(k, j) = traj.input.profiles[k][points.indices[j]];
    const auto K = static_cast<Eigen::Index>(traj.n_times());
    s.states.resize(K, nx);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double* row = traj.states.data() + static_cast<std::size_t>(k) * traj.n_points;
        for (Eigen::Index j = 0; j < nx; ++j) s.states(k, j) = row[points.indices[j]];
    }
    return s;
}

DatasetSplit split_indices(std::size_t n, std::uint64_t seed, double train_fraction, double validation_fraction) {
    RHYME_REQUIRE(train_fraction >= 0.0 && validation_fraction >= 0.0 && train_fraction + validation_fraction <= 1.0 + 1e-12,
                  "split fractions must be non-negative and sum to at most 1");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed ^ 0x5EED5EED5EED5EEDULL);
    // Fisher-Yates with our own index draws: std::shuffle is implementation-defined
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
    n_train = std::min(n_train, n);
    n_val = std::min(n_val, n - n_train);
    DatasetSplit split;
    split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                            order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

}  // namespace rhyme
