#pragma once

#include "rhyme/grid.hpp"

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace rhyme {

/// Input f(x,t) = profiles[k](x) for k*delta <= t < (k+1)*delta.
struct PiecewiseConstantInput {
    double delta = 0.5;
    double t_end = 0.0;
    /// Bound M with max |f_k(x)| <= M, recorded from the sampling law.
    double bound = 0.0;
    std::vector<std::vector<double>> profiles;

    std::size_t n_profiles() const noexcept { return profiles.size(); }
    /// Index of the profile in effect at time t (clamped to the last one).
    std::size_t profile_index(double t) const;
};

/// Number of hold periods needed to cover [0, t_end].
std::size_t profiles_for_horizon(double t_end, double delta);

struct GaussianBump {
    double amplitude = 1.0;
    double center = 0.0;
    double width = 1.0;
};

/// Parameter ranges of the random Gaussian bumps used for initial conditions
/// and inputs: A ~ U[a_lo, a_hi], sigma ~ U[s_lo, s_hi], mu ~ U[mu_lo, mu_hi].
struct BumpLaw {
    double amplitude_lo = 1.0;
    double amplitude_hi = 5.0;
    double width_lo = 0.5;
    double width_hi = 2.5;
    double center_lo = -10.0;
    double center_hi = 10.0;

    GaussianBump draw(std::mt19937_64& rng) const;
};

/// sum_i A_i exp(-(x - mu_i)^2 / (2 sigma_i^2)) on the grid nodes.
std::vector<double> gaussian_sum(const Grid1D& grid, std::span<const GaussianBump> bumps);

/// Two-bump random initial condition.
std::vector<double> sample_initial_condition(std::mt19937_64& rng, const Grid1D& grid, const BumpLaw& law = {});

/// Piecewise-constant input where a fresh Gaussian bump is drawn every
/// `block_length` hold periods and repeated in between.
PiecewiseConstantInput sample_input_signal(std::mt19937_64& rng,
                                           const Grid1D& grid,
                                           double t_end,
                                           double delta,
                                           std::size_t block_length = 10,
                                           const BumpLaw& law = {});

}  // namespace rhyme
