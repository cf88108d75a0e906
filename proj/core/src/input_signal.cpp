#include "rhyme/input_signal.hpp"

#include "rhyme/error.hpp"

#include <algorithm>
#include <cmath>

namespace rhyme {

std::size_t PiecewiseConstantInput::profile_index(double t) const {
    RHYME_REQUIRE(!profiles.empty(), "PiecewiseConstantInput: no profiles");
    if (t <= 0.0) return 0;
    const auto k = static_cast<std::size_t>(std::floor(t / delta));
    return std::min(k, profiles.size() - 1);
}

std::size_t profiles_for_horizon(double t_end, double delta) {
    RHYME_REQUIRE(delta > 0.0, "hold period must be positive");
    const double ratio = t_end / delta;
    const double rounded = std::round(ratio);
    // tolerate representation error when t_end is a multiple of delta
    if (std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio)) return std::max<std::size_t>(1, static_cast<std::size_t>(rounded));
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ratio)));
}

GaussianBump BumpLaw::draw(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> amp(amplitude_lo, amplitude_hi);
    std::uniform_real_distribution<double> width(width_lo, width_hi);
    std::uniform_real_distribution<double> center(center_lo, center_hi);
    GaussianBump b;
    b.amplitude = amp(rng);
    b.width = width(rng);
    b.center = center(rng);
    return b;
}

std::vector<double> gaussian_sum(const Grid1D& grid, std::span<const GaussianBump> bumps) {
    std::vector<double> out(grid.n_points(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = grid.node(i);
        double acc = 0.0;
        for (const auto& b : bumps) {
            const double s = (x - b.center) / b.width;
            acc += b.amplitude * std::exp(-0.5 * s * s);
        }
        out[i] = acc;
    }
    return out;
}

std::vector<double> sample_initial_condition(std::mt19937_64& rng, const Grid1D& grid, const BumpLaw& law) {
    const GaussianBump bumps[2] = {law.draw(rng), law.draw(rng)};
    return gaussian_sum(grid, bumps);
}

PiecewiseConstantInput sample_input_signal(std::mt19937_64& rng,
                                           const Grid1D& grid,
                                           double t_end,
                                           double delta,
                                           std::size_t block_length,
                                           const BumpLaw& law) {
    RHYME_REQUIRE(block_length >= 1, "sample_input_signal: block length must be >= 1");
    PiecewiseConstantInput input;
    input.delta = delta;
    input.t_end = t_end;
    input.bound = std::max(std::abs(law.amplitude_lo), std::abs(law.amplitude_hi));
    const std::size_t n_profiles = profiles_for_horizon(t_end, delta);
    input.profiles.reserve(n_profiles);
    for (std::size_t k = 0; k < n_profiles; ++k) {
        if (k % block_length == 0) {
            const GaussianBump bump = law.draw(rng);
            input.profiles.push_back(gaussian_sum(grid, std::span<const GaussianBump>(&bump, 1)));
        } else {
            input.profiles.push_back(input.profiles.back());
        }
    }
    return input;
}

}  // namespace rhyme
