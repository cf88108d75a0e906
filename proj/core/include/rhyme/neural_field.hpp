#pragma once

#include "rhyme/convolution.hpp"
#include "rhyme/grid.hpp"
#include "rhyme/input_signal.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rhyme {

/// Connectivity kernel k(x) = a_e exp(-(x/w_e)^2/2) - a_i exp(-(x/w_i)^2/2) + offset.
///
/// The default is the "Mexican hat" difference of Gaussians used for the
/// neural-field experiments. Exponents are negative so that k stays bounded.
struct KernelParams {
    double excitatory_amplitude = 3.0;
    double excitatory_width = 1.5;
    double inhibitory_amplitude = 1.5;
    double inhibitory_width = 3.0;
    double offset = -0.2;

    static KernelParams mexican_hat() { return {}; }
    /// Purely excitatory single Gaussian (transfer-learning source system).
    /// Keeps the excitatory width; the amplitude keeps the kernel mass below
    /// theta = 1 so activity stays localized instead of saturating.
    static KernelParams gaussian(double amplitude = 0.25, double width = 1.5) {
        return {amplitude, width, 0.0, 1.0, 0.0};
    }
};

double eval_kernel(double x_offset, const KernelParams& params);

/// Sigmoid 1 / (1 + exp(-slope (u - theta))), exponent clamped to +-700.
double firing_rate(double u, double theta, double slope);

/// Amari neural field  du/dt = f - u + k * h(u)  on a periodic grid.
class NeuralFieldModel {
public:
    NeuralFieldModel(const Grid1D& grid, KernelParams kernel, double theta = 1.0, double slope = 1000.0);

    const Grid1D& grid() const noexcept { return grid_; }
    const KernelParams& kernel() const noexcept { return kernel_; }
    double theta() const noexcept { return theta_; }
    double slope() const noexcept { return slope_; }

    /// k evaluated at the periodic offsets m*dx, m = 0..n-1 (offsets past n/2
    /// wrap to negative distances), so kernel_samples()[m] == kernel_samples()[n-m].
    std::span<const double> kernel_samples() const noexcept { return kernel_samples_; }

private:
    Grid1D grid_;
    KernelParams kernel_;
    double theta_;
    double slope_;
    std::vector<double> kernel_samples_;
};

/// Right-hand side evaluator with a cached transform plan.
class NeuralFieldRhs {
public:
    explicit NeuralFieldRhs(const NeuralFieldModel& model,
                            ConvolutionBackend backend = ConvolutionBackend::Transform);

    void operator()(std::span<const double> u, std::span<const double> f_now, std::span<double> out) const;

private:
    const NeuralFieldModel* model_;
    ConvolutionBackend backend_;
    CircularConvolver convolver_;
    mutable std::vector<double> rate_;
};

std::vector<double> rhs(std::span<const double> u, std::span<const double> f_now, const NeuralFieldModel& model);

struct TrajectoryMeta {
    std::uint64_t seed = 0;
    std::string note;
};

/// One simulated trajectory; states is row-major K x n_points.
struct Trajectory {
    std::vector<double> u0;
    PiecewiseConstantInput input;
    std::vector<double> times;
    std::vector<double> states;
    std::size_t n_points = 0;
    TrajectoryMeta meta;

    std::size_t n_times() const noexcept { return times.size(); }
    std::span<const double> state(std::size_t k) const {
        return std::span<const double>(states).subspan(k * n_points, n_points);
    }
};

/// Forward Euler u_{k+1} = u_k + dt rhs(u_k, f(t_k)), storing every step.
/// dt must divide the input hold period; a non-finite state raises
/// SimulationDiverged with the offending step index.
Trajectory simulate(std::span<const double> u0,
                    const PiecewiseConstantInput& input,
                    double dt,
                    double t_end,
                    const NeuralFieldModel& model);

}  // namespace rhyme
