#include "rhyme/neural_field.hpp"

#include "rhyme/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rhyme {

double eval_kernel(double x_offset, const KernelParams& p) {
    const double se = x_offset / p.excitatory_width;
    const double si = x_offset / p.inhibitory_width;
    return p.excitatory_amplitude * std::exp(-0.5 * se * se) - p.inhibitory_amplitude * std::exp(-0.5 * si * si) +
           p.offset;
}

double firing_rate(double u, double theta, double slope) {
    const double e = std::clamp(-slope * (u - theta), -700.0, 700.0);
    return std::clamp(1.0 / (1.0 + std::exp(e)), 0.0, 1.0);
}

NeuralFieldModel::NeuralFieldModel(const Grid1D& grid, KernelParams kernel, double theta, double slope)
    : grid_(grid), kernel_(kernel), theta_(theta), slope_(slope) {
    const std::size_t n = grid.n_points();
    kernel_samples_.resize(n);
    for (std::size_t m = 0; m < n; ++m) {
        const std::size_t wrapped = std::min(m, n - m);
        kernel_samples_[m] = eval_kernel(static_cast<double>(wrapped) * grid.dx(), kernel_);
    }
}

NeuralFieldRhs::NeuralFieldRhs(const NeuralFieldModel& model, ConvolutionBackend backend)
    : model_(&model),
      backend_(backend),
      convolver_(model.kernel_samples(), model.grid().dx()),
      rate_(model.grid().n_points()) {}

void NeuralFieldRhs::operator()(std::span<const double> u, std::span<const double> f_now, std::span<double> out) const {
    const std::size_t n = model_->grid().n_points();
    RHYME_REQUIRE(u.size() == n && f_now.size() == n && out.size() == n, "rhs: vectors must live on the model grid");
    for (std::size_t i = 0; i < n; ++i) rate_[i] = firing_rate(u[i], model_->theta(), model_->slope());
    if (backend_ == ConvolutionBackend::Direct)
        circular_convolve_direct(model_->kernel_samples(), rate_, model_->grid().dx(), out);
    else
        convolver_.apply(rate_, out);
    for (std::size_t i = 0; i < n; ++i) out[i] += f_now[i] - u[i];
}

std::vector<double> rhs(std::span<const double> u, std::span<const double> f_now, const NeuralFieldModel& model) {
    std::vector<double> out(model.grid().n_points());
    const NeuralFieldRhs eval{model};
    eval(u, f_now, out);
    return out;
}

Trajectory simulate(std::span<const double> u0,
                    const PiecewiseConstantInput& input,
                    double dt,
                    double t_end,
                    const NeuralFieldModel& model) {
    const std::size_t n = model.grid().n_points();
    RHYME_REQUIRE(u0.size() == n, "simulate: u0 must live on the model grid");
    RHYME_REQUIRE(dt > 0.0 && t_end >= 0.0, "simulate: need dt > 0 and t_end >= 0");
    const double hold_steps_real = input.delta / dt;
    const auto hold_steps = static_cast<std::size_t>(std::llround(hold_steps_real));
    RHYME_REQUIRE(hold_steps >= 1 && std::abs(static_cast<double>(hold_steps) * dt - input.delta) <= 1e-9,
                  "simulate: dt must divide the input hold period");
    const auto n_steps = static_cast<std::size_t>(std::llround(t_end / dt));
    RHYME_REQUIRE(std::abs(static_cast<double>(n_steps) * dt - t_end) <= 1e-9, "simulate: dt must divide t_end");
    if (n_steps > 0) {
        const std::size_t needed = (n_steps - 1) / hold_steps + 1;
        RHYME_REQUIRE(input.n_profiles() >= needed, "simulate: input does not cover [0, t_end]");
    }
    for (const auto& p : input.profiles) RHYME_REQUIRE(p.size() == n, "simulate: input profile length mismatch");

    Trajectory traj;
    traj.n_points = n;
    traj.u0.assign(u0.begin(), u0.end());
    traj.input = input;
    traj.times.resize(n_steps + 1);
    traj.states.resize((n_steps + 1) * n);
    std::copy(u0.begin(), u0.end(), traj.states.begin());
    for (std::size_t k = 0; k <= n_steps; ++k) traj.times[k] = static_cast<double>(k) * dt;

    NeuralFieldRhs eval(model);
    std::vector<double> du(n);
    for (std::size_t k = 0; k < n_steps; ++k) {
        std::span<const double> u(traj.states.data() + k * n, n);
        std::span<double> next(traj.states.data() + (k + 1) * n, n);
        eval(u, input.profiles[k / hold_steps], du);
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] = u[i] + dt * du[i];
            finite = finite && std::isfinite(next[i]);
        }
        if (!finite)
            throw SimulationDiverged(k + 1, "simulation diverged at step " + std::to_string(k + 1));
    }
    return traj;
}

}  // namespace rhyme
