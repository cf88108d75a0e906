#include "rhyme/error.hpp"
#include "rhyme/grid.hpp"
#include "rhyme/input_signal.hpp"
#include "rhyme/neural_field.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

using namespace rhyme;

namespace {

double periodic_distance(double a, double b, double length) {
    double d = std::fmod(std::abs(a - b), length);
    return std::min(d, length - d);
}

// Independent O(n^2) evaluation of f - u + k * h(u) straight from the kernel formula.
std::vector<double> rhs_oracle(const std::vector<double>& u, const std::vector<double>& f, const NeuralFieldModel& m) {
    const auto& g = m.grid();
    const std::size_t n = g.n_points();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double conv = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = periodic_distance(g.node(i), g.node(j), g.length());
            const double h = 1.0 / (1.0 + std::exp(-m.slope() * (u[j] - m.theta())));
            conv += eval_kernel(d, m.kernel()) * h;
        }
        out[i] = f[i] - u[i] + g.dx() * conv;
    }
    return out;
}

}  // namespace

TEST_CASE("grid nodes, spacing and weights") {
    const Grid1D g(-10.0, 10.0, 800);
    CHECK(g.dx() == doctest::Approx(0.025).epsilon(1e-15));
    CHECK(g.node(0) == -10.0);
    CHECK(g.node(799) < 10.0);
    const auto w = g.quad_weights();
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    CHECK(std::abs(total - 20.0) <= 1e-12 * 20.0);
    for (double wi : w) CHECK(wi == g.dx());
    CHECK(g.nearest_node(10.0) == 0);
    CHECK(g.nearest_node(-10.0 + 3.0 * g.dx() + 0.4 * g.dx()) == 3);
    CHECK(g.nearest_node(10.0 - 0.4 * g.dx()) == 0);
    CHECK_THROWS_AS(Grid1D(0.0, 1.0, 1), ContractViolation);
    CHECK_THROWS_AS(Grid1D(1.0, 1.0, 8), ContractViolation);
}

TEST_CASE("kernel closed form and symmetry") {
    const KernelParams k = KernelParams::mexican_hat();
    // 3 - 1.5 - 0.2 at the origin
    CHECK(eval_kernel(0.0, k) == doctest::Approx(1.3).epsilon(1e-15));
    const double at_one_five = 3.0 * std::exp(-0.5) - 1.5 * std::exp(-0.125) - 0.2;
    CHECK(eval_kernel(1.5, k) == doctest::Approx(at_one_five).epsilon(1e-14));
    // far field tends to the offset
    CHECK(eval_kernel(60.0, k) == doctest::Approx(-0.2).epsilon(1e-12));

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> x(-20.0, 20.0);
    for (int i = 0; i < 200; ++i) {
        const double xi = x(rng);
        CHECK(eval_kernel(xi, k) == eval_kernel(-xi, k));
    }

    const Grid1D g(-10.0, 10.0, 64);
    const NeuralFieldModel m(g, k);
    const auto s = m.kernel_samples();
    for (std::size_t j = 1; j < s.size(); ++j) CHECK(s[j] == s[s.size() - j]);
    CHECK(s[0] == eval_kernel(0.0, k));
}

TEST_CASE("firing rate closed form, saturation and monotonicity") {
    CHECK(firing_rate(1.0, 1.0, 1000.0) == 0.5);
    // offsets of 2^-10 keep slope * (u - theta) = 0.9765625 exact
    CHECK(firing_rate(1.0 + 0x1p-10, 1.0, 1000.0) == doctest::Approx(1.0 / (1.0 + std::exp(-0.9765625))).epsilon(1e-14));
    CHECK(firing_rate(1.0 - 0x1p-10, 1.0, 1000.0) == doctest::Approx(1.0 / (1.0 + std::exp(0.9765625))).epsilon(1e-14));
    const double hi = firing_rate(1e6, 1.0, 1000.0);
    const double lo = firing_rate(-1e6, 1.0, 1000.0);
    CHECK(std::isfinite(hi));
    CHECK(std::isfinite(lo));
    CHECK(hi == 1.0);
    CHECK(lo >= 0.0);
    CHECK(lo < 1e-300);
    double prev = -1.0;
    for (double u = 0.9; u <= 1.1; u += 1e-4) {
        const double v = firing_rate(u, 1.0, 1000.0);
        CHECK(v >= prev);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        prev = v;
    }
}

TEST_CASE("right-hand side matches a direct quadrature oracle") {
    const Grid1D g(-10.0, 10.0, 96);
    const NeuralFieldModel m(g, KernelParams::mexican_hat(), 1.0, 5.0);
    std::mt19937_64 rng(3);
    const auto u = sample_initial_condition(rng, g);
    const auto f = sample_initial_condition(rng, g);
    const auto expected = rhs_oracle(u, f, m);

    const auto fast = rhs(u, f, m);
    std::vector<double> direct(g.n_points());
    const NeuralFieldRhs eval_direct(m, ConvolutionBackend::Direct);
    eval_direct(u, f, direct);
    for (std::size_t i = 0; i < g.n_points(); ++i) {
        CHECK(std::abs(fast[i] - expected[i]) <= 1e-10);
        CHECK(std::abs(direct[i] - expected[i]) <= 1e-12);
    }
    std::vector<double> short_u(10, 0.0);
    CHECK_THROWS_AS(rhs(short_u, f, m), ContractViolation);
}

TEST_CASE("forward Euler steps, stored times and step-size contract") {
    const Grid1D g(-10.0, 10.0, 64);
    const NeuralFieldModel m(g, KernelParams::mexican_hat());
    std::mt19937_64 rng(11);
    const auto u0 = sample_initial_condition(rng, g);
    const auto input = sample_input_signal(rng, g, 2.0, 0.5);
    const auto traj = simulate(u0, input, 0.05, 2.0, m);

    REQUIRE(traj.n_times() == 41);
    CHECK(traj.times.front() == 0.0);
    CHECK(traj.times.back() == doctest::Approx(2.0).epsilon(1e-15));
    for (std::size_t i = 0; i < g.n_points(); ++i) CHECK(traj.state(0)[i] == u0[i]);

    // one explicit step from the stored state using the active profile
    for (std::size_t k : {0UL, 9UL, 10UL, 39UL}) {
        const auto s = traj.state(k);
        const std::vector<double> uk(s.begin(), s.end());
        const auto du = rhs(uk, input.profiles[k / 10], m);
        const auto next = traj.state(k + 1);
        for (std::size_t i = 0; i < g.n_points(); ++i) CHECK(next[i] == uk[i] + 0.05 * du[i]);
    }
    for (double v : traj.states) CHECK(std::isfinite(v));

    CHECK_THROWS_AS(simulate(u0, input, 0.03, 2.0, m), ContractViolation);
    CHECK_THROWS_AS(simulate(u0, input, 0.05, 3.0, m), ContractViolation);
}

TEST_CASE("zero input from rest stays at rest") {
    const Grid1D g(-10.0, 10.0, 128);
    const NeuralFieldModel m(g, KernelParams::mexican_hat());
    PiecewiseConstantInput input;
    input.delta = 0.5;
    input.t_end = 5.0;
    input.profiles.assign(10, std::vector<double>(g.n_points(), 0.0));
    const std::vector<double> u0(g.n_points(), 0.0);
    const auto traj = simulate(u0, input, 0.05, 5.0, m);
    for (double v : traj.states) CHECK(std::abs(v) <= 1e-12);
}

TEST_CASE("unstable step size reports the diverging step") {
    const Grid1D g(-10.0, 10.0, 16);
    const NeuralFieldModel m(g, KernelParams::mexican_hat(), 1.0, 1.0);
    PiecewiseConstantInput input;
    input.delta = 3.0;
    input.t_end = 3600.0;
    input.profiles.assign(1200, std::vector<double>(g.n_points(), 0.0));
    std::vector<double> u0(g.n_points(), 1.0);
    try {
        simulate(u0, input, 3.0, 3600.0, m);
        FAIL("expected divergence");
    } catch (const SimulationDiverged& e) {
        // |1 - dt| = 2 amplification overflows after roughly a thousand steps
        CHECK(e.step() > 900);
        CHECK(e.step() < 1200);
    }
}

TEST_CASE("input signals hold each bump for a full block") {
    const Grid1D g(-10.0, 10.0, 64);
    std::mt19937_64 rng(5);
    const auto in = sample_input_signal(rng, g, 20.0, 0.5, 10);
    CHECK(profiles_for_horizon(20.0, 0.5) == 40);
    CHECK(profiles_for_horizon(20.2, 0.5) == 41);
    REQUIRE(in.n_profiles() == 40);
    for (std::size_t k = 0; k < 40; ++k) {
        if (k % 10 != 0) CHECK(in.profiles[k] == in.profiles[k - 1]);
        for (double v : in.profiles[k]) CHECK(std::abs(v) <= in.bound);
    }
    CHECK(in.profiles[10] != in.profiles[9]);
    CHECK(in.profile_index(0.0) == 0);
    CHECK(in.profile_index(0.49) == 0);
    CHECK(in.profile_index(0.5) == 1);
    CHECK(in.profile_index(100.0) == 39);

    std::mt19937_64 a(99), b(99);
    CHECK(sample_initial_condition(a, g) == sample_initial_condition(b, g));
}
