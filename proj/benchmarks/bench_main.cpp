#include "rhyme/convolution.hpp"
#include "rhyme/flow_net.hpp"
#include "rhyme/neural_field.hpp"
#include "rhyme/pod.hpp"
#include "rhyme/surrogate.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace rhyme;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

Eigen::MatrixXd noise_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    const auto v = noise(static_cast<std::size_t>(rows * cols), seed);
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

void BM_ConvolutionDirect(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto k = noise(n, 1), f = noise(n, 2);
    std::vector<double> out(n);
    for (auto _ : state) {
        circular_convolve_direct(k, f, 0.1, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_ConvolutionDirect)->Arg(256)->Arg(800);

void BM_ConvolutionTransform(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto k = noise(n, 1), f = noise(n, 2);
    const CircularConvolver conv(k, 0.1);
    std::vector<double> out(n);
    for (auto _ : state) {
        conv.apply(f, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_ConvolutionTransform)->Arg(256)->Arg(800);

void BM_NeuralFieldRhs(benchmark::State& state) {
    const Grid1D grid(-10.0, 10.0, static_cast<std::size_t>(state.range(0)));
    const NeuralFieldModel model(grid, KernelParams::mexican_hat());
    const NeuralFieldRhs rhs(model);
    const auto u = noise(grid.n_points(), 3), f = noise(grid.n_points(), 4);
    std::vector<double> out(grid.n_points());
    for (auto _ : state) {
        rhs(u, f, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_NeuralFieldRhs)->Arg(256)->Arg(800);

// Desk-size networks: r = 20, LSTM 64, encoder 2x128, decoder 2x64, recon 2x32.
struct DeskModel {
    SurrogateModel model;
    Eigen::MatrixXd a0;
    std::vector<Eigen::MatrixXd> profiles;
    FlowBatch batch;
};

DeskModel desk_model() {
    std::mt19937_64 rng(5);
    const Grid1D grid(-10.0, 10.0, 256);
    BasisNetConfig bc;
    bc.hidden = {100, 100, 100, 100};
    BasisNet basis(bc, 20, -10.0, 10.0, 100, rng);
    FlowNetConfig fc;
    fc.r = 20;
    fc.hidden = 64;
    fc.encoder_hidden = {128, 128};
    fc.decoder_hidden = {64, 64};
    FlowNet flow(fc, rng);
    Mlp recon = make_recon_net(20, {32, 32}, rng);
    DeskModel d{SurrogateModel(std::move(basis), std::move(flow), std::move(recon), grid, SamplePoints::uniform(grid, 100), 0.5),
                noise_matrix(20, 8, 6), {}, {}};
    for (std::uint64_t g = 0; g < 8; ++g) d.profiles.push_back(noise_matrix(20, 40, 7 + g));
    d.batch.a0 = d.a0;
    for (const auto& p : d.profiles) d.batch.profiles.push_back(&p);
    // 8 groups of 16 queries spread over [0, 20)
    for (std::size_t g = 0; g < 8; ++g)
        for (std::size_t q = 0; q < 16; ++q) d.batch.queries.push_back({g, (g * 16 + q * 5) % 40, 0.37});
    return d;
}

void BM_FlowForwardBackward(benchmark::State& state) {
    DeskModel d = desk_model();
    const FlowNet& flow = d.model.flow();
    const Eigen::MatrixXd up = noise_matrix(20, 128, 9);
    FlowCache cache;
    for (auto _ : state) {
        flow.forward_batch(d.batch, &cache);
        FlowGrads g = flow.zero_grads();
        flow.backward_batch(cache, up, g);
        benchmark::DoNotOptimize(g.cell);
    }
    state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_FlowForwardBackward)->Unit(benchmark::kMillisecond);

void BM_ReconForwardBackward(benchmark::State& state) {
    DeskModel d = desk_model();
    const Eigen::MatrixXd up = noise_matrix(100, 128, 10);
    SurrogateCache cache;
    for (auto _ : state) {
        predict_batch(d.model, d.batch, &cache);
        FlowGrads fg = d.model.flow().zero_grads();
        ParamBundle rg = std::as_const(d.model.recon()).params().zeros_like();
        predict_backward(d.model, cache, up, fg, rg);
        benchmark::DoNotOptimize(rg);
    }
    state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_ReconForwardBackward)->Unit(benchmark::kMillisecond);

void BM_PodSnapshots(benchmark::State& state) {
    SnapshotMatrix s;
    s.values = noise_matrix(100, state.range(0), 11);
    for (int i = 0; i < 100; ++i) s.spatial_points.push_back(i);
    for (auto _ : state) benchmark::DoNotOptimize(pod(s, 20).singular_values);
}
BENCHMARK(BM_PodSnapshots)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
