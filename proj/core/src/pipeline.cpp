#include "rhyme/pipeline.hpp"

#include "rhyme/error.hpp"

#include <algorithm>
#include <cmath>

namespace rhyme {

std::uint64_t derive_seed(std::uint64_t master, std::string_view name) {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
    for (unsigned char ch : name) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    std::uint64_t z = master ^ h;
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

SplitData split_dataset(const Dataset& dataset, std::size_t n_spatial, const TrainConfig& train, std::uint64_t seed) {
    SplitData d;
    d.points = SamplePoints::uniform(dataset.grid, n_spatial);
    d.split = split_indices(dataset.size(), derive_seed(seed, "split"), train.train_fraction, train.validation_fraction);
    auto take = [&](const std::vector<std::size_t>& idx) {
        std::vector<SampledTrajectory> out;
        for (std::size_t i : idx) out.push_back(sample_trajectory(dataset.trajectories[i], d.points, i));
        return out;
    };
    d.train = take(d.split.train);
    d.validation = take(d.split.validation);
    d.test = take(d.split.test);
    return d;
}

PodBasis training_pod(const SplitData& data, const PodConfig& config) {
    const SnapshotMatrix s = assemble_snapshots(data.train, data.points, TimeSelection{config.time_stride}, "train split");
    return pod(s, config.r);
}

BasisTrainResult fit_basis(const PodBasis& pod_basis, const ExperimentConfig& config, const Grid1D& grid, std::uint64_t seed) {
    return train_basis(pod_basis, config.basis, config.basis_train, grid.x_min(), grid.x_max(), derive_seed(seed, "basis"));
}

SurrogateModel init_surrogate(BasisNet basis, const ExperimentConfig& config, const Grid1D& grid,
                              const SamplePoints& points, double delta, std::uint64_t seed) {
    std::mt19937_64 rng(derive_seed(seed, "flow-init"));
    FlowNetConfig fc = config.flow;
    fc.r = basis.rank();
    FlowNet flow(fc, rng);
    Mlp recon = make_recon_net(basis.rank(), config.recon_hidden, rng);
    return SurrogateModel(std::move(basis), std::move(flow), std::move(recon), grid, points, delta);
}

RhymeRun train_rhyme(const Dataset& dataset, const ExperimentConfig& config, std::uint64_t seed, const BasisNet* basis,
                     const EpochCallback& on_epoch) {
    RhymeRun run;
    run.data = split_dataset(dataset, config.pod.n_spatial, config.train, seed);
    if (basis) {
        run.basis.net = *basis;
    } else {
        run.pod_basis = training_pod(run.data, config.pod);
        run.basis = fit_basis(run.pod_basis, config, dataset.grid, seed);
    }
    run.model = init_surrogate(run.basis.net, config, dataset.grid, run.data.points, dataset.config.delta, seed);
    run.model.flow().set_input_scale(coefficient_scale(project_set(run.model, run.data.train)));
    run.train = train_stage2(run.model, run.data.train, run.data.validation, config.train, derive_seed(seed, "stage2"),
                             on_epoch);
    return run;
}

BaselineRun train_baseline(const SplitData& data, const ExperimentConfig& config, Eigen::Index target_parameters,
                           std::uint64_t seed, const EpochCallback& on_epoch) {
    RHYME_REQUIRE(!data.train.empty(), "train_baseline: empty training split");
    DeepOnetConfig dc;
    dc.n_sensors = static_cast<Eigen::Index>(data.points.size());
    dc.modes = config.baseline.modes;
    dc.depth = config.baseline.depth;
    dc.recon_hidden = config.baseline.recon_hidden;
    dc.window = static_cast<double>(config.data.block_length) * config.data.delta;
    dc.x_min = config.data.x_min;
    dc.x_max = config.data.x_max;
    const DeepOnetWidths w = deeponet_parity_search(dc, target_parameters, config.baseline.parity_tolerance);
    std::mt19937_64 rng(derive_seed(seed, "baseline-init"));
    BaselineRun run{DeepOnet(dc, w, rng), {}};
    run.net.set_input_scale(field_scale(data.train));
    run.train = train_deeponet(run.net, data.train, data.validation, data.points.positions, config.baseline.train,
                               config.baseline.points_per_time, derive_seed(seed, "baseline"), on_epoch);
    return run;
}

std::vector<SampledTrajectory> extended_trajectories(const Dataset& dataset, const std::vector<std::size_t>& indices,
                                                     const SamplePoints& points, double horizon) {
    const auto trajs = regenerate_trajectories(dataset.config, dataset.master_seed, indices, horizon);
    std::vector<SampledTrajectory> out;
    for (std::size_t i = 0; i < trajs.size(); ++i) out.push_back(sample_trajectory(trajs[i], points, indices[i]));
    return out;
}

Dataset small_subset(const Dataset& dataset, double fraction, std::uint64_t seed) {
    RHYME_REQUIRE(fraction > 0.0 && fraction <= 1.0, "small_subset: fraction must lie in (0, 1]");
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(dataset.size()))));
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(derive_seed(seed, "subset"));
    for (std::size_t i = order.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(order[i - 1], order[pick(rng)]);
    }
    order.resize(n);
    std::sort(order.begin(), order.end());
    Dataset out;
    out.config = dataset.config;
    out.config.n_trajectories = n;
    out.grid = dataset.grid;
    out.master_seed = dataset.master_seed;
    for (std::size_t i : order) out.trajectories.push_back(dataset.trajectories[i]);
    return out;
}

DatasetConfig gaussian_source_config(const ExperimentConfig& config) {
    DatasetConfig d = config.data;
    d.kernel = KernelParams::gaussian(config.transfer.source_amplitude, config.transfer.source_width);
    d.kernel_name = "gaussian";
    return d;
}

BasisTrainResult fit_transfer_basis(const SplitData& data, const SurrogateModel& pretrained,
                                    const ExperimentConfig& config, const Grid1D& grid, std::uint64_t seed) {
    RHYME_REQUIRE(pretrained.rank() == config.pod.r, "fit_transfer_basis: pretrained rank differs from pod.r");
    const PodBasis pb = training_pod(data, config.pod);
    return fit_basis(align_modes(pb, pretrained.basis().raw_matrix(pb.spatial_points)), config, grid, seed);
}

TransferRun transfer_experiment(const SurrogateModel& pretrained, const Dataset& small, const ExperimentConfig& config,
                                std::uint64_t seed, const EpochCallback& on_epoch) {
    TransferRun run;
    const TrainConfig& tc = config.transfer.train;
    SplitData data = split_dataset(small, config.pod.n_spatial, tc, seed);
    RHYME_REQUIRE(!data.train.empty(), "transfer_experiment: small dataset has no training trajectories");
    run.basis = fit_transfer_basis(data, pretrained, config, small.grid, seed);

    run.fine_tuned = transfer_model(pretrained, run.basis.net, small.grid, data.points);
    run.fine_tuned_train = fine_tune(run.fine_tuned, data.train, data.validation, tc, derive_seed(seed, "finetune"),
                                     on_epoch);

    run.scratch = init_surrogate(run.basis.net, config, small.grid, data.points, small.config.delta, seed);
    run.scratch.flow().set_input_scale(pretrained.flow().input_scale());
    run.scratch_train =
        train_stage2(run.scratch, data.train, data.validation, tc, derive_seed(seed, "finetune"), on_epoch);
    return run;
}

}  // namespace rhyme
