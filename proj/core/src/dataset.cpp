#include "rhyme/dataset.hpp"

#include "rhyme/binary_io.hpp"
#include "rhyme/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

namespace rhyme {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t trajectory_seed(std::uint64_t master_seed, std::size_t index) {
    std::uint64_t z = master_seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Trajectory generate_trajectory(const DatasetConfig& config, const NeuralFieldModel& model, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Grid1D& grid = model.grid();
    auto u0 = sample_initial_condition(rng, grid, config.initial_law);
    auto input = sample_input_signal(rng, grid, config.t_end, config.delta, config.block_length, config.input_law);
    Trajectory traj = simulate(u0, input, config.dt, config.t_end, model);
    traj.meta.seed = seed;
    return traj;
}

namespace {

std::vector<Trajectory> simulate_many(const DatasetConfig& config,
                                      std::uint64_t master_seed,
                                      const std::vector<std::size_t>& indices) {
    const NeuralFieldModel model(config.grid(), config.kernel, config.theta, config.slope);
    std::vector<Trajectory> out(indices.size());
    unsigned threads = config.threads != 0 ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, indices.size())));

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::size_t error_index = indices.size();

    auto worker = [&]() {
        for (;;) {
            const std::size_t slot = next.fetch_add(1);
            if (slot >= indices.size()) return;
            try {
                out[slot] = generate_trajectory(config, model, trajectory_seed(master_seed, indices[slot]));
            } catch (const SimulationDiverged& e) {
                std::lock_guard lock(error_mutex);
                if (slot < error_index) {
                    error_index = slot;
                    error = std::make_exception_ptr(SimulationDiverged(
                        e.step(), "trajectory " + std::to_string(indices[slot]) + ": " + e.what()));
                }
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (slot < error_index) {
                    error_index = slot;
                    error = std::current_exception();
                }
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    return out;
}

json law_to_json(const BumpLaw& law) {
    return {{"amplitude", {law.amplitude_lo, law.amplitude_hi}},
            {"width", {law.width_lo, law.width_hi}},
            {"center", {law.center_lo, law.center_hi}}};
}

BumpLaw law_from_json(const json& j) {
    BumpLaw law;
    law.amplitude_lo = j.at("amplitude").at(0);
    law.amplitude_hi = j.at("amplitude").at(1);
    law.width_lo = j.at("width").at(0);
    law.width_hi = j.at("width").at(1);
    law.center_lo = j.at("center").at(0);
    law.center_hi = j.at("center").at(1);
    return law;
}

}  // namespace

Dataset generate_dataset(const DatasetConfig& config, std::uint64_t master_seed) {
    RHYME_REQUIRE(config.n_trajectories >= 1, "generate_dataset: need at least one trajectory");
    std::vector<std::size_t> indices(config.n_trajectories);
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    Dataset ds;
    ds.config = config;
    ds.grid = config.grid();
    ds.master_seed = master_seed;
    ds.trajectories = simulate_many(config, master_seed, indices);
    return ds;
}

std::vector<Trajectory> regenerate_trajectories(const DatasetConfig& config,
                                                std::uint64_t master_seed,
                                                const std::vector<std::size_t>& indices,
                                                double t_end) {
    DatasetConfig extended = config;
    extended.t_end = t_end;
    return simulate_many(extended, master_seed, indices);
}

std::string trajectory_file_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "traj_%05zu.rxt", index);
    return buf;
}

void write_trajectory_file(const Trajectory& traj, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    io::write_magic(out, "RXT1");
    io::write_u32(out, io::checked_u32(traj.n_points, "n_points"));
    io::write_u32(out, io::checked_u32(traj.n_times(), "K"));
    io::write_u32(out, io::checked_u32(traj.input.n_profiles(), "n_profiles"));
    io::write_f64(out, traj.u0);
    for (const auto& p : traj.input.profiles) io::write_f64(out, p);
    io::write_f64(out, traj.times);
    io::write_f64(out, traj.states);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Trajectory read_trajectory_file(const fs::path& path, double delta) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContractViolation("cannot open trajectory file " + path.string());
    io::expect_magic(in, "RXT1", path.string());
    Trajectory traj;
    traj.n_points = io::read_u32(in);
    const std::size_t K = io::read_u32(in);
    const std::size_t n_profiles = io::read_u32(in);
    traj.u0 = io::read_f64(in, traj.n_points);
    traj.input.delta = delta;
    traj.input.profiles.resize(n_profiles);
    for (auto& p : traj.input.profiles) p = io::read_f64(in, traj.n_points);
    traj.times = io::read_f64(in, K);
    traj.states = io::read_f64(in, K * traj.n_points);
    traj.input.t_end = K > 0 ? traj.times.back() : 0.0;
    return traj;
}

namespace {

json config_to_json(const DatasetConfig& c, std::uint64_t master_seed, std::size_t n) {
    json j;
    j["format"] = "RXT1";
    j["grid"] = {{"x_min", c.x_min}, {"x_max", c.x_max}, {"n_points", c.n_points}};
    j["dt"] = c.dt;
    j["t_end"] = c.t_end;
    j["delta"] = c.delta;
    j["block_length"] = c.block_length;
    j["n_trajectories"] = n;
    j["master_seed"] = master_seed;
    j["theta"] = c.theta;
    j["slope"] = c.slope;
    j["kernel"] = {{"name", c.kernel_name},
                   {"excitatory_amplitude", c.kernel.excitatory_amplitude},
                   {"excitatory_width", c.kernel.excitatory_width},
                   {"inhibitory_amplitude", c.kernel.inhibitory_amplitude},
                   {"inhibitory_width", c.kernel.inhibitory_width},
                   {"offset", c.kernel.offset}};
    j["initial_law"] = law_to_json(c.initial_law);
    j["input_law"] = law_to_json(c.input_law);
    return j;
}

DatasetConfig config_from_json(const json& j) {
    DatasetConfig c;
    c.x_min = j.at("grid").at("x_min");
    c.x_max = j.at("grid").at("x_max");
    c.n_points = j.at("grid").at("n_points");
    c.dt = j.at("dt");
    c.t_end = j.at("t_end");
    c.delta = j.at("delta");
    c.block_length = j.at("block_length");
    c.n_trajectories = j.at("n_trajectories");
    c.theta = j.at("theta");
    c.slope = j.at("slope");
    const json& k = j.at("kernel");
    c.kernel_name = k.at("name");
    c.kernel.excitatory_amplitude = k.at("excitatory_amplitude");
    c.kernel.excitatory_width = k.at("excitatory_width");
    c.kernel.inhibitory_amplitude = k.at("inhibitory_amplitude");
    c.kernel.inhibitory_width = k.at("inhibitory_width");
    c.kernel.offset = k.at("offset");
    c.initial_law = law_from_json(j.at("initial_law"));
    c.input_law = law_from_json(j.at("input_law"));
    return c;
}

}  // namespace

void save_dataset(const Dataset& dataset, const fs::path& dir) {
    fs::create_directories(dir);
    json meta = config_to_json(dataset.config, dataset.master_seed, dataset.size());
    json seeds = json::array();
    json files = json::array();
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        seeds.push_back(dataset.trajectories[i].meta.seed);
        files.push_back(trajectory_file_name(i));
        write_trajectory_file(dataset.trajectories[i], dir / trajectory_file_name(i));
    }
    meta["trajectory_seeds"] = seeds;
    meta["files"] = files;
    std::ofstream out(dir / "meta.json");
    out << meta.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + (dir / "meta.json").string());
}

DatasetConfig load_dataset_config(const fs::path& dir, std::uint64_t* master_seed) {
    std::ifstream in(dir / "meta.json");
    if (!in) throw ContractViolation("missing dataset manifest " + (dir / "meta.json").string());
    json meta;
    try {
        meta = json::parse(in);
        if (master_seed) *master_seed = meta.at("master_seed").get<std::uint64_t>();
        return config_from_json(meta);
    } catch (const json::exception& e) {
        throw ContractViolation("malformed dataset manifest: " + std::string(e.what()));
    }
}

Dataset load_dataset(const fs::path& dir) {
    Dataset ds;
    ds.config = load_dataset_config(dir, &ds.master_seed);
    ds.grid = ds.config.grid();
    std::ifstream in(dir / "meta.json");
    const json meta = json::parse(in);
    const auto& files = meta.at("files");
    const auto& seeds = meta.at("trajectory_seeds");
    ds.trajectories.reserve(files.size());
    for (std::size_t i = 0; i < files.size(); ++i) {
        Trajectory t = read_trajectory_file(dir / files[i].get<std::string>(), ds.config.delta);
        RHYME_REQUIRE(t.n_points == ds.grid.n_points(), "trajectory grid does not match manifest");
        t.meta.seed = seeds.at(i).get<std::uint64_t>();
        t.input.bound = std::max(std::abs(ds.config.input_law.amplitude_lo), std::abs(ds.config.input_law.amplitude_hi));
        t.input.t_end = ds.config.t_end;
        ds.trajectories.push_back(std::move(t));
    }
    return ds;
}

}  // namespace rhyme
