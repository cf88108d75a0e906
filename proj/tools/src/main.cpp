#include "rhyme/config.hpp"
#include "rhyme/error.hpp"
#include "rhyme/metrics.hpp"
#include "rhyme/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace rhyme;
using nlohmann::json;

namespace {

constexpr int kExitContract = 2;
constexpr int kExitDivergence = 3;

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool quiet = false;
};

ExperimentConfig load_config(const Globals& g) {
    return g.config_path.empty() ? ExperimentConfig{} : load_experiment_config(g.config_path);
}

std::uint64_t run_seed(const Globals& g, const ExperimentConfig& c) { return g.seed ? *g.seed : c.seed; }

fs::path require_out(const Globals& g) {
    if (g.out.empty()) throw ContractViolation("--out is required");
    return g.out;
}

EpochCallback progress(const Globals& g, const std::string& tag) {
    if (g.quiet) return {};
    return [tag](const CurveRow& r) {
        std::fprintf(stderr, "[%s] epoch %d train %.6g val %.6g lr %.3g\n", tag.c_str(), r.epoch, r.train_loss, r.val_loss,
                     r.lr);
    };
}

void write_split(const DatasetSplit& s, const fs::path& path) {
    json j = {{"train", s.train}, {"validation", s.validation}, {"test", s.test}};
    std::ofstream out(path);
    out << j.dump(2) << '\n';
}

std::optional<DatasetSplit> read_split(const fs::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    const json j = json::parse(in);
    DatasetSplit s;
    s.train = j.at("train").get<std::vector<std::size_t>>();
    s.validation = j.at("validation").get<std::vector<std::size_t>>();
    s.test = j.at("test").get<std::vector<std::size_t>>();
    return s;
}

void write_basis_history(const BasisTrainResult& r, const fs::path& path) {
    std::ofstream out(path);
    out << "epoch,loss,best_loss\n";
    for (std::size_t i = 0; i < r.loss_history.size(); ++i)
        out << i << ',' << format_double(r.loss_history[i]) << ',' << format_double(r.best_history[i]) << '\n';
}

void print_report(const EvalReport& r) {
    std::printf("%s horizon=%s n=%zu mean=%.6f std=%.6f median=%.6f\n", r.label.c_str(), format_double(r.horizon).c_str(),
                r.errors.size(), r.mean(), r.stddev(), r.quantile(0.5));
}

fs::path summary_path(const fs::path& metrics) {
    return metrics.parent_path() / (metrics.stem().string() + "_summary.csv");
}

int cmd_generate(const Globals& g) {
    const auto cfg = load_config(g);
    const Dataset ds = generate_dataset(cfg.data, run_seed(g, cfg));
    save_dataset(ds, require_out(g));
    std::printf("generated %zu trajectories (%zu times x %zu points) in %s\n", ds.size(), ds.trajectories.front().n_times(),
                ds.grid.n_points(), g.out.c_str());
    return 0;
}

int cmd_pod(const Globals& g, const std::string& data) {
    const auto cfg = load_config(g);
    const Dataset ds = load_dataset(data);
    const SplitData sd = split_dataset(ds, cfg.pod.n_spatial, cfg.train, run_seed(g, cfg));
    const PodBasis pb = training_pod(sd, cfg.pod);
    save_pod_basis(pb, require_out(g));
    std::printf("pod: N_x=%zu r=%ld sigma_1=%s sigma_r=%s\n", pb.spatial_points.size(), static_cast<long>(pb.rank()),
                format_double(pb.singular_values[0]).c_str(), format_double(pb.singular_values[pb.rank() - 1]).c_str());
    return 0;
}

int cmd_train_basis(const Globals& g, const std::string& pod_path) {
    const auto cfg = load_config(g);
    const PodBasis pb = load_pod_basis(pod_path);
    const Grid1D grid = cfg.data.grid();
    const BasisTrainResult r = fit_basis(pb, cfg, grid, run_seed(g, cfg));
    const fs::path out = require_out(g);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    r.net.to_checkpoint().save(out);
    write_basis_history(r, fs::path(out).replace_extension(".csv"));
    std::printf("basis: epochs=%d initial=%s final=%s max_offdiag=%s\n", r.epochs, format_double(r.initial_loss).c_str(),
                format_double(r.final_loss).c_str(),
                format_double(max_off_diagonal_gram(r.net.raw_matrix(pb.spatial_points))).c_str());
    return 0;
}

int cmd_train(const Globals& g, const std::string& data, const std::string& basis_path) {
    const auto cfg = load_config(g);
    const Dataset ds = load_dataset(data);
    std::optional<BasisNet> basis;
    if (!basis_path.empty()) basis = BasisNet::from_checkpoint(Checkpoint::load(basis_path));
    const RhymeRun run = train_rhyme(ds, cfg, run_seed(g, cfg), basis ? &*basis : nullptr, progress(g, "train"));
    const fs::path out = require_out(g);
    run.model.save(out);
    write_curve_csv(run.train.curve, out / "curves.csv");
    write_split(run.data.split, out / "split.json");
    if (!basis) write_basis_history(run.basis, out / "basis_curve.csv");
    std::printf("trained: epochs=%d best_epoch=%d best_val=%s parameters=%ld\n", run.train.epochs, run.train.best_epoch,
                format_double(run.train.best_val).c_str(), static_cast<long>(run.model.parameter_count()));
    if (!run.data.test.empty()) {
        const EvalReport rep = evaluate(run.model, run.data.test, ds.config.t_end);
        write_metrics_csv(rep, out / "test_metrics.csv");
        write_summary_csv(rep, out / "test_summary.csv");
        print_report(rep);
    }
    return 0;
}

int cmd_finetune(const Globals& g, const std::string& pretrained, const std::string& data, bool full, bool scratch) {
    const auto cfg = load_config(g);
    const std::uint64_t seed = run_seed(g, cfg);
    const SurrogateModel pre = SurrogateModel::load(pretrained);
    const Dataset target = load_dataset(data);
    const Dataset small = full ? target : small_subset(target, cfg.transfer.fraction, seed);
    const fs::path out = require_out(g);
    if (scratch) {
        const TransferRun run = transfer_experiment(pre, small, cfg, seed, progress(g, "finetune"));
        run.fine_tuned.save(out / "model");
        write_curve_csv(run.fine_tuned_train.curve, out / "curves.csv");
        write_curve_csv(run.scratch_train.curve, out / "scratch_curves.csv");
        std::printf("fine-tuned final train loss %s, from scratch %s\n",
                    format_double(run.fine_tuned_train.curve.back().train_loss).c_str(),
                    format_double(run.scratch_train.curve.back().train_loss).c_str());
        return 0;
    }
    const TrainConfig& tc = cfg.transfer.train;
    const SplitData sd = split_dataset(small, cfg.pod.n_spatial, tc, seed);
    const BasisTrainResult basis = fit_transfer_basis(sd, pre, cfg, small.grid, seed);
    SurrogateModel model = transfer_model(pre, basis.net, small.grid, sd.points);
    const TrainResult r = fine_tune(model, sd.train, sd.validation, tc, derive_seed(seed, "finetune"), progress(g, "finetune"));
    model.save(out / "model");
    write_curve_csv(r.curve, out / "curves.csv");
    std::printf("fine-tuned: epochs=%d best_val=%s\n", r.epochs, format_double(r.best_val).c_str());
    return 0;
}

int cmd_baseline(const Globals& g, const std::string& data, const std::string& model_dir, long params) {
    const auto cfg = load_config(g);
    const std::uint64_t seed = run_seed(g, cfg);
    const Dataset ds = load_dataset(data);
    Eigen::Index target = params;
    if (!model_dir.empty()) target = SurrogateModel::load(model_dir).parameter_count();
    if (target <= 0) throw ContractViolation("baseline: give --model or --params for the parameter budget");
    const SplitData sd = split_dataset(ds, cfg.pod.n_spatial, cfg.train, seed);
    const BaselineRun run = train_baseline(sd, cfg, target, seed, progress(g, "baseline"));
    const fs::path out = require_out(g);
    fs::create_directories(out);
    run.net.to_checkpoint().save(out / "deeponet.rxw");
    write_curve_csv(run.train.curve, out / "curves.csv");
    std::printf("baseline: widths=(%ld,%ld) parameters=%ld target=%ld\n", static_cast<long>(run.net.widths().branch),
                static_cast<long>(run.net.widths().trunk), static_cast<long>(run.net.parameter_count()),
                static_cast<long>(target));
    if (!sd.test.empty()) {
        const EvalReport rep = evaluate_deeponet(run.net, sd.test, sd.points.positions, ds.config.t_end);
        write_metrics_csv(rep, out / "test_metrics.csv");
        write_summary_csv(rep, out / "test_summary.csv");
        print_report(rep);
    }
    return 0;
}

int cmd_evaluate(const Globals& g, const std::string& model_dir, const std::string& data, double horizon) {
    const auto cfg = load_config(g);
    const SurrogateModel model = SurrogateModel::load(model_dir);
    const Dataset ds = load_dataset(data);
    std::optional<DatasetSplit> split = read_split(fs::path(model_dir) / "split.json");
    if (!split) split = split_dataset(ds, cfg.pod.n_spatial, cfg.train, run_seed(g, cfg)).split;
    const double h = horizon > 0.0 ? horizon : ds.config.t_end;
    std::vector<SampledTrajectory> test;
    if (h <= ds.config.t_end + 1e-9) {
        for (std::size_t i : split->test) test.push_back(sample_trajectory(ds.trajectories.at(i), model.points(), i));
    } else {
        test = extended_trajectories(ds, split->test, model.points(), h);
    }
    if (test.empty()) throw ContractViolation("evaluate: the test split is empty");
    const EvalReport rep = evaluate(model, test, h);
    const fs::path out = require_out(g);
    write_metrics_csv(rep, out);
    write_summary_csv(rep, summary_path(out));
    print_report(rep);
    return 0;
}

int cmd_predict(const Globals& g, const std::string& model_dir, const std::string& traj_path, const std::string& queries_path) {
    const SurrogateModel model = SurrogateModel::load(model_dir);
    const Trajectory traj = read_trajectory_file(traj_path, model.delta());
    std::ifstream in(queries_path);
    if (!in) throw ContractViolation("cannot read " + queries_path);
    std::string line;
    if (!std::getline(in, line) || line != "x,t") throw ContractViolation("queries file must start with the header 'x,t'");
    std::vector<SpaceTimeQuery> qs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b)) throw ContractViolation("malformed query line: " + line);
        try {
            qs.push_back({std::stod(a), std::stod(b)});
        } catch (const std::logic_error&) {
            throw ContractViolation("malformed query line: " + line);
        }
    }
    const auto u = predict(model, traj.u0, traj.input, qs);
    const fs::path out = require_out(g);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ofstream o(out);
    o << "x,t,u_hat\n";
    for (std::size_t i = 0; i < qs.size(); ++i)
        o << format_double(qs[i].x) << ',' << format_double(qs[i].t) << ',' << format_double(u[i]) << '\n';
    std::printf("predicted %zu queries\n", qs.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Operator learning for input-driven neural fields"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "Experiment config (INI sections)");
    app.add_option("--seed", g.seed, "Run seed (overrides [run] seed)");
    app.add_option("--out", g.out, "Output path");
    app.add_flag("--quiet", g.quiet, "No per-epoch progress on stderr");

    std::string data, model, basis, pod_path, traj, queries, pretrained;
    double horizon = 0.0;
    long params = 0;
    bool full = false, scratch = false;

    auto* gen = app.add_subcommand("generate", "Simulate a dataset");
    auto* pod = app.add_subcommand("pod", "POD basis of the training split");
    pod->add_option("--data", data, "Dataset directory")->required();
    auto* tb = app.add_subcommand("train-basis", "Fit the basis network to POD modes");
    tb->add_option("--pod", pod_path, "RXP1 file")->required();
    auto* tr = app.add_subcommand("train", "Train the surrogate (stage 1 and 2)");
    tr->add_option("--data", data, "Dataset directory")->required();
    tr->add_option("--basis", basis, "Pretrained basis checkpoint; skips stage 1");
    auto* ft = app.add_subcommand("finetune", "Transfer a pretrained model to a small dataset");
    ft->add_option("--pretrained", pretrained, "Pretrained model directory")->required();
    ft->add_option("--data", data, "Target dataset directory")->required();
    ft->add_flag("--full", full, "Use the whole target dataset instead of the configured fraction");
    ft->add_flag("--scratch", scratch, "Also train from scratch on the same data for comparison");
    auto* bl = app.add_subcommand("baseline", "Train and evaluate the DeepONet baseline");
    bl->add_option("--data", data, "Dataset directory")->required();
    bl->add_option("--model", model, "Model whose parameter count sets the budget");
    bl->add_option("--params", params, "Parameter budget");
    auto* ev = app.add_subcommand("evaluate", "Relative l2 error on the test split");
    ev->add_option("--model", model, "Model directory")->required();
    ev->add_option("--data", data, "Dataset directory")->required();
    ev->add_option("--horizon", horizon, "Evaluation horizon (default: data horizon)");
    auto* pr = app.add_subcommand("predict", "Evaluate the surrogate at (x, t) queries");
    pr->add_option("--model", model, "Model directory")->required();
    pr->add_option("--traj", traj, "RXT1 trajectory file (u0 and input)")->required();
    pr->add_option("--queries", queries, "CSV with header x,t")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitContract;
    }

    try {
        if (*gen) return cmd_generate(g);
        if (*pod) return cmd_pod(g, data);
        if (*tb) return cmd_train_basis(g, pod_path);
        if (*tr) return cmd_train(g, data, basis);
        if (*ft) return cmd_finetune(g, pretrained, data, full, scratch);
        if (*bl) return cmd_baseline(g, data, model, params);
        if (*ev) return cmd_evaluate(g, model, data, horizon);
        if (*pr) return cmd_predict(g, model, traj, queries);
    } catch (const ContractViolation& e) {
        std::fprintf(stderr, "contract violation: %s\n", e.what());
        return kExitContract;
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "diverged: %s\n", e.what());
        return kExitDivergence;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
