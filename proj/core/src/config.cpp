#include "rhyme/config.hpp"

#include "rhyme/error.hpp"
#include "rhyme/metrics.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace rhyme {

namespace pt = boost::property_tree;

namespace {

template <class T>
T parse_scalar(const std::string& key, const std::string& text) {
    std::istringstream in(text);
    T v{};
    in >> v;
    if (!in || !(in >> std::ws).eof()) throw ContractViolation("config: cannot parse " + key + " = '" + text + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ContractViolation("config: cannot parse boolean " + key + " = '" + text + "'");
}

std::vector<Eigen::Index> parse_widths(const std::string& key, const std::string& text) {
    std::vector<Eigen::Index> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto v = parse_scalar<long long>(key, item);
        if (v <= 0) throw ContractViolation("config: widths must be positive in " + key);
        out.push_back(static_cast<Eigen::Index>(v));
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_scalar<double>(key, item));
    return out;
}

std::string join(const std::vector<Eigen::Index>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
    return s;
}

using Setter = std::function<void(const std::string&, const std::string&)>;
using Getter = std::function<std::string()>;

struct Field {
    Setter set;
    Getter get;
};

template <class T>
Field num(T& ref) {
    return {[&ref](const std::string& k, const std::string& v) { ref = parse_scalar<T>(k, v); },
            [&ref] {
                if constexpr (std::is_floating_point_v<T>)
                    return format_double(ref);
                else
                    return std::to_string(ref);
            }};
}

Field flag(bool& ref) {
    return {[&ref](const std::string& k, const std::string& v) { ref = parse_bool(k, v); },
            [&ref] { return std::string(ref ? "true" : "false"); }};
}

Field widths(std::vector<Eigen::Index>& ref) {
    return {[&ref](const std::string& k, const std::string& v) { ref = parse_widths(k, v); }, [&ref] { return join(ref); }};
}

void add_train(std::map<std::string, Field>& f, const std::string& s, TrainConfig& t) {
    f[s + ".batch_size"] = num(t.batch_size);
    f[s + ".lr"] = num(t.lr);
    f[s + ".lr_decay"] = num(t.lr_decay);
    f[s + ".plateau_patience"] = num(t.plateau_patience);
    f[s + ".early_stop"] = num(t.early_stop);
    f[s + ".max_epochs"] = num(t.max_epochs);
    f[s + ".n_time_samples"] = num(t.n_time_samples);
    f[s + ".train_fraction"] = num(t.train_fraction);
    f[s + ".validation_fraction"] = num(t.validation_fraction);
    f[s + ".group_size"] = num(t.group_size);
}

std::map<std::string, Field> fields(ExperimentConfig& c) {
    std::map<std::string, Field> f;
    auto& d = c.data;
    f["run.seed"] = num(c.seed);
    f["data.x_min"] = num(d.x_min);
    f["data.x_max"] = num(d.x_max);
    f["data.n_points"] = num(d.n_points);
    f["data.dt"] = num(d.dt);
    f["data.t_end"] = num(d.t_end);
    f["data.delta"] = num(d.delta);
    f["data.block_length"] = num(d.block_length);
    f["data.n_trajectories"] = num(d.n_trajectories);
    f["data.theta"] = num(d.theta);
    f["data.slope"] = num(d.slope);
    f["data.threads"] = num(d.threads);
    f["data.kernel"] = {[&d](const std::string&, const std::string& v) {
                            if (v == "mexican_hat")
                                d.kernel = KernelParams::mexican_hat();
                            else if (v == "gaussian")
                                d.kernel = KernelParams::gaussian();
                            else
                                throw ContractViolation("config: unknown kernel '" + v + "'");
                            d.kernel_name = v;
                        },
                        [&d] { return d.kernel_name; }};
    f["pod.n_spatial"] = num(c.pod.n_spatial);
    f["pod.r"] = num(c.pod.r);
    f["pod.time_stride"] = num(c.pod.time_stride);
    f["basis.n_features"] = num(c.basis.n_features);
    f["basis.feature_std"] = num(c.basis.feature_std);
    f["basis.hidden"] = widths(c.basis.hidden);
    f["basis.normalize_input"] = flag(c.basis.normalize_input);
    f["basis.lr"] = num(c.basis_train.lr);
    f["basis.max_epochs"] = num(c.basis_train.max_epochs);
    f["basis.lr_patience"] = num(c.basis_train.lr_patience);
    f["basis.min_lr"] = num(c.basis_train.min_lr);
    f["basis.stop_patience"] = num(c.basis_train.stop_patience);
    f["flow.hidden"] = num(c.flow.hidden);
    f["flow.encoder_hidden"] = widths(c.flow.encoder_hidden);
    f["flow.decoder_hidden"] = widths(c.flow.decoder_hidden);
    f["recon.hidden"] = widths(c.recon_hidden);
    add_train(f, "train", c.train);
    f["baseline.modes"] = num(c.baseline.modes);
    f["baseline.depth"] = num(c.baseline.depth);
    f["baseline.recon_hidden"] = widths(c.baseline.recon_hidden);
    f["baseline.parity_tolerance"] = num(c.baseline.parity_tolerance);
    f["baseline.points_per_time"] = num(c.baseline.points_per_time);
    add_train(f, "baseline", c.baseline.train);
    f["transfer.fraction"] = num(c.transfer.fraction);
    f["transfer.source_amplitude"] = num(c.transfer.source_amplitude);
    f["transfer.source_width"] = num(c.transfer.source_width);
    add_train(f, "transfer", c.transfer.train);
    f["eval.horizons"] = {[&c](const std::string& k, const std::string& v) { c.eval_horizons = parse_doubles(k, v); },
                          [&c] { return join(c.eval_horizons); }};
    return f;
}

void validate_train(const TrainConfig& t, const std::string& s) {
    RHYME_REQUIRE(t.batch_size >= 1 && t.lr > 0.0 && t.lr_decay > 0.0 && t.lr_decay <= 1.0 && t.plateau_patience >= 1 &&
                      t.early_stop >= 1 && t.max_epochs >= 0 && t.n_time_samples >= 1 && t.group_size >= 1,
                  "config: [" + s + "] hyperparameters must be positive");
    RHYME_REQUIRE(t.train_fraction > 0.0 && t.validation_fraction >= 0.0 &&
                      t.train_fraction + t.validation_fraction <= 1.0 + 1e-12,
                  "config: [" + s + "] split fractions must be nonnegative and sum to at most 1");
}

void validate(const ExperimentConfig& c) {
    const auto& d = c.data;
    RHYME_REQUIRE(d.x_max > d.x_min && d.n_points >= 2 && d.dt > 0.0 && d.t_end > 0.0 && d.delta > 0.0 &&
                      d.block_length >= 1 && d.n_trajectories >= 1,
                  "config: [data] values out of range");
    RHYME_REQUIRE(c.pod.n_spatial >= 1 && c.pod.n_spatial <= d.n_points && c.pod.r >= 1 &&
                      static_cast<std::size_t>(c.pod.r) <= c.pod.n_spatial && c.pod.time_stride >= 1,
                  "config: [pod] values out of range");
    validate_train(c.train, "train");
    validate_train(c.baseline.train, "baseline");
    validate_train(c.transfer.train, "transfer");
    RHYME_REQUIRE(c.transfer.fraction > 0.0 && c.transfer.fraction <= 1.0, "config: transfer.fraction out of range");
    RHYME_REQUIRE(c.baseline.depth >= 2 && c.baseline.modes >= 1, "config: [baseline] values out of range");
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
    ExperimentConfig c;
    c.flow.r = c.pod.r;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ContractViolation(std::string("config: ") + e.what());
    }
    auto table = fields(c);
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ContractViolation("config: key '" + section + "' outside a section");
        for (const auto& [key, value] : body) {
            const std::string full = section + "." + key;
            auto it = table.find(full);
            if (it == table.end()) throw ContractViolation("config: unknown key " + full);
            it->second.set(full, value.get_value<std::string>());
        }
    }
    c.flow.r = c.pod.r;
    if (c.data.kernel_name == "gaussian")
        c.data.kernel = KernelParams::gaussian(c.transfer.source_amplitude, c.transfer.source_width);
    validate(c);
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ContractViolation("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str());
}

std::string to_ini(const ExperimentConfig& config) {
    ExperimentConfig copy = config;
    auto table = fields(copy);
    std::string out;
    std::string current;
    for (const auto& [full, field] : table) {
        const auto dot = full.find('.');
        const std::string section = full.substr(0, dot);
        if (section != current) {
            out += (current.empty() ? "" : "\n") + std::string("[") + section + "]\n";
            current = section;
        }
        out += full.substr(dot + 1) + " = " + field.get() + "\n";
    }
    return out;
}

}  // namespace rhyme
