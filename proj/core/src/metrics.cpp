#include "rhyme/metrics.hpp"

#include "rhyme/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rhyme {

namespace fs = std::filesystem;

double relative_l2(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred) {
    RHYME_REQUIRE(truth.rows() == pred.rows() && truth.cols() == pred.cols(), "relative_l2: shape mismatch");
    const double denom = truth.norm();
    RHYME_REQUIRE(denom > 0.0, "relative_l2: truth has zero norm");
    return (pred - truth).norm() / denom;
}

double EvalReport::mean() const {
    RHYME_REQUIRE(!errors.empty(), "EvalReport: no errors recorded");
    double s = 0.0;
    for (double e : errors) s += e;
    return s / static_cast<double>(errors.size());
}

double EvalReport::stddev() const {
    if (errors.size() < 2) return 0.0;
    const double m = mean();
    double s = 0.0;
    for (double e : errors) s += (e - m) * (e - m);
    return std::sqrt(s / static_cast<double>(errors.size() - 1));
}

double EvalReport::quantile(double q) const {
    RHYME_REQUIRE(!errors.empty() && q >= 0.0 && q <= 1.0, "EvalReport::quantile: bad arguments");
    std::vector<double> v = errors;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::string& header) {
    std::ifstream in(path);
    if (!in) throw ContractViolation("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != header)
        throw ContractViolation(path.string() + ": expected header '" + header + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace

void write_metrics_csv(const EvalReport& report, const fs::path& path) {
    RHYME_REQUIRE(report.errors.size() == report.trajectory_ids.size(), "write_metrics_csv: ids and errors differ in length");
    auto out = open_out(path);
    out << "trajectory_id,rel_l2\n";
    for (std::size_t i = 0; i < report.errors.size(); ++i)
        out << report.trajectory_ids[i] << ',' << format_double(report.errors[i]) << '\n';
}

EvalReport read_metrics_csv(const fs::path& path) {
    EvalReport r;
    for (const auto& row : read_csv(path, "trajectory_id,rel_l2")) {
        RHYME_REQUIRE(row.size() == 2, "metrics csv: expected two columns");
        r.trajectory_ids.push_back(std::stoull(row[0]));
        r.errors.push_back(std::stod(row[1]));
    }
    return r;
}

void write_summary_csv(const EvalReport& report, const fs::path& path) {
    auto out = open_out(path);
    out << "stat,value\n";
    out << "horizon," << format_double(report.horizon) << '\n';
    out << "count," << report.errors.size() << '\n';
    out << "mean," << format_double(report.mean()) << '\n';
    out << "std," << format_double(report.stddev()) << '\n';
    out << "min," << format_double(report.quantile(0.0)) << '\n';
    out << "q1," << format_double(report.quantile(0.25)) << '\n';
    out << "median," << format_double(report.quantile(0.5)) << '\n';
    out << "q3," << format_double(report.quantile(0.75)) << '\n';
    out << "max," << format_double(report.quantile(1.0)) << '\n';
}

void write_curve_csv(const std::vector<CurveRow>& rows, const fs::path& path) {
    auto out = open_out(path);
    out << "epoch,train_loss,val_loss,lr\n";
    for (const auto& r : rows)
        out << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.val_loss) << ','
            << format_double(r.lr) << '\n';
}

std::vector<CurveRow> read_curve_csv(const fs::path& path) {
    std::vector<CurveRow> rows;
    for (const auto& row : read_csv(path, "epoch,train_loss,val_loss,lr")) {
        RHYME_REQUIRE(row.size() == 4, "curve csv: expected four columns");
        rows.push_back({std::stoi(row[0]), std::stod(row[1]), std::stod(row[2]), std::stod(row[3])});
    }
    return rows;
}

}  // namespace rhyme
