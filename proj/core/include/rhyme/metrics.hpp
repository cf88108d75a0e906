#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace rhyme {

/// ||pred - truth||_F / ||truth||_F over one trajectory's space-time samples.
double relative_l2(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred);

struct EvalReport {
    std::string label;
    double horizon = 0.0;
    std::vector<std::size_t> trajectory_ids;
    std::vector<double> errors;

    double mean() const;
    /// Sample standard deviation (n - 1); 0 for fewer than two entries.
    double stddev() const;
    /// Linear-interpolation quantile, q in [0, 1].
    double quantile(double q) const;
};

/// Writes "trajectory_id,rel_l2" with 17 significant digits.
void write_metrics_csv(const EvalReport& report, const std::filesystem::path& path);
EvalReport read_metrics_csv(const std::filesystem::path& path);
/// Mean, std and quartiles as "stat,value" rows.
void write_summary_csv(const EvalReport& report, const std::filesystem::path& path);

struct CurveRow {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};

/// Writes "epoch,train_loss,val_loss,lr".
void write_curve_csv(const std::vector<CurveRow>& rows, const std::filesystem::path& path);
std::vector<CurveRow> read_curve_csv(const std::filesystem::path& path);

/// "%.17g"
std::string format_double(double v);

}  // namespace rhyme
