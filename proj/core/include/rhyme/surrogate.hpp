#pragma once

#include "rhyme/basis_net.hpp"
#include "rhyme/flow_net.hpp"
#include "rhyme/sampled_dataset.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <random>
#include <span>
#include <vector>

namespace rhyme {

/// h_u: r -> hidden... -> 1, tanh hidden layers.
Mlp make_recon_net(Eigen::Index r, const std::vector<Eigen::Index>& hidden, std::mt19937_64& rng,
                   const std::string& prefix = "recon");

/// u_hat = h_u(a_hat .* phi_x).
double reconstruct_output(const Mlp& recon, const Eigen::VectorXd& a_hat, const Eigen::VectorXd& phi_x);

struct SpaceTimeQuery {
    double x = 0.0;
    double t = 0.0;
};

/// The assembled surrogate (u0, f) -> u_hat(x, t).
///
/// Fields are sampled on `points` (a subset of the data grid) and projected
/// with the learned basis and the quadrature weights of those points.
class SurrogateModel {
public:
    SurrogateModel() = default;
    SurrogateModel(BasisNet basis, FlowNet flow, Mlp recon, Grid1D grid, SamplePoints points, double delta);

    const BasisNet& basis() const noexcept { return basis_; }
    FlowNet& flow() noexcept { return flow_; }
    const FlowNet& flow() const noexcept { return flow_; }
    Mlp& recon() noexcept { return recon_; }
    const Mlp& recon() const noexcept { return recon_; }
    const Grid1D& grid() const noexcept { return grid_; }
    const SamplePoints& points() const noexcept { return points_; }
    double delta() const noexcept { return delta_; }
    Eigen::Index rank() const noexcept { return flow_.rank(); }
    /// N_x x r basis values at the sample points (continuum scaling).
    const Eigen::MatrixXd& basis_at_points() const noexcept { return basis_at_points_; }
    /// r x N_x, same values.
    const Eigen::MatrixXd& basis_columns() const noexcept { return basis_columns_; }
    Eigen::Index parameter_count() const;

    /// a_0 from u0 sampled at the model points.
    Eigen::VectorXd project_state(const Eigen::VectorXd& u0_at_points) const;
    /// r x n_profiles from profiles sampled at the model points (n_profiles x N_x).
    Eigen::MatrixXd project_profiles(const Eigen::MatrixXd& profiles_at_points) const;

    /// K x N_x predictions at the model points for the given times.
    Eigen::MatrixXd predict_on_points(const Eigen::VectorXd& a0,
                                      const Eigen::MatrixXd& coeff_profiles,
                                      const std::vector<double>& times) const;
    Eigen::MatrixXd predict_on_points(const SampledTrajectory& traj, const std::vector<double>& times) const;

    void save(const std::filesystem::path& dir) const;
    static SurrogateModel load(const std::filesystem::path& dir);

private:
    BasisNet basis_;
    FlowNet flow_;
    Mlp recon_;
    Grid1D grid_;
    SamplePoints points_;
    double delta_ = 0.5;
    Eigen::MatrixXd basis_at_points_;
    Eigen::MatrixXd basis_columns_;
};

/// Mesh-free evaluation at arbitrary (x, t). u0 and the input live on the
/// model grid; a_hat(t) is computed once per distinct t.
std::vector<double> predict(const SurrogateModel& model,
                            std::span<const double> u0,
                            const PiecewiseConstantInput& input,
                            const std::vector<SpaceTimeQuery>& queries);

/// Forward state of a training batch: predictions at every model point for
/// each flow query.
struct SurrogateCache {
    FlowCache flow;
    MlpCache recon;
    Eigen::MatrixXd a_hat;  // r x Q
};

/// N_x x Q predictions, column q for batch.queries[q].
Eigen::MatrixXd predict_batch(const SurrogateModel& model, const FlowBatch& batch, SurrogateCache* cache = nullptr);

/// Accumulates gradients of flow and reconstruction parameters for the
/// upstream gradient d_pred (N_x x Q). The basis is not differentiated.
void predict_backward(const SurrogateModel& model,
                      const SurrogateCache& cache,
                      const Eigen::MatrixXd& d_pred,
                      FlowGrads& flow_grads,
                      ParamBundle& recon_grads);

}  // namespace rhyme
