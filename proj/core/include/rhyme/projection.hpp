#pragma once

#include "rhyme/input_signal.hpp"

#include <Eigen/Dense>

#include <span>

namespace rhyme {

/// Galerkin coefficients a_n = <phi_n, u>.
struct ProjectedState {
    Eigen::VectorXd coeffs;

    Eigen::Index size() const noexcept { return coeffs.size(); }
};

/// Projected piecewise-constant input: column k holds the coefficients of f_k.
struct ProjectedInputSequence {
    double delta = 0.5;
    Eigen::MatrixXd coeff_profiles;  // r x n_profiles

    Eigen::Index n_profiles() const noexcept { return coeff_profiles.cols(); }
    /// ||f_k||_2 <= M sqrt(r |Omega|) for every k.
    bool within_bound(double bound, double domain_length) const;
};

/// a_n = sum_j w_j phi_n(x_j) u(x_j); basis_values is N_x x r.
ProjectedState project(std::span<const double> field_samples,
                       const Eigen::MatrixXd& basis_values,
                       std::span<const double> quad_weights);
ProjectedState project(const Eigen::VectorXd& field_samples,
                       const Eigen::MatrixXd& basis_values,
                       std::span<const double> quad_weights);

/// u(x_j) = sum_n a_n phi_n(x_j).
Eigen::VectorXd reconstruct_linear(const ProjectedState& a, const Eigen::MatrixXd& basis_values);

/// Projects every profile; profiles must be sampled at the rows of basis_values.
ProjectedInputSequence project_input_signal(const PiecewiseConstantInput& input,
                                            const Eigen::MatrixXd& basis_values,
                                            std::span<const double> quad_weights);
/// Same, for profiles already stored as an n_profiles x N_x matrix.
ProjectedInputSequence project_input_signal(const Eigen::MatrixXd& profiles,
                                            double delta,
                                            const Eigen::MatrixXd& basis_values,
                                            std::span<const double> quad_weights);

}  // namespace rhyme
