#include "rhyme/projection.hpp"

#include "rhyme/error.hpp"

#include <cmath>

namespace rhyme {

namespace {
Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> s) {
    return {s.data(), static_cast<Eigen::Index>(s.size())};
}
}  // namespace

bool ProjectedInputSequence::within_bound(double bound, double domain_length) const {
    const double radius = bound * std::sqrt(static_cast<double>(coeff_profiles.rows()) * domain_length);
    for (Eigen::Index k = 0; k < coeff_profiles.cols(); ++k)
        if (coeff_profiles.col(k).norm() > radius) return false;
    return true;
}

ProjectedState project(const Eigen::VectorXd& field, const Eigen::MatrixXd& basis_values, std::span<const double> w) {
    RHYME_REQUIRE(field.size() == basis_values.rows() && static_cast<Eigen::Index>(w.size()) == basis_values.rows(),
                  "project: field, basis and weights must share N_x");
    ProjectedState a;
    a.coeffs.noalias() = basis_values.transpose() * as_vector(w).cwiseProduct(field);
    return a;
}

ProjectedState project(std::span<const double> field, const Eigen::MatrixXd& basis_values, std::span<const double> w) {
    return project(Eigen::VectorXd(as_vector(field)), basis_values, w);
}

Eigen::VectorXd reconstruct_linear(const ProjectedState& a, const Eigen::MatrixXd& basis_values) {
    RHYME_REQUIRE(a.coeffs.size() == basis_values.cols(), "reconstruct_linear: coefficient count must equal r");
    return basis_values * a.coeffs;
}

ProjectedInputSequence project_input_signal(const Eigen::MatrixXd& profiles,
                                            double delta,
                                            const Eigen::MatrixXd& basis_values,
                                            std::span<const double> w) {
    RHYME_REQUIRE(profiles.cols() == basis_values.rows() && static_cast<Eigen::Index>(w.size()) == basis_values.rows(),
                  "project_input_signal: input profiles are not on the basis grid");
    ProjectedInputSequence seq;
    seq.delta = delta;
    // (Phi^T W) F^T, one column per profile
    seq.coeff_profiles.noalias() = (basis_values.transpose() * as_vector(w).asDiagonal()) * profiles.transpose();
    return seq;
}

ProjectedInputSequence project_input_signal(const PiecewiseConstantInput& input,
                                            const Eigen::MatrixXd& basis_values,
                                            std::span<const double> w) {
    const auto nx = basis_values.rows();
    Eigen::MatrixXd profiles(static_cast<Eigen::Index>(input.n_profiles()), nx);
    for (std::size_t k = 0; k < input.n_profiles(); ++k) {
        RHYME_REQUIRE(static_cast<Eigen::Index>(input.profiles[k].size()) == nx,
                      "project_input_signal: input profiles are not on the basis grid");
        profiles.row(static_cast<Eigen::Index>(k)) = as_vector(input.profiles[k]).transpose();
    }
    return project_input_signal(profiles, input.delta, basis_values, w);
}

}  // namespace rhyme
