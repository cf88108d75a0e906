#pragma once

#include <Eigen/Dense>

namespace rhyme {

struct SymmetricEigen {
    Eigen::VectorXd values;   // descending
    Eigen::MatrixXd vectors;  // columns, orthonormal
    int sweeps = 0;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (only the upper
/// triangle is read). Eigenpairs are returned in descending eigenvalue order.
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& symmetric, int max_sweeps = 100);

}  // namespace rhyme
