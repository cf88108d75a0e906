#include "rhyme/symmetric_eigen.hpp"

#include "rhyme/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace rhyme {

SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& symmetric, int max_sweeps) {
    RHYME_REQUIRE(symmetric.rows() == symmetric.cols(), "jacobi_eigen: matrix must be square");
    const Eigen::Index n = symmetric.rows();
    Eigen::MatrixXd a = symmetric.triangularView<Eigen::Upper>();
    a.triangularView<Eigen::StrictlyLower>() = a.transpose().triangularView<Eigen::StrictlyLower>();
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

    SymmetricEigen out;
    const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        out.sweeps = sweep;
        if (std::sqrt(off) <= 1e-15 * scale * static_cast<double>(n)) break;

        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                // tan of the rotation angle, smaller root for stability
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values[i] = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
        out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
    }
    return out;
}

}  // namespace rhyme
