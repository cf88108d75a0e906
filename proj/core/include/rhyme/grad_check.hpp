#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

namespace rhyme {

struct GradCheckOptions {
    double h = 1e-6;
    /// Check every coordinate up to this many, otherwise a seeded random subset of this size.
    Eigen::Index max_coordinates = 400;
    /// Denominator floor of the relative discrepancy |a - n| / max(|a|, |n|, floor).
    double floor = 1e-3;
    std::uint64_t seed = 7;
};

struct GradCheckResult {
    double max_discrepancy = 0.0;
    Eigen::Index worst_index = -1;
    Eigen::Index checked = 0;
};

/// Central-difference check of `analytic` (dL/dparams) against `loss`. The
/// loss is evaluated with `params` temporarily perturbed in place and
/// restored afterwards.
GradCheckResult grad_check(const std::function<double()>& loss,
                           Eigen::Ref<Eigen::VectorXd> params,
                           const Eigen::VectorXd& analytic,
                           const GradCheckOptions& options = {});

}  // namespace rhyme
