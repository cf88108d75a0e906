#include "rhyme/grad_check.hpp"

#include "rhyme/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace rhyme {

GradCheckResult grad_check(const std::function<double()>& loss,
                           Eigen::Ref<Eigen::VectorXd> params,
                           const Eigen::VectorXd& analytic,
                           const GradCheckOptions& options) {
    RHYME_REQUIRE(params.size() == analytic.size(), "grad_check: gradient length mismatch");
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(params.size()));
    std::iota(coords.begin(), coords.end(), Eigen::Index{0});
    if (params.size() > options.max_coordinates) {
        std::mt19937_64 rng(options.seed);
        for (Eigen::Index i = 0; i < options.max_coordinates; ++i) {
            std::uniform_int_distribution<Eigen::Index> pick(i, params.size() - 1);
            std::swap(coords[static_cast<std::size_t>(i)], coords[static_cast<std::size_t>(pick(rng))]);
        }
        coords.resize(static_cast<std::size_t>(options.max_coordinates));
    }
    GradCheckResult result;
    for (Eigen::Index idx : coords) {
        const double saved = params[idx];
        params[idx] = saved + options.h;
        const double plus = loss();
        params[idx] = saved - options.h;
        const double minus = loss();
        params[idx] = saved;
        const double numeric = (plus - minus) / (2.0 * options.h);
        const double a = analytic[idx];
        const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
        const double d = std::abs(a - numeric) / denom;
        if (d > result.max_discrepancy || result.worst_index < 0) {
            result.max_discrepancy = d;
            result.worst_index = idx;
        }
        ++result.checked;
    }
    return result;
}

}  // namespace rhyme
