#include "rhyme/grid.hpp"

#include "rhyme/error.hpp"

#include <cmath>

namespace rhyme {

Grid1D::Grid1D(double x_min, double x_max, std::size_t n_points)
    : x_min_(x_min), x_max_(x_max), n_points_(n_points) {
    RHYME_REQUIRE(std::isfinite(x_min) && std::isfinite(x_max) && x_max > x_min, "Grid1D: need x_min < x_max");
    RHYME_REQUIRE(n_points >= 2, "Grid1D: need at least two nodes");
    dx_ = (x_max - x_min) / static_cast<double>(n_points);
    weights_.assign(n_points, dx_);
}

std::vector<double> Grid1D::nodes() const {
    std::vector<double> xs(n_points_);
    for (std::size_t i = 0; i < n_points_; ++i) xs[i] = node(i);
    return xs;
}

std::size_t Grid1D::nearest_node(double x) const {
    const double L = length();
    double shifted = std::fmod(x - x_min_, L);
    if (shifted < 0.0) shifted += L;
    auto idx = static_cast<std::size_t>(std::llround(shifted / dx_));
    return idx % n_points_;
}

}  // namespace rhyme
