#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rhyme {

/// Uniform periodic grid on [x_min, x_max). Node i sits at x_min + i*dx with
/// dx = (x_max - x_min) / n_points; the right endpoint is identified with the
/// left one and is not stored.
class Grid1D {
public:
    Grid1D() = default;
    Grid1D(double x_min, double x_max, std::size_t n_points);

    double x_min() const noexcept { return x_min_; }
    double x_max() const noexcept { return x_max_; }
    double length() const noexcept { return x_max_ - x_min_; }
    std::size_t n_points() const noexcept { return n_points_; }
    double dx() const noexcept { return dx_; }

    double node(std::size_t i) const noexcept { return x_min_ + static_cast<double>(i) * dx_; }
    std::vector<double> nodes() const;

    /// Rectangle-rule weights; every entry equals dx.
    std::span<const double> quad_weights() const noexcept { return weights_; }

    /// Index of the node closest to x after periodic wrapping.
    std::size_t nearest_node(double x) const;

    bool operator==(const Grid1D& other) const noexcept {
        return x_min_ == other.x_min_ && x_max_ == other.x_max_ && n_points_ == other.n_points_;
    }

private:
    double x_min_ = 0.0;
    double x_max_ = 1.0;
    std::size_t n_points_ = 0;
    double dx_ = 0.0;
    std::vector<double> weights_;
};

}  // namespace rhyme
