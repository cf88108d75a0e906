#include "rhyme/lhs.hpp"

#include "rhyme/error.hpp"

#include <cmath>

namespace rhyme {

std::vector<double> lhs_times(double horizon, std::size_t n, std::mt19937_64& rng) {
    RHYME_REQUIRE(n >= 1, "lhs_times: need at least one sample");
    RHYME_REQUIRE(std::isfinite(horizon) && horizon > 0.0, "lhs_times: horizon must be positive");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double width = horizon / static_cast<double>(n);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = static_cast<double>(i) * width;
        const double hi = static_cast<double>(i + 1) * width;
        double t = lo + unit(rng) * width;
        if (t >= hi) t = std::nextafter(hi, lo);
        out[i] = t;
    }
    return out;
}

}  // namespace rhyme
