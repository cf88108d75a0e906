#pragma once

#include <cstddef>
#include <random>
#include <vector>

namespace rhyme {

/// One-dimensional Latin hypercube sample of [0, T): exactly one uniform draw
/// in each stratum [iT/n, (i+1)T/n), returned in ascending order.
std::vector<double> lhs_times(double horizon, std::size_t n, std::mt19937_64& rng);

}  // namespace rhyme
