#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace rhyme {

enum class ConvolutionBackend { Direct, Transform };

/// result[i] = dx * sum_j kernel[(i - j) mod n] * field[j]
std::vector<double> circular_convolve(std::span<const double> kernel,
                                      std::span<const double> field,
                                      double dx,
                                      ConvolutionBackend backend = ConvolutionBackend::Transform);

/// O(n^2) reference sum. Writes into `out` (size n).
void circular_convolve_direct(std::span<const double> kernel,
                              std::span<const double> field,
                              double dx,
                              std::span<double> out);

/// Transform-based circular convolution with a fixed kernel. The kernel
/// spectrum is computed once; apply() reuses internal scratch buffers, so one
/// instance must not be shared between threads.
class CircularConvolver {
public:
    CircularConvolver(std::span<const double> kernel, double dx);
    ~CircularConvolver();
    CircularConvolver(CircularConvolver&&) noexcept;
    CircularConvolver& operator=(CircularConvolver&&) noexcept;
    CircularConvolver(const CircularConvolver&) = delete;
    CircularConvolver& operator=(const CircularConvolver&) = delete;

    std::size_t size() const noexcept;
    void apply(std::span<const double> field, std::span<double> out) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace rhyme
