#include "rhyme/convolution.hpp"

#include "rhyme/error.hpp"

#include <fftw3.h>

#include <complex>
#include <mutex>

namespace rhyme {

namespace {
// FFTW planning touches global state; execution with the new-array interface does not.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
};
}  // namespace

void circular_convolve_direct(std::span<const double> kernel,
                              std::span<const double> field,
                              double dx,
                              std::span<double> out) {
    const std::size_t n = kernel.size();
    RHYME_REQUIRE(field.size() == n && out.size() == n, "circular_convolve: length mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        // (i - j) mod n, split to avoid the modulo in the inner loop
        for (std::size_t j = 0; j <= i; ++j) acc += kernel[i - j] * field[j];
        for (std::size_t j = i + 1; j < n; ++j) acc += kernel[n + i - j] * field[j];
        out[i] = dx * acc;
    }
}

struct CircularConvolver::Impl {
    std::size_t n = 0;
    std::size_t n_freq = 0;
    double dx = 0.0;
    std::unique_ptr<double, FftwDeleter> real_buf;
    std::unique_ptr<fftw_complex, FftwDeleter> spec_buf;
    std::vector<std::complex<double>> kernel_spectrum;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;

    ~Impl() {
        std::lock_guard lock(planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
    }
};

CircularConvolver::CircularConvolver(std::span<const double> kernel, double dx) : impl_(std::make_unique<Impl>()) {
    const std::size_t n = kernel.size();
    RHYME_REQUIRE(n >= 1, "CircularConvolver: empty kernel");
    impl_->n = n;
    impl_->n_freq = n / 2 + 1;
    impl_->dx = dx;
    impl_->real_buf.reset(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    impl_->spec_buf.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * impl_->n_freq)));
    {
        std::lock_guard lock(planner_mutex());
        const int ni = static_cast<int>(n);
        impl_->forward = fftw_plan_dft_r2c_1d(ni, impl_->real_buf.get(), impl_->spec_buf.get(), FFTW_ESTIMATE);
        impl_->backward = fftw_plan_dft_c2r_1d(ni, impl_->spec_buf.get(), impl_->real_buf.get(), FFTW_ESTIMATE);
    }
    std::copy(kernel.begin(), kernel.end(), impl_->real_buf.get());
    fftw_execute(impl_->forward);
    impl_->kernel_spectrum.resize(impl_->n_freq);
    // fold dx and the 1/n of the unnormalized inverse into the kernel spectrum
    const double scale = dx / static_cast<double>(n);
    for (std::size_t k = 0; k < impl_->n_freq; ++k)
        impl_->kernel_spectrum[k] = scale * std::complex<double>(impl_->spec_buf.get()[k][0], impl_->spec_buf.get()[k][1]);
}

CircularConvolver::~CircularConvolver() = default;
CircularConvolver::CircularConvolver(CircularConvolver&&) noexcept = default;
CircularConvolver& CircularConvolver::operator=(CircularConvolver&&) noexcept = default;

std::size_t CircularConvolver::size() const noexcept { return impl_->n; }

void CircularConvolver::apply(std::span<const double> field, std::span<double> out) const {
    const std::size_t n = impl_->n;
    RHYME_REQUIRE(field.size() == n && out.size() == n, "circular_convolve: length mismatch");
    double* real = impl_->real_buf.get();
    fftw_complex* spec = impl_->spec_buf.get();
    std::copy(field.begin(), field.end(), real);
    fftw_execute(impl_->forward);
    for (std::size_t k = 0; k < impl_->n_freq; ++k) {
        const std::complex<double> v = impl_->kernel_spectrum[k] * std::complex<double>(spec[k][0], spec[k][1]);
        spec[k][0] = v.real();
        spec[k][1] = v.imag();
    }
    fftw_execute(impl_->backward);
    std::copy(real, real + n, out.begin());
}

std::vector<double> circular_convolve(std::span<const double> kernel,
                                      std::span<const double> field,
                                      double dx,
                                      ConvolutionBackend backend) {
    RHYME_REQUIRE(kernel.size() == field.size(), "circular_convolve: length mismatch");
    std::vector<double> out(kernel.size());
    if (backend == ConvolutionBackend::Direct) {
        circular_convolve_direct(kernel, field, dx, out);
    } else {
        CircularConvolver conv(kernel, dx);
        conv.apply(field, out);
    }
    return out;
}

}  // namespace rhyme
