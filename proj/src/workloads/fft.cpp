#include "fft.hpp"

#include "ecol2/errors.hpp"

#include <algorithm>
#include <cstring>
#include <mutex>

namespace ecol2::detail {
namespace {

// Serializes FFTW planning across threads.
std::mutex g_plan_mutex;

}  // namespace

RealFft::RealFft(int n) : n_(n) {
    if (n < 2) {
        throw ParameterError("FFT size must be at least 2");
    }
    std::lock_guard lock(g_plan_mutex);
    real_ = fftw_alloc_real(static_cast<std::size_t>(n));
    spec_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    forward_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
    if (!real_ || !spec_ || !forward_ || !inverse_) {
        throw SolverError("FFTW plan creation failed");
    }
}

RealFft::~RealFft() {
    std::lock_guard lock(g_plan_mutex);
    if (forward_) fftw_destroy_plan(forward_);
    if (inverse_) fftw_destroy_plan(inverse_);
    fftw_free(real_);
    fftw_free(spec_);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
    std::copy(in.begin(), in.end(), real_);
    fftw_execute(forward_);
    std::memcpy(static_cast<void*>(out.data()), spec_, sizeof(fftw_complex) * static_cast<std::size_t>(spectrum_size()));
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
    // c2r overwrites its input; it runs on the internal buffer.
    std::memcpy(spec_, in.data(), sizeof(fftw_complex) * static_cast<std::size_t>(spectrum_size()));
    fftw_execute(inverse_);
    const double scale = 1.0 / n_;
    for (int i = 0; i < n_; ++i) {
        out[i] = real_[i] * scale;
    }
}

}  // namespace ecol2::detail
