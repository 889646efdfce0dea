#pragma once

// RAII wrapper over an FFTW real-to-complex / complex-to-real plan pair.

#include <complex>
#include <span>
#include <vector>

#include <fftw3.h>

namespace ecol2::detail {

class RealFft {
public:
    explicit RealFft(int n);
    ~RealFft();

    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    [[nodiscard]] int size() const noexcept { return n_; }
    [[nodiscard]] int spectrum_size() const noexcept { return n_ / 2 + 1; }

    /// Unnormalized forward transform.
    void forward(std::span<const double> in, std::span<std::complex<double>> out);
    /// Inverse transform including the 1/n normalization.
    void inverse(std::span<const std::complex<double>> in, std::span<double> out);

private:
    int n_;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
};

}  // namespace ecol2::detail
