#include "ecol2/workloads.hpp"

#include "ecol2/errors.hpp"
#include "fft.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

namespace ecol2 {
namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

}  // namespace

double default_spectral_dt(SpectralEquation eq) noexcept {
    return eq == SpectralEquation::kdv ? 5e-3 : 2e-3;
}

FieldSolution spectral_solve(SpectralEquation eq, std::span<const double> u0, const Grid1D& grid,
                             const SpectralOptions& options) {
    grid.validate();
    if (!grid.periodic) {
        throw ParameterError("pseudospectral solves need a periodic grid");
    }
    if (grid.nx % 2 != 0) {
        throw ParameterError("pseudospectral solves need an even nx, got " + std::to_string(grid.nx));
    }
    if (u0.size() != static_cast<std::size_t>(grid.nx)) {
        throw ParameterError("initial data has " + std::to_string(u0.size()) + " points, grid has " +
                             std::to_string(grid.nx));
    }
    const double max_dt = options.max_dt > 0.0 ? options.max_dt : default_spectral_dt(eq);

    const int n = grid.nx;
    detail::RealFft fft(n);
    const int nk = fft.spectrum_size();
    const int m = std::max(1, static_cast<int>(std::ceil(grid.dt_output() / max_dt - 1e-12)));
    const double dt = grid.dt_output() / m;

    // Linear operator L(k), first-derivative symbol ik, dealiasing mask.
    std::vector<cplx> lin(nk), e_full(nk), e_half(nk), nl_factor(nk);
    for (int j = 0; j < nk; ++j) {
        const double k = 2.0 * kPi * j / grid.length;
        cplx l;
        if (eq == SpectralEquation::kdv) {
            l = cplx(0.0, k * k * k);  // -(ik)^3 = i k^3
        } else {
            l = cplx(k * k - k * k * k * k, 0.0);  // -(ik)^2 - (ik)^4
        }
        lin[j] = l;
        e_full[j] = std::exp(l * dt);
        e_half[j] = std::exp(l * (dt / 2.0));
        // u u_x = (u^2 / 2)_x, so the nonlinear term is -(ik / 2) FFT(u^2).
        const bool keep = !options.dealias || 3 * j < n;  // |j| <= n/3 survives the 2/3 rule
        const bool nyquist = j == n / 2;
        nl_factor[j] = (keep && !nyquist) ? cplx(0.0, -0.5 * k) : cplx(0.0, 0.0);
    }

    std::vector<double> phys(n), sq(n);
    std::vector<cplx> v(nk), a(nk), b(nk), c(nk), d(nk), tmp(nk);

    auto nonlinear = [&](const std::vector<cplx>& spec, std::vector<cplx>& out) {
        fft.inverse(spec, phys);
        for (int i = 0; i < n; ++i) {
            sq[i] = phys[i] * phys[i];
        }
        fft.forward(sq, out);
        for (int j = 0; j < nk; ++j) {
            out[j] *= nl_factor[j];
        }
    };

    FieldSolution f;
    f.grid = grid;
    f.provenance = Provenance::reference_numeric;
    f.values.assign(static_cast<std::size_t>(n) * grid.nt, 0.0);
    std::copy(u0.begin(), u0.end(), f.values.begin());

    fft.forward(u0, v);
    if (n % 2 == 0) {
        v[nk - 1] = 0.0;  // Nyquist mode dropped
    }

    for (int out = 1; out < grid.nt; ++out) {
        for (int s = 0; s < m; ++s) {
            nonlinear(v, a);
            for (int j = 0; j < nk; ++j) tmp[j] = e_half[j] * (v[j] + 0.5 * dt * a[j]);
            nonlinear(tmp, b);
            for (int j = 0; j < nk; ++j) tmp[j] = e_half[j] * v[j] + 0.5 * dt * b[j];
            nonlinear(tmp, c);
            for (int j = 0; j < nk; ++j) tmp[j] = e_full[j] * v[j] + dt * e_half[j] * c[j];
            nonlinear(tmp, d);
            for (int j = 0; j < nk; ++j) {
                v[j] = e_full[j] * v[j] +
                       dt / 6.0 * (e_full[j] * a[j] + 2.0 * e_half[j] * (b[j] + c[j]) + d[j]);
            }
        }
        fft.inverse(v, phys);
        for (double x : phys) {
            if (!std::isfinite(x)) {
                std::ostringstream msg;
                msg << (eq == SpectralEquation::kdv ? "KdV" : "KS")
                    << " solution blew up before t = " << grid.t(out);
                throw SolverError(msg.str());
            }
        }
        std::copy(phys.begin(), phys.end(),
                  f.values.begin() + static_cast<std::ptrdiff_t>(out) * n);
    }
    // Four transform pairs per stage, counted as n log2 n point operations each.
    f.work_units = 8.0 * 4.0 * n * std::log2(static_cast<double>(n)) * m * (grid.nt - 1);
    return f;
}

std::vector<double> trig_resample(std::span<const double> values, int n_out) {
    const int n = static_cast<int>(values.size());
    if (n < 2 || n_out < 1) {
        throw ParameterError("resampling needs at least two input and one output point");
    }
    if (n_out == n) {
        return {values.begin(), values.end()};
    }
    detail::RealFft fft(n);
    std::vector<cplx> spec(fft.spectrum_size());
    fft.forward(values, spec);

    // Band-limited interpolant; the Nyquist term of an even-length input uses its cosine part.
    std::vector<double> out(static_cast<std::size_t>(n_out));
    for (int p = 0; p < n_out; ++p) {
        const double theta = 2.0 * kPi * p / n_out;
        double sum = spec[0].real();
        for (int j = 1; j < fft.spectrum_size(); ++j) {
            const double weight = (n % 2 == 0 && j == n / 2) ? 1.0 : 2.0;
            sum += weight * (spec[j] * std::polar(1.0, theta * j)).real();
        }
        out[p] = sum / n;
    }
    return out;
}

double periodic_integral(std::span<const double> values, double length) {
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    return sum * length / static_cast<double>(values.size());
}

}  // namespace ecol2
