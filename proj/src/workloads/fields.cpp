#include "ecol2/workloads.hpp"

#include "ecol2/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ecol2 {
namespace {

constexpr double kPi = std::numbers::pi;

// Extent of the RK4 stability region along the negative real and the imaginary axis.
constexpr double kRk4RealLimit = 2.78;
constexpr double kRk4ImagLimit = 2.8;
// Peak modified wavenumber (times dx) of the fourth-order first-derivative stencil.
constexpr double kOrder4D1Peak = 1.3722;

FieldSolution make_field(const Grid1D& grid, Provenance provenance) {
    grid.validate();
    FieldSolution f;
    f.grid = grid;
    f.provenance = provenance;
    f.values.assign(static_cast<std::size_t>(grid.nx) * grid.nt, 0.0);
    return f;
}

template <typename Fn>
FieldSolution tabulate(const Grid1D& grid, Fn&& fn) {
    FieldSolution f = make_field(grid, Provenance::analytic);
    for (int j = 0; j < grid.nt; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            f.values[static_cast<std::size_t>(j) * grid.nx + i] = fn(grid.x(i), grid.t(j));
        }
    }
    return f;
}

void store_row(FieldSolution& f, int j, std::span<const double> u) {
    std::copy(u.begin(), u.end(), f.values.begin() + static_cast<std::ptrdiff_t>(j) * f.grid.nx);
}

int substeps(double interval, double max_dt) {
    return std::max(1, static_cast<int>(std::ceil(interval / max_dt - 1e-12)));
}

void check_order(int order) {
    if (order != 2 && order != 4) {
        throw ParameterError("scheme order must be 2 or 4, got " + std::to_string(order));
    }
}

[[noreturn]] void cfl_violation(Problem p, double courant, double limit, int order) {
    std::ostringstream msg;
    msg << "CFL bound violated for " << problem_name(p) << ": Courant number " << courant
        << " exceeds the stability limit " << limit;
    if (p != Problem::reaction) {
        msg << " for order-" << order << " central differences";
    }
    throw SolverError(msg.str());
}

void check_finite(std::span<const double> u, Problem p, double t) {
    for (double v : u) {
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << problem_name(p) << " solution became non-finite at t = " << t;
            throw SolverError(msg.str());
        }
    }
}

std::vector<double> initial_row(Problem p, const Grid1D& grid, const FdOptions& opt,
                                const PdeCoefficients& c) {
    if (opt.initial) {
        if (opt.initial->size() != static_cast<std::size_t>(grid.nx)) {
            throw ParameterError("initial data has " + std::to_string(opt.initial->size()) +
                                 " points, grid has " + std::to_string(grid.nx));
        }
        return *opt.initial;
    }
    std::vector<double> u(static_cast<std::size_t>(grid.nx));
    for (int i = 0; i < grid.nx; ++i) {
        const double x = grid.x(i);
        switch (p) {
            case Problem::advection: u[i] = advection_exact(x, 0.0, c.advection_speed); break;
            case Problem::reaction: u[i] = reaction_initial(x); break;
            default: u[i] = wave_exact(x, 0.0, c.wave_speed_sq); break;
        }
    }
    return u;
}

// First derivative on a periodic grid.
void periodic_d1(std::span<const double> u, std::span<double> out, double dx, int order) {
    const int n = static_cast<int>(u.size());
    auto at = [&](int i) { return u[static_cast<std::size_t>((i % n + n) % n)]; };
    if (order == 2) {
        for (int i = 0; i < n; ++i) {
            out[i] = (at(i + 1) - at(i - 1)) / (2.0 * dx);
        }
    } else {
        for (int i = 0; i < n; ++i) {
            out[i] = (-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) / (12.0 * dx);
        }
    }
}

// Second derivative with homogeneous Dirichlet walls, extended by odd reflection.
void dirichlet_d2(std::span<const double> u, std::span<double> out, double dx, int order) {
    const int n = static_cast<int>(u.size());
    auto at = [&](int i) {
        if (i < 0) return -u[static_cast<std::size_t>(-i)];
        if (i > n - 1) return -u[static_cast<std::size_t>(2 * (n - 1) - i)];
        return u[static_cast<std::size_t>(i)];
    };
    const double h2 = dx * dx;
    out[0] = 0.0;
    out[n - 1] = 0.0;
    for (int i = 1; i < n - 1; ++i) {
        if (order == 2) {
            out[i] = (at(i + 1) - 2.0 * at(i) + at(i - 1)) / h2;
        } else {
            out[i] = (-at(i + 2) + 16.0 * at(i + 1) - 30.0 * at(i) + 16.0 * at(i - 1) - at(i - 2)) /
                     (12.0 * h2);
        }
    }
}

FieldSolution solve_advection(const Grid1D& grid, const FdOptions& opt, const PdeCoefficients& c) {
    if (!grid.periodic) {
        throw ParameterError("advection needs a periodic grid");
    }
    const int n = grid.nx;
    const double dx = grid.dx();
    const double speed = std::abs(c.advection_speed);
    const int m = substeps(grid.dt_output(), opt.courant * dx / speed);
    const double dt = grid.dt_output() / m;

    FieldSolution f = make_field(grid, Provenance::model_numeric);
    std::vector<double> u = initial_row(Problem::advection, grid, opt, c);
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);

    auto rhs = [&](std::span<const double> v, std::span<double> out) {
        periodic_d1(v, out, dx, opt.scheme_order);
        for (double& d : out) {
            d *= -c.advection_speed;
        }
    };

    store_row(f, 0, u);
    for (int j = 1; j < grid.nt; ++j) {
        for (int s = 0; s < m; ++s) {
            rhs(u, k1);
            for (int i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * dt * k1[i];
            rhs(tmp, k2);
            for (int i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * dt * k2[i];
            rhs(tmp, k3);
            for (int i = 0; i < n; ++i) tmp[i] = u[i] + dt * k3[i];
            rhs(tmp, k4);
            for (int i = 0; i < n; ++i) {
                u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        check_finite(u, Problem::advection, grid.t(j));
        store_row(f, j, u);
    }
    f.work_units = 4.0 * n * m * (grid.nt - 1);
    return f;
}

FieldSolution solve_reaction(const Grid1D& grid, const FdOptions& opt, const PdeCoefficients& c) {
    const int n = grid.nx;
    const double rho = c.reaction_rate;
    const int m = substeps(grid.dt_output(), opt.courant / std::abs(rho));
    const double dt = grid.dt_output() / m;

    FieldSolution f = make_field(grid, Provenance::model_numeric);
    std::vector<double> u = initial_row(Problem::reaction, grid, opt, c);
    auto rate = [rho](double v) { return rho * v * (1.0 - v); };

    store_row(f, 0, u);
    for (int j = 1; j < grid.nt; ++j) {
        for (int s = 0; s < m; ++s) {
            for (int i = 0; i < n; ++i) {
                const double v = u[i];
                const double k1 = rate(v);
                const double k2 = rate(v + 0.5 * dt * k1);
                const double k3 = rate(v + 0.5 * dt * k2);
                const double k4 = rate(v + dt * k3);
                u[i] = v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        }
        check_finite(u, Problem::reaction, grid.t(j));
        store_row(f, j, u);
    }
    f.work_units = 4.0 * n * m * (grid.nt - 1);
    return f;
}

FieldSolution solve_wave(const Grid1D& grid, const FdOptions& opt, const PdeCoefficients& c) {
    if (grid.periodic) {
        throw ParameterError("wave needs a non-periodic grid with both walls");
    }
    const int n = grid.nx;
    const double dx = grid.dx();
    const double speed = std::sqrt(c.wave_speed_sq);
    const int m = substeps(grid.dt_output(), opt.courant * dx / speed);
    const double dt = grid.dt_output() / m;
    const double cdt2 = c.wave_speed_sq * dt * dt;

    FieldSolution f = make_field(grid, Provenance::model_numeric);
    std::vector<double> u = initial_row(Problem::wave, grid, opt, c);
    u.front() = 0.0;
    u.back() = 0.0;
    std::vector<double> lap(n), prev(n), next(n);

    // Zero initial velocity: u^1 = u^0 + (c dt)^2 / 2 * u_xx.
    dirichlet_d2(u, lap, dx, opt.scheme_order);
    prev = u;
    for (int i = 0; i < n; ++i) {
        u[i] = prev[i] + 0.5 * cdt2 * lap[i];
    }

    store_row(f, 0, prev);
    int steps_done = 1;
    for (int j = 1; j < grid.nt; ++j) {
        // u holds level steps_done; advance until level j*m.
        while (steps_done < j * m) {
            dirichlet_d2(u, lap, dx, opt.scheme_order);
            for (int i = 0; i < n; ++i) {
                next[i] = 2.0 * u[i] - prev[i] + cdt2 * lap[i];
            }
            std::swap(prev, u);
            std::swap(u, next);
            ++steps_done;
        }
        check_finite(u, Problem::wave, grid.t(j));
        store_row(f, j, u);
    }
    f.work_units = static_cast<double>(n) * m * (grid.nt - 1);
    return f;
}

}  // namespace

std::string_view problem_name(Problem p) noexcept {
    switch (p) {
        case Problem::advection: return "advection";
        case Problem::reaction: return "reaction";
        case Problem::wave: return "wave";
        case Problem::kdv: return "kdv";
        case Problem::ks: return "ks";
    }
    return "advection";
}

Problem parse_problem(std::string_view name) {
    for (Problem p : {Problem::advection, Problem::reaction, Problem::wave, Problem::kdv, Problem::ks}) {
        if (name == problem_name(p)) {
            return p;
        }
    }
    throw ParameterError("unknown workload '" + std::string(name) +
                         "' (expected advection, reaction, wave, kdv or ks)");
}

Grid1D Grid1D::for_problem(Problem p) {
    switch (p) {
        case Problem::advection:
        case Problem::reaction: return {2.0 * kPi, 128, 100, 1.0, true};
        case Problem::wave: return {1.0, 101, 100, 1.0, false};
        case Problem::kdv: return {128.0, 100, 100, 10.0, true};
        case Problem::ks: return {64.0, 256, 100, 10.0, true};
    }
    return {};
}

void Grid1D::validate() const {
    if (!(length > 0.0) || !std::isfinite(length)) {
        throw ParameterError("grid length must be positive");
    }
    if (nx < 8) {
        throw ParameterError("grid needs nx >= 8, got " + std::to_string(nx));
    }
    if (nt < 2) {
        throw ParameterError("grid needs nt >= 2, got " + std::to_string(nt));
    }
    if (!(t_final > 0.0) || !std::isfinite(t_final)) {
        throw ParameterError("final time must be positive");
    }
}

double Grid1D::dx() const noexcept { return periodic ? length / nx : length / (nx - 1); }

Grid1D Grid1D::with_nx(int n) const {
    Grid1D g = *this;
    g.nx = n;
    return g;
}

double advection_exact(double x, double t, double speed) { return std::sin(x - speed * t); }

double reaction_initial(double x) {
    const double s = kPi / 4.0;
    return std::exp(-(x - kPi) * (x - kPi) / (2.0 * s * s));
}

double reaction_exact(double x, double t, double rate) {
    const double h = reaction_initial(x);
    const double g = h * std::exp(rate * t);
    return g / (g + 1.0 - h);
}

double wave_exact(double x, double t, double speed_sq) {
    const double c = std::sqrt(speed_sq);
    return std::sin(kPi * x) * std::cos(c * kPi * t) +
           0.5 * std::sin(3.0 * kPi * x) * std::cos(3.0 * c * kPi * t);
}

FieldSolution analytic_advection(const Grid1D& grid, const PdeCoefficients& c) {
    return tabulate(grid, [&](double x, double t) { return advection_exact(x, t, c.advection_speed); });
}

FieldSolution analytic_reaction(const Grid1D& grid, const PdeCoefficients& c) {
    return tabulate(grid, [&](double x, double t) { return reaction_exact(x, t, c.reaction_rate); });
}

FieldSolution analytic_wave(const Grid1D& grid, const PdeCoefficients& c) {
    return tabulate(grid, [&](double x, double t) { return wave_exact(x, t, c.wave_speed_sq); });
}

FieldSolution analytic_solution(Problem p, const Grid1D& grid, const PdeCoefficients& c) {
    switch (p) {
        case Problem::advection: return analytic_advection(grid, c);
        case Problem::reaction: return analytic_reaction(grid, c);
        case Problem::wave: return analytic_wave(grid, c);
        default: break;
    }
    throw ParameterError(std::string(problem_name(p)) + " has no closed-form solution");
}

double fd_stability_limit(Problem p, int scheme_order) {
    check_order(scheme_order);
    switch (p) {
        case Problem::advection: return scheme_order == 2 ? kRk4ImagLimit : kRk4ImagLimit / kOrder4D1Peak;
        case Problem::reaction: return kRk4RealLimit;
        case Problem::wave: return scheme_order == 2 ? 1.0 : std::sqrt(3.0) / 2.0;
        default: break;
    }
    throw ParameterError(std::string(problem_name(p)) + " is not a finite-difference workload");
}

FieldSolution fd_solve(Problem p, const Grid1D& grid, const FdOptions& options,
                       const PdeCoefficients& c) {
    grid.validate();
    const double limit = fd_stability_limit(p, options.scheme_order);
    if (!(options.courant > 0.0)) {
        throw ParameterError("Courant number must be positive");
    }
    if (options.courant > limit) {
        cfl_violation(p, options.courant, limit, options.scheme_order);
    }
    switch (p) {
        case Problem::advection: return solve_advection(grid, options, c);
        case Problem::reaction: return solve_reaction(grid, options, c);
        case Problem::wave: return solve_wave(grid, options, c);
        default: break;
    }
    throw ParameterError("unreachable");
}

}  // namespace ecol2
