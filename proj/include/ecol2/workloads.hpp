#pragma once

// Benchmark PDE workloads: analytic references, classical stand-in solvers, a
// pseudospectral generator for KdV/KS datasets, and the end-to-end lifecycle pipeline.
//
//   advection  u_t + b u_x = 0             on [0, 2pi) x [0, 1], b = 10
//   reaction   u_t - rho u (1 - u) = 0      on [0, 2pi) x [0, 1], rho = 5
//   wave       u_tt - c2 u_xx = 0           on [0, 1] x [0, 1],  c2 = 3, u = 0 at both ends
//   KdV        u_t + u u_x + u_xxx = 0      periodic on [0, 128), t in [0, 10]
//   KS         u_t + u u_x + u_xx + u_xxxx = 0  periodic on [0, 64), t in [0, 10]

#include "ecol2/emissions.hpp"
#include "ecol2/ledger.hpp"
#include "ecol2/metric.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ecol2 {

enum class Problem { advection, reaction, wave, kdv, ks };

[[nodiscard]] std::string_view problem_name(Problem p) noexcept;
[[nodiscard]] Problem parse_problem(std::string_view name);
[[nodiscard]] constexpr bool is_data_driven(Problem p) noexcept {
    return p == Problem::kdv || p == Problem::ks;
}

/// Uniform space-time grid. Periodic grids exclude the duplicate endpoint x = length;
/// non-periodic grids include both ends. Output times are t_j = j * t_final / (nt - 1).
struct Grid1D {
    double length = 0.0;
    int nx = 0;
    int nt = 0;
    double t_final = 0.0;
    bool periodic = true;

    /// Default grid for each benchmark problem.
    static Grid1D for_problem(Problem p);

    void validate() const;
    [[nodiscard]] double dx() const noexcept;
    [[nodiscard]] double dt_output() const noexcept { return t_final / (nt - 1); }
    [[nodiscard]] double x(int i) const noexcept { return i * dx(); }
    [[nodiscard]] double t(int j) const noexcept { return j * dt_output(); }
    [[nodiscard]] Grid1D with_nx(int n) const;

    bool operator==(const Grid1D&) const = default;
};

enum class Provenance { analytic, reference_numeric, model_numeric };

/// u(x, t) stored row-major: values[j * nx + i] = u(x_i, t_j).
struct FieldSolution {
    Grid1D grid;
    std::vector<double> values;
    Provenance provenance = Provenance::analytic;
    /// Point updates performed to produce the field (0 for analytic fields).
    double work_units = 0.0;

    [[nodiscard]] double at(int j, int i) const { return values[static_cast<std::size_t>(j) * grid.nx + i]; }
    [[nodiscard]] std::span<const double> row(int j) const {
        return {values.data() + static_cast<std::size_t>(j) * grid.nx, static_cast<std::size_t>(grid.nx)};
    }
    [[nodiscard]] std::span<const double> final_row() const { return row(grid.nt - 1); }
};

struct PdeCoefficients {
    double advection_speed = 10.0;
    double reaction_rate = 5.0;
    double wave_speed_sq = 3.0;
};

// ---------------------------------------------------------------------------
// Analytic references

[[nodiscard]] double advection_exact(double x, double t, double speed = 10.0);
[[nodiscard]] double reaction_initial(double x);
[[nodiscard]] double reaction_exact(double x, double t, double rate = 5.0);
/// Standing-wave solution for u(x, 0) = sin(pi x) + sin(3 pi x) / 2, u_t(x, 0) = 0.
[[nodiscard]] double wave_exact(double x, double t, double speed_sq = 3.0);

[[nodiscard]] FieldSolution analytic_advection(const Grid1D& grid, const PdeCoefficients& c = {});
[[nodiscard]] FieldSolution analytic_reaction(const Grid1D& grid, const PdeCoefficients& c = {});
[[nodiscard]] FieldSolution analytic_wave(const Grid1D& grid, const PdeCoefficients& c = {});
/// Dispatches to the three functions above. Throws ParameterError for KdV/KS.
[[nodiscard]] FieldSolution analytic_solution(Problem p, const Grid1D& grid, const PdeCoefficients& c = {});

// ---------------------------------------------------------------------------
// Finite-difference stand-in solvers

struct FdOptions {
    /// Spatial order of the central differences: 2 or 4. Ignored for reaction.
    int scheme_order = 2;
    /// Courant number b*dt/dx (advection), sqrt(c2)*dt/dx (wave), or rho*dt (reaction).
    double courant = 0.5;
    /// Initial data on the grid; defaults to the problem's own initial condition.
    std::optional<std::vector<double>> initial;
};

/// Largest stable Courant number for a problem and spatial order.
[[nodiscard]] double fd_stability_limit(Problem p, int scheme_order);

/// Advection: RK4 method of lines. Wave: leapfrog with odd reflection at the walls.
/// Reaction: pointwise RK4. Throws SolverError naming the bound when `courant` exceeds it.
[[nodiscard]] FieldSolution fd_solve(Problem p, const Grid1D& grid, const FdOptions& options = {},
                                     const PdeCoefficients& c = {});

// ---------------------------------------------------------------------------
// Pseudospectral solver

enum class SpectralEquation { kdv, ks };

struct SpectralOptions {
    /// Upper bound on the internal step; the actual step divides each output interval evenly.
    /// Zero selects the equation default.
    double max_dt = 0.0;
    bool dealias = true;
};

[[nodiscard]] double default_spectral_dt(SpectralEquation eq) noexcept;

/// Integrating-factor RK4: stiff linear terms exact in Fourier space, u u_x explicit,
/// 2/3-rule dealiasing. Returns u at every output time of the grid.
/// Throws SolverError with the failure time on non-finite values.
[[nodiscard]] FieldSolution spectral_solve(SpectralEquation eq, std::span<const double> u0,
                                           const Grid1D& grid, const SpectralOptions& options = {});

/// Evaluates the trigonometric interpolant of periodic samples at n_out equispaced points.
[[nodiscard]] std::vector<double> trig_resample(std::span<const double> values, int n_out);

/// Spectral quadrature of a periodic field: sum(u) * dx.
[[nodiscard]] double periodic_integral(std::span<const double> values, double length);

// ---------------------------------------------------------------------------
// Initial conditions and datasets

struct SineTerm {
    double amplitude = 0.0;
    int frequency = 1;  // integer in [1, 5]
    double phase = 0.0;

    bool operator==(const SineTerm&) const = default;
};

/// u(x, 0) = sum_i A_i sin(2 pi l_i x / L + phi_i)
struct InitialConditionSpec {
    std::vector<SineTerm> terms;
    double eps_amplitude = 0.05;
    double eps_phase = 0.25;
    std::uint64_t seed = 0;

    /// N terms with A ~ U[0.1, 0.5], l ~ U{1..5}, phi ~ N(0, 1), all drawn from `seed`.
    static InitialConditionSpec random_base(std::uint64_t seed, int n_terms = 5);

    void validate() const;
    /// A <- A (1 + eps_A eta), phi <- phi + eps_phi eta, eta ~ U(-1, 1) per term and field.
    [[nodiscard]] InitialConditionSpec perturbed(std::mt19937_64& rng) const;

    bool operator==(const InitialConditionSpec&) const = default;
};

[[nodiscard]] std::vector<double> generate_initial_condition(const InitialConditionSpec& spec,
                                                             const Grid1D& grid);

struct Dataset {
    SpectralEquation equation = SpectralEquation::kdv;
    Grid1D grid;           // output grid (u0 and uT are sampled on it)
    int internal_nx = 0;   // resolution the solver actually ran at
    InitialConditionSpec base;
    std::uint64_t seed = 0;
    std::vector<InitialConditionSpec> samples;
    std::vector<std::vector<double>> u0;
    std::vector<std::vector<double>> uT;

    bool operator==(const Dataset&) const = default;
};

struct DatasetOptions {
    /// Zero picks the equation default (KdV 256, KS 256).
    int internal_nx = 0;
    SpectralOptions solver;
    /// Parallel sample workers; results do not depend on the count.
    int workers = 1;
};

/// Output grid and solver defaults for dataset generation.
[[nodiscard]] Grid1D dataset_grid(SpectralEquation eq);
[[nodiscard]] int default_internal_nx(SpectralEquation eq) noexcept;

struct DatasetResult {
    Dataset dataset;
    EmissionRecord record;  // embodied stage
};

/// Generates `count` (u0, u(T)) pairs from perturbations of `base`, inside one embodied
/// emission session. Throws SolverError naming the sample that blew up.
[[nodiscard]] DatasetResult generate_dataset(SpectralEquation eq, int count,
                                             const InitialConditionSpec& base, std::uint64_t seed,
                                             const Meter& meter, const DatasetOptions& options = {});

/// header.json + u0.csv + uT.csv in `dir`.
void save_dataset(const Dataset& data, const std::filesystem::path& dir);
[[nodiscard]] Dataset load_dataset(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Lifecycle pipeline

struct WorkloadConfig {
    Problem problem = Problem::advection;
    std::uint64_t seed = 0;
    int dataset_size = 8;     // KdV/KS only; half is held out for evaluation
    int inference_passes = 10;
};

struct PipelineResult {
    std::vector<EmissionRecord> records;
    LedgerSummary summary;
    ErrorReport errors;
    EcoL2Score score;
    std::string model;  // description of the selected stand-in configuration
};

/// Nominal seconds charged per point update on deterministic clocks.
inline constexpr double kSecondsPerWorkUnit = 1e-8;

/// Runs embodied (data-driven problems only), developmental, operational and inference
/// stages, each inside its own emission session, then scores the result.
[[nodiscard]] PipelineResult run_pipeline(const WorkloadConfig& config, const Meter& meter,
                                          const EcoL2Params& params);

}  // namespace ecol2
