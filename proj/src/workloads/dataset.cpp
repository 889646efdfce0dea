#include "ecol2/workloads.hpp"

#include "ecol2/csv.hpp"
#include "ecol2/errors.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <thread>

#include <json.hpp>

namespace ecol2 {
namespace {

constexpr double kPi = std::numbers::pi;

// Draws built directly on the engine's raw output.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

double standard_normal(std::mt19937_64& rng) {
    // Box-Muller with u in (0, 1].
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

std::string_view equation_name(SpectralEquation eq) { return eq == SpectralEquation::kdv ? "kdv" : "ks"; }

SpectralEquation parse_equation(std::string_view s) {
    if (s == "kdv") return SpectralEquation::kdv;
    if (s == "ks") return SpectralEquation::ks;
    throw IoError("unknown dataset equation '" + std::string(s) + "'");
}

nlohmann::json spec_to_json(const InitialConditionSpec& s) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : s.terms) {
        terms.push_back({{"amplitude", t.amplitude}, {"frequency", t.frequency}, {"phase", t.phase}});
    }
    return {{"terms", terms},
            {"eps_amplitude", s.eps_amplitude},
            {"eps_phase", s.eps_phase},
            {"seed", s.seed}};
}

InitialConditionSpec spec_from_json(const nlohmann::json& j) {
    InitialConditionSpec s;
    for (const auto& t : j.at("terms")) {
        s.terms.push_back({t.at("amplitude").get<double>(), t.at("frequency").get<int>(),
                           t.at("phase").get<double>()});
    }
    s.eps_amplitude = j.at("eps_amplitude").get<double>();
    s.eps_phase = j.at("eps_phase").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

}  // namespace

InitialConditionSpec InitialConditionSpec::random_base(std::uint64_t seed, int n_terms) {
    if (n_terms < 0) {
        throw ParameterError("number of series terms must be non-negative");
    }
    std::mt19937_64 rng(seed);
    InitialConditionSpec spec;
    spec.seed = seed;
    for (int i = 0; i < n_terms; ++i) {
        SineTerm t;
        t.amplitude = uniform(rng, 0.1, 0.5);
        t.frequency = 1 + static_cast<int>(rng() % 5);
        t.phase = standard_normal(rng);
        spec.terms.push_back(t);
    }
    return spec;
}

void InitialConditionSpec::validate() const {
    for (const auto& t : terms) {
        if (t.frequency < 1 || t.frequency > 5) {
            throw ParameterError("series frequencies must be integers in [1, 5], got " +
                                 std::to_string(t.frequency));
        }
        if (!std::isfinite(t.amplitude) || !std::isfinite(t.phase)) {
            throw ParameterError("series amplitudes and phases must be finite");
        }
    }
    if (!(eps_amplitude >= 0.0) || !(eps_phase >= 0.0)) {
        throw ParameterError("perturbation sizes must be non-negative");
    }
}

InitialConditionSpec InitialConditionSpec::perturbed(std::mt19937_64& rng) const {
    InitialConditionSpec out = *this;
    for (auto& t : out.terms) {
        const double eta_a = uniform(rng, -1.0, 1.0);
        const double eta_p = uniform(rng, -1.0, 1.0);
        t.amplitude *= 1.0 + eps_amplitude * eta_a;
        t.phase += eps_phase * eta_p;
    }
    return out;
}

std::vector<double> generate_initial_condition(const InitialConditionSpec& spec, const Grid1D& grid) {
    spec.validate();
    grid.validate();
    std::vector<double> u(static_cast<std::size_t>(grid.nx), 0.0);
    for (int i = 0; i < grid.nx; ++i) {
        const double x = grid.x(i);
        double sum = 0.0;
        for (const auto& t : spec.terms) {
            sum += t.amplitude * std::sin(2.0 * kPi * t.frequency * x / grid.length + t.phase);
        }
        u[i] = sum;
    }
    return u;
}

Grid1D dataset_grid(SpectralEquation eq) {
    return Grid1D::for_problem(eq == SpectralEquation::kdv ? Problem::kdv : Problem::ks);
}

int default_internal_nx(SpectralEquation) noexcept { return 256; }

DatasetResult generate_dataset(SpectralEquation eq, int count, const InitialConditionSpec& base,
                               std::uint64_t seed, const Meter& meter, const DatasetOptions& options) {
    if (count < 1) {
        throw ParameterError("dataset needs at least one sample");
    }
    base.validate();
    const Grid1D out_grid = dataset_grid(eq);
    const int internal_nx = options.internal_nx > 0 ? options.internal_nx : default_internal_nx(eq);
    const Grid1D solve_grid = out_grid.with_nx(internal_nx);
    // Endpoint-only solve with two output times.
    Grid1D endpoint_grid = solve_grid;
    endpoint_grid.nt = 2;
    SpectralOptions solver = options.solver;
    if (solver.max_dt <= 0.0) {
        solver.max_dt = default_spectral_dt(eq);
    }
    // Same internal step as a full nt-row solve.
    {
        const int m = std::max(1, static_cast<int>(std::ceil(out_grid.dt_output() / solver.max_dt - 1e-12)));
        solver.max_dt = out_grid.dt_output() / m;
    }

    Dataset data;
    data.equation = eq;
    data.grid = out_grid;
    data.internal_nx = internal_nx;
    data.base = base;
    data.seed = seed;

    std::mt19937_64 rng(seed);
    data.samples.reserve(static_cast<std::size_t>(count));
    for (int s = 0; s < count; ++s) {
        data.samples.push_back(base.perturbed(rng));
    }
    data.u0.resize(static_cast<std::size_t>(count));
    data.uT.resize(static_cast<std::size_t>(count));
    std::vector<double> work(static_cast<std::size_t>(count), 0.0);

    auto session = meter.start(Stage::embodied, std::string(equation_name(eq)) + "-dataset");

    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::string first_error;
    int failed_sample = -1;

    auto worker = [&] {
        for (int s = next++; s < count; s = next++) {
            try {
                const auto u0_fine = generate_initial_condition(data.samples[s], solve_grid);
                const FieldSolution sol = spectral_solve(eq, u0_fine, endpoint_grid, solver);
                data.u0[s] = generate_initial_condition(data.samples[s], out_grid);
                data.uT[s] = trig_resample(sol.final_row(), out_grid.nx);
                work[s] = sol.work_units;
            } catch (const Error& e) {
                std::lock_guard lock(error_mutex);
                if (failed_sample < 0 || s < failed_sample) {
                    failed_sample = s;
                    first_error = e.what();
                }
                next = count;  // abort the run
            }
        }
    };

    const int workers = std::max(1, std::min(options.workers, count));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    // Charged in sample order.
    for (double w : work) {
        meter.charge(w * kSecondsPerWorkUnit);
    }
    if (failed_sample >= 0) {
        session.mark_failed();
        (void)session.stop();
        throw SolverError("dataset sample " + std::to_string(failed_sample) + " failed: " + first_error);
    }
    EmissionRecord record = session.stop();
    return {std::move(data), std::move(record)};
}

void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : data.samples) {
        samples.push_back(spec_to_json(s));
    }
    const nlohmann::json header = {
        {"equation", equation_name(data.equation)},
        {"grid",
         {{"length", data.grid.length},
          {"nx", data.grid.nx},
          {"nt", data.grid.nt},
          {"t_final", data.grid.t_final},
          {"periodic", data.grid.periodic}}},
        {"internal_nx", data.internal_nx},
        {"seed", data.seed},
        {"base_spec", spec_to_json(data.base)},
        {"samples", samples},
        {"count", data.u0.size()},
    };
    std::ofstream out(dir / "header.json", std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + (dir / "header.json").string());
    }
    out << header.dump(2) << '\n';
    csv::write_matrix(dir / "u0.csv", data.u0);
    csv::write_matrix(dir / "uT.csv", data.uT);
}

Dataset load_dataset(const std::filesystem::path& dir) {
    std::ifstream in(dir / "header.json", std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + (dir / "header.json").string());
    }
    Dataset data;
    try {
        const auto header = nlohmann::json::parse(in);
        data.equation = parse_equation(header.at("equation").get<std::string>());
        const auto& g = header.at("grid");
        data.grid = {g.at("length").get<double>(), g.at("nx").get<int>(), g.at("nt").get<int>(),
                     g.at("t_final").get<double>(), g.at("periodic").get<bool>()};
        data.internal_nx = header.at("internal_nx").get<int>();
        data.seed = header.at("seed").get<std::uint64_t>();
        data.base = spec_from_json(header.at("base_spec"));
        for (const auto& s : header.at("samples")) {
            data.samples.push_back(spec_from_json(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError((dir / "header.json").string() + ": " + e.what());
    }
    data.u0 = csv::read_matrix(dir / "u0.csv");
    data.uT = csv::read_matrix(dir / "uT.csv");
    if (data.u0.size() != data.samples.size() || data.uT.size() != data.samples.size()) {
        throw IoError(dir.string() + ": sample count in header does not match the matrices");
    }
    return data;
}

}  // namespace ecol2
