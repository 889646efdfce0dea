#include "ecol2/workloads.hpp"

#include "ecol2/csv.hpp"
#include "ecol2/errors.hpp"

#include <cmath>
#include <limits>

namespace ecol2 {
namespace {

struct FdTrial {
    int order;
    double courant;
};

struct SpectralTrial {
    int nx;
    double max_dt;
};

std::string describe(const FdTrial& t) {
    return "fd-o" + std::to_string(t.order) + "-c" + csv::format_double(t.courant);
}

std::string describe(const SpectralTrial& t) {
    return "spectral-n" + std::to_string(t.nx) + "-dt" + csv::format_double(t.max_dt);
}

std::vector<FdTrial> fd_trials(Problem p) {
    if (p == Problem::reaction) {
        return {{2, 2.5}, {2, 1.25}, {2, 0.625}};
    }
    return {{2, 0.8}, {2, 0.4}, {4, 0.8}, {4, 0.4}};
}

std::vector<SpectralTrial> spectral_trials(SpectralEquation eq) {
    if (eq == SpectralEquation::kdv) {
        return {{64, 0.1}, {64, 0.05}, {128, 0.1}, {128, 0.05}};
    }
    return {{48, 0.1}, {48, 0.05}, {64, 0.1}, {64, 0.05}};
}

// Coarse stand-in "model": resample u0 to a coarse periodic grid, solve, resample back.
struct SpectralModel {
    SpectralEquation eq;
    Grid1D out_grid;
    SpectralTrial trial;

    std::vector<double> predict(std::span<const double> u0, double& work) const {
        Grid1D g = out_grid.with_nx(trial.nx);
        g.nt = 2;
        const auto coarse = trig_resample(u0, trial.nx);
        SpectralOptions opt;
        opt.max_dt = trial.max_dt;
        const FieldSolution sol = spectral_solve(eq, coarse, g, opt);
        work += sol.work_units;
        return trig_resample(sol.final_row(), out_grid.nx);
    }
};

std::vector<double> flatten(const std::vector<std::vector<double>>& rows) {
    std::vector<double> out;
    for (const auto& r : rows) {
        out.insert(out.end(), r.begin(), r.end());
    }
    return out;
}

PipelineResult finish(std::vector<EmissionRecord> records, const ErrorReport& errors,
                      const EcoL2Params& params, std::string model) {
    PipelineResult result;
    result.summary = summarize(records, params.n_infer);
    result.records = std::move(records);
    result.errors = errors;
    result.score = ecol2(errors.relative_l2, result.summary.ledger, params);
    result.model = std::move(model);
    return result;
}

PipelineResult run_fd_pipeline(const WorkloadConfig& config, const Meter& meter,
                               const EcoL2Params& params) {
    const Problem p = config.problem;
    const Grid1D grid = Grid1D::for_problem(p);
    const FieldSolution reference = analytic_solution(p, grid);
    std::vector<EmissionRecord> records;

    FdTrial best{};
    double best_error = std::numeric_limits<double>::infinity();
    for (const FdTrial& trial : fd_trials(p)) {
        auto session = meter.start(Stage::developmental, "trial-" + describe(trial));
        const FieldSolution sol = fd_solve(p, grid, {trial.order, trial.courant, std::nullopt});
        meter.charge(sol.work_units * kSecondsPerWorkUnit);
        const double err = error_metrics(sol.values, reference.values).relative_l2;
        records.push_back(session.stop());
        if (err < best_error) {
            best_error = err;
            best = trial;
        }
    }

    ErrorReport errors;
    {
        auto session = meter.start(Stage::operational, "final-" + describe(best));
        const FieldSolution sol = fd_solve(p, grid, {best.order, best.courant, std::nullopt});
        meter.charge(sol.work_units * kSecondsPerWorkUnit);
        errors = error_metrics(sol.values, reference.values);
        records.push_back(session.stop());
    }
    {
        auto session = meter.start(Stage::inference, "inference-" + describe(best));
        for (int pass = 0; pass < config.inference_passes; ++pass) {
            const FieldSolution sol = fd_solve(p, grid, {best.order, best.courant, std::nullopt});
            meter.charge(sol.work_units * kSecondsPerWorkUnit);
        }
        session.set_inference_count(config.inference_passes);
        records.push_back(session.stop());
    }
    return finish(std::move(records), errors, params, describe(best));
}

PipelineResult run_spectral_pipeline(const WorkloadConfig& config, const Meter& meter,
                                     const EcoL2Params& params) {
    const SpectralEquation eq =
        config.problem == Problem::kdv ? SpectralEquation::kdv : SpectralEquation::ks;
    if (config.dataset_size < 2) {
        throw ParameterError("data-driven workloads need a dataset of at least 2 samples");
    }
    std::vector<EmissionRecord> records;

    const auto base = InitialConditionSpec::random_base(config.seed);
    DatasetResult generated = generate_dataset(eq, config.dataset_size, base, config.seed, meter);
    records.push_back(generated.record);
    const Dataset& data = generated.dataset;

    // The second half of the samples is the evaluation split.
    const std::size_t first_test = data.u0.size() / 2;
    std::vector<std::vector<double>> test_u0(data.u0.begin() + static_cast<std::ptrdiff_t>(first_test),
                                             data.u0.end());
    std::vector<std::vector<double>> test_uT(data.uT.begin() + static_cast<std::ptrdiff_t>(first_test),
                                             data.uT.end());
    const std::vector<double> reference = flatten(test_uT);

    auto evaluate = [&](const SpectralModel& model) {
        double work = 0.0;
        std::vector<std::vector<double>> predictions;
        for (const auto& u0 : test_u0) {
            predictions.push_back(model.predict(u0, work));
        }
        meter.charge(work * kSecondsPerWorkUnit);
        return error_metrics(flatten(predictions), reference);
    };

    SpectralTrial best{};
    double best_error = std::numeric_limits<double>::infinity();
    for (const SpectralTrial& trial : spectral_trials(eq)) {
        auto session = meter.start(Stage::developmental, "trial-" + describe(trial));
        const double err = evaluate({eq, data.grid, trial}).relative_l2;
        records.push_back(session.stop());
        if (err < best_error) {
            best_error = err;
            best = trial;
        }
    }

    const SpectralModel model{eq, data.grid, best};
    ErrorReport errors;
    {
        auto session = meter.start(Stage::operational, "final-" + describe(best));
        errors = evaluate(model);
        records.push_back(session.stop());
    }
    {
        auto session = meter.start(Stage::inference, "inference-" + describe(best));
        double work = 0.0;
        for (int pass = 0; pass < config.inference_passes; ++pass) {
            (void)model.predict(test_u0.front(), work);
        }
        meter.charge(work * kSecondsPerWorkUnit);
        session.set_inference_count(config.inference_passes);
        records.push_back(session.stop());
    }
    return finish(std::move(records), errors, params, describe(best));
}

}  // namespace

PipelineResult run_pipeline(const WorkloadConfig& config, const Meter& meter,
                            const EcoL2Params& params) {
    params.validate();
    if (config.inference_passes < 1) {
        throw ParameterError("at least one inference pass is required");
    }
    if (is_data_driven(config.problem)) {
        return run_spectral_pipeline(config, meter, params);
    }
    return run_fd_pipeline(config, meter, params);
}

}  // namespace ecol2
