#include "ecol2/cli.hpp"

#include "ecol2/csv.hpp"
#include "ecol2/emissions.hpp"
#include "ecol2/errors.hpp"
#include "ecol2/ingest.hpp"
#include "ecol2/ledger.hpp"
#include "ecol2/metric.hpp"
#include "ecol2/workloads.hpp"
#include "report.hpp"

#include <cerrno>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <optional>
#include <ostream>

#include <spawn.h>
#include <sys/wait.h>

#include <CLI11.hpp>

extern char** environ;

namespace ecol2 {
namespace {

namespace fs = std::filesystem;
using cli::Cell;
using cli::Format;
using cli::Report;

struct GlobalOptions {
    std::string region;
    std::string power = "sample";
    std::string ledger = "ecol2-ledger";
    double alpha = 100.0;
    double beta = 100.0;
    std::int64_t n_infer = 1;
    std::string format = "table";
    std::string regions_csv;
    std::uint64_t seed = 0;

    CLI::Option* alpha_opt = nullptr;
    CLI::Option* beta_opt = nullptr;
    CLI::Option* n_infer_opt = nullptr;
    CLI::Option* region_opt = nullptr;

    [[nodiscard]] EcoL2Params params() const {
        EcoL2Params p{alpha, beta, n_infer};
        p.validate();
        return p;
    }

    /// Stored parameters, overridden by any flag given explicitly on this invocation.
    [[nodiscard]] EcoL2Params params_over(const EcoL2Params& stored) const {
        EcoL2Params p = stored;
        if (alpha_opt->count() > 0) p.alpha = alpha;
        if (beta_opt->count() > 0) p.beta = beta;
        if (n_infer_opt->count() > 0) p.n_infer = n_infer;
        p.validate();
        return p;
    }

    [[nodiscard]] RegionRegistry registry() const {
        RegionRegistry r = RegionRegistry::builtin();
        if (!regions_csv.empty()) {
            r.load_csv(regions_csv);
        }
        return r;
    }

    [[nodiscard]] std::string require_region(const RegionRegistry& registry) const {
        if (region.empty()) {
            throw ParameterError("no region given; pass --region <ISO> or set ECOL2_REGION");
        }
        std::string code = region;
        for (auto& c : code) {
            c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        }
        (void)registry.lookup(code);
        return code;
    }
};

std::string join_flags(const EcoL2Score& s) {
    std::string out;
    auto add = [&](bool on, const char* name) {
        if (on) out += out.empty() ? name : std::string(";") + name;
    };
    add(s.inaccurate, "inaccurate");
    add(s.clamped, "clamped");
    add(s.degenerate_carbon, "degenerate");
    add(s.outside_reference_domain, "outside-domain");
    return out;
}

Cell stage_cell(const LedgerSummary& sum, Stage s, double value) {
    if (!sum.totals.is_enabled(s)) {
        return std::monostate{};
    }
    return value;
}

const std::vector<std::string> kScoreColumns = {"model", "R", "RMSE", "ME", "MAE", "C_e", "C_d", "C_o",
                                                "C_i", "C", "EcoL2", "alpha", "beta", "n_infer", "flags"};

std::vector<Cell> score_row(const std::string& model, const ErrorReport& errors, const LedgerSummary& sum,
                            const EcoL2Params& params, const EcoL2Score& score) {
    const CarbonLedger& l = sum.ledger;
    return {model,
            errors.relative_l2,
            errors.rmse,
            errors.max_error,
            errors.mae,
            stage_cell(sum, Stage::embodied, l.c_embodied),
            stage_cell(sum, Stage::developmental, l.c_developmental),
            stage_cell(sum, Stage::operational, l.c_operational),
            stage_cell(sum, Stage::inference, l.c_inference_per_run),
            l.total(params.n_infer),
            score.value,
            params.alpha,
            params.beta,
            params.n_infer,
            join_flags(score)};
}

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        try {
            out.push_back(csv::parse_double(item));
        } catch (const IoError&) {
            throw ParameterError(std::string(what) + ": '" + item + "' is not a number");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

// ---------------------------------------------------------------- track

struct TrackOptions {
    std::string stage;
    std::string label;
    std::int64_t inferences = 1;
    std::vector<std::string> command;
};

int spawn_and_wait(const std::vector<std::string>& command, std::ostream& err) {
    std::vector<char*> argv;
    for (const auto& a : command) {
        argv.push_back(const_cast<char*>(a.c_str()));
    }
    argv.push_back(nullptr);
    pid_t pid = 0;
    const int rc = ::posix_spawnp(&pid, argv[0], nullptr, nullptr, argv.data(), environ);
    if (rc != 0) {
        err << "ecol2: cannot run '" << command.front() << "': " << std::strerror(rc) << '\n';
        return 127;
    }
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) {
            err << "ecol2: waitpid failed: " << std::strerror(errno) << '\n';
            return kExitRuntime;
        }
    }
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return kExitRuntime;
}

int cmd_track(const GlobalOptions& g, const TrackOptions& t, std::ostream& out, std::ostream& err) {
    const Stage stage = parse_stage(t.stage);
    if (t.command.empty()) {
        throw ParameterError("track needs a command after --");
    }
    if (t.inferences < 1) {
        throw ParameterError("--inferences must be at least 1");
    }
    const RegionRegistry registry = g.registry();
    const std::string region = g.require_region(registry);
    PowerModel power = parse_power_model(g.power);
    power.validate();

    LedgerStore store(g.ledger);
    store.lock_for_writing();

    MonotonicClock clock;
    const Meter meter(power, region, registry, clock);
    const std::string label = t.label.empty() ? fs::path(t.command.front()).filename().string() : t.label;

    auto session = meter.start(stage, label);
    const int code = spawn_and_wait(t.command, err);
    if (code != 0) {
        session.mark_failed();
    }
    if (stage == Stage::inference) {
        session.set_inference_count(t.inferences);
    }
    const EmissionRecord rec = session.stop();
    const fs::path path = store.record(rec);

    Report report;
    report.columns = {"stage", "label", "energy_kwh", "duration_s", "region", "emissions_kg", "failed", "path"};
    report.add_row({std::string(stage_name(rec.stage)), rec.label, rec.energy_kwh, rec.duration_s, rec.region,
                    rec.emissions_kg, rec.failed, path.string()});
    report.render(out, cli::parse_format(g.format));
    return code;
}

// ---------------------------------------------------------------- score

struct ScoreOptions {
    std::vector<std::string> predictions;
    std::string reference;
    std::optional<double> error;
    std::string model;
};

int cmd_score(const GlobalOptions& g, const ScoreOptions& s, std::ostream& out) {
    const EcoL2Params params = g.params();
    const Format format = cli::parse_format(g.format);

    std::vector<std::string> absent;
    LedgerStore store(g.ledger);
    if (!fs::is_directory(store.emissions_dir())) {
        absent.push_back("ledger " + store.emissions_dir().string());
    }
    const bool have_fields = !s.predictions.empty() && !s.reference.empty();
    if (!s.error && !have_fields) {
        if (s.predictions.empty()) absent.emplace_back("--pred");
        if (s.reference.empty()) absent.emplace_back("--ref");
        absent.back() += " (or --error)";
    }
    if (!absent.empty()) {
        std::string names;
        for (const auto& a : absent) names += names.empty() ? a : ", " + a;
        throw ParameterError("missing inputs: " + names);
    }

    ErrorReport errors;
    if (have_fields) {
        std::vector<fs::path> preds(s.predictions.begin(), s.predictions.end());
        const FieldPair pair = import_field_csv(preds, s.reference);
        errors = error_metrics(pair.prediction, pair.reference);
        if (!errors.relative_l2_defined()) {
            throw DomainError("reference field has zero norm; relative L2 error is undefined");
        }
    }
    if (s.error) {
        errors.relative_l2 = *s.error;
    }

    const LedgerSummary sum = store.aggregate(params.n_infer);
    const EcoL2Score score = ecol2(errors.relative_l2, sum.ledger, params);
    const std::string model = s.model.empty() ? store.root().filename().string() : s.model;
    store.write_score_inputs({model, errors, params});

    Report report;
    report.columns = kScoreColumns;
    report.add_row(score_row(model, errors, sum, params, score));
    report.render(out, format);
    return kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchOptions {
    std::string workload;
    std::string sweep_alpha;
    std::string sweep_beta;
    int dataset_size = 8;
    int inference_passes = 10;
    std::string clock = "auto";
};

int cmd_bench(const GlobalOptions& g, const BenchOptions& b, std::ostream& out) {
    const Problem problem = parse_problem(b.workload);
    const EcoL2Params params = g.params();
    const Format format = cli::parse_format(g.format);
    const RegionRegistry registry = g.registry();
    const std::string region = g.require_region(registry);
    PowerModel power = parse_power_model(g.power);
    power.validate();

    std::vector<double> alphas = b.sweep_alpha.empty() ? std::vector<double>{params.alpha}
                                                       : parse_list(b.sweep_alpha, "--sweep-alpha");
    std::vector<double> betas =
        b.sweep_beta.empty() ? std::vector<double>{params.beta} : parse_list(b.sweep_beta, "--sweep-beta");
    for (double a : alphas) EcoL2Params{a, params.beta, params.n_infer}.validate();
    for (double be : betas) EcoL2Params{params.alpha, be, params.n_infer}.validate();

    bool use_virtual = false;
    if (b.clock == "virtual") {
        use_virtual = true;
    } else if (b.clock == "auto") {
        use_virtual = power.kind == PowerModel::Kind::synthetic_fixed;
    } else if (b.clock != "wall") {
        throw ParameterError("--clock must be auto, wall or virtual");
    }
    if (use_virtual && power.kind == PowerModel::Kind::sampled_hardware) {
        throw ParameterError("a virtual clock cannot be combined with sampled hardware power");
    }

    LedgerStore store(g.ledger);
    store.lock_for_writing();
    if (!store.all_records().empty()) {
        throw ParameterError("ledger " + store.root().string() + " already holds records; use a fresh --ledger");
    }

    MonotonicClock wall;
    VirtualClock virt;
    Clock& clock = use_virtual ? static_cast<Clock&>(virt) : static_cast<Clock&>(wall);
    const Meter meter(power, region, registry, clock);

    WorkloadConfig config;
    config.problem = problem;
    config.seed = g.seed;
    config.dataset_size = b.dataset_size;
    config.inference_passes = b.inference_passes;
    const PipelineResult result = run_pipeline(config, meter, params);

    for (const auto& rec : result.records) {
        store.record(rec);
    }
    const std::string model = std::string(problem_name(problem)) + "/" + result.model;
    store.write_score_inputs({model, result.errors, params});

    Report report;
    report.columns = kScoreColumns;
    const auto grid = sweep(result.errors.relative_l2, result.summary.ledger, alphas, betas, params.n_infer);
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        for (std::size_t j = 0; j < betas.size(); ++j) {
            const EcoL2Params p{alphas[i], betas[j], params.n_infer};
            report.add_row(score_row(model, result.errors, result.summary, p, grid[i][j]));
        }
    }
    report.render(out, format);
    return kExitOk;
}

// ---------------------------------------------------------------- regions

int cmd_regions(const GlobalOptions& g, const std::vector<std::string>& targets, std::ostream& out) {
    const Format format = cli::parse_format(g.format);
    const RegionRegistry registry = g.registry();
    LedgerStore store(g.ledger);
    if (!fs::is_directory(store.emissions_dir())) {
        throw IoError("no ledger at " + store.root().string());
    }
    if (targets.empty()) {
        throw ParameterError("regions needs at least one target ISO code");
    }
    std::vector<std::string> codes;
    for (auto code : targets) {
        for (auto& c : code) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        (void)registry.lookup(code);
        codes.push_back(code);
    }

    const auto stored = store.read_score_inputs();
    const EcoL2Params params = stored ? g.params_over(stored->params) : g.params();
    const auto records = store.all_records();
    std::array<bool, 4> dirs{};
    for (Stage s : kAllStages) dirs[static_cast<int>(s)] = store.stage_enabled(s);

    Report report;
    report.columns = {"region", "intensity", "energy_kwh", "duration_s", "C_e", "C_d", "C_o", "C_i", "C", "EcoL2"};
    for (const auto& code : codes) {
        std::vector<EmissionRecord> moved;
        moved.reserve(records.size());
        for (const auto& r : records) {
            moved.push_back(what_if_region(r, code, registry));
        }
        const LedgerSummary sum = summarize(moved, params.n_infer, dirs);
        double energy = 0.0;
        double duration = 0.0;
        for (int i = 0; i < 4; ++i) {
            energy += sum.totals.energy_kwh[i];
            duration += sum.totals.duration_s[i];
        }
        Cell score = std::monostate{};
        if (stored && stored->errors.relative_l2_defined()) {
            score = ecol2(stored->errors.relative_l2, sum.ledger, params).value;
        }
        const CarbonLedger& l = sum.ledger;
        report.add_row({code, registry.lookup(code), energy, duration, stage_cell(sum, Stage::embodied, l.c_embodied),
                        stage_cell(sum, Stage::developmental, l.c_developmental),
                        stage_cell(sum, Stage::operational, l.c_operational),
                        stage_cell(sum, Stage::inference, l.c_inference_per_run), l.total(params.n_infer), score});
    }
    report.render(out, format);
    return kExitOk;
}

// ---------------------------------------------------------------- report

int cmd_report(const GlobalOptions& g, const std::vector<std::string>& roots, std::ostream& out) {
    const Format format = cli::parse_format(g.format);
    if (roots.empty()) {
        throw ParameterError("report needs at least one ledger directory");
    }
    Report report;
    report.columns = {"model", "R", "C", "EcoL2"};
    for (const auto& root : roots) {
        LedgerStore store(root);
        const auto stored = store.read_score_inputs();
        if (!stored) {
            throw IoError(root + ": no score_inputs.json; run score or bench on this ledger first");
        }
        const EcoL2Params params = g.params_over(stored->params);
        const LedgerSummary sum = store.aggregate(params.n_infer);
        const EcoL2Score score = ecol2(stored->errors.relative_l2, sum.ledger, params);
        report.add_row({stored->model, stored->errors.relative_l2, sum.ledger.total(params.n_infer), score.value});
    }
    report.render(out, format);
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Carbon-aware EcoL2 evaluation toolkit", "ecol2"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    g.region_opt = app.add_option("--region", g.region, "ISO code of the grid region")->envname("ECOL2_REGION");
    app.add_option("--power", g.power, "sample | rated:<W> | fixed:<W>")->capture_default_str();
    app.add_option("--ledger", g.ledger, "Ledger root directory")->capture_default_str();
    g.alpha_opt = app.add_option("--alpha", g.alpha, "Accuracy log base")->capture_default_str();
    g.beta_opt = app.add_option("--beta", g.beta, "Carbon weight")->capture_default_str();
    g.n_infer_opt = app.add_option("--n-infer", g.n_infer, "Inference count in the score")->capture_default_str();
    app.add_option("--format", g.format, "table | csv | json")
        ->check(CLI::IsMember({"table", "csv", "json"}))
        ->capture_default_str();
    app.add_option("--regions", g.regions_csv, "Extra region table (iso_code,intensity_g_per_kwh)");
    app.add_option("--seed", g.seed, "Workload seed")->capture_default_str();

    TrackOptions track;
    auto* track_cmd = app.add_subcommand("track", "Run a command inside an emission session");
    track_cmd->add_option("--stage", track.stage, "embodied | developmental | operational | inference")->required();
    track_cmd->add_option("--label", track.label, "Record label (default: command name)");
    track_cmd->add_option("--inferences", track.inferences, "Inferences covered (inference stage)");
    track_cmd->add_option("command", track.command, "Command to run, after --");

    ScoreOptions score;
    auto* score_cmd = app.add_subcommand("score", "Score a ledger against prediction/reference fields");
    score_cmd->add_option("--pred", score.predictions, "Prediction CSV (repeat to average runs)");
    score_cmd->add_option("--ref", score.reference, "Reference CSV");
    score_cmd->add_option("--error", score.error, "Relative L2 error, overriding the fields");
    score_cmd->add_option("--model", score.model, "Model label (default: ledger directory name)");

    BenchOptions bench;
    auto* bench_cmd = app.add_subcommand("bench", "Run a built-in workload through the full lifecycle");
    bench_cmd->add_option("workload", bench.workload, "advection | reaction | wave | kdv | ks")->required();
    bench_cmd->add_option("--sweep-alpha", bench.sweep_alpha, "Comma-separated alpha values");
    bench_cmd->add_option("--sweep-beta", bench.sweep_beta, "Comma-separated beta values");
    bench_cmd->add_option("--dataset-size", bench.dataset_size, "Samples generated for kdv/ks")->capture_default_str();
    bench_cmd->add_option("--inference-passes", bench.inference_passes, "Inference passes")->capture_default_str();
    bench_cmd->add_option("--clock", bench.clock, "auto | wall | virtual")->capture_default_str();

    std::vector<std::string> targets;
    auto* regions_cmd = app.add_subcommand("regions", "Rescale a ledger to other grid regions");
    regions_cmd->add_option("targets", targets, "Target ISO codes")->required();

    std::vector<std::string> roots;
    auto* report_cmd = app.add_subcommand("report", "Compare scored ledgers");
    report_cmd->add_option("ledgers", roots, "Ledger directories")->required();

    std::vector<std::string> argv_store{"ecol2"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*track_cmd) return cmd_track(g, track, out, err);
        if (*score_cmd) return cmd_score(g, score, out);
        if (*bench_cmd) return cmd_bench(g, bench, out);
        if (*regions_cmd) return cmd_regions(g, targets, out);
        if (*report_cmd) return cmd_report(g, roots, out);
    } catch (const ParameterError& e) {
        err << "ecol2: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DomainError& e) {
        err << "ecol2: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "ecol2: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace ecol2
