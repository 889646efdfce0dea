#include "ecol2/ledger.hpp"

#include "ecol2/errors.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <sys/types.h>
#include <unistd.h>

namespace ecol2 {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int index_of(Stage s) { return static_cast<int>(s); }

std::string sanitize_label(std::string_view label) {
    std::string out;
    for (char c : label) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '-' || c == '_' || c == '.';
        out.push_back(ok ? c : '_');
    }
    if (out.size() > 64) {
        out.resize(64);
    }
    return out.empty() ? "record" : out;
}

template <typename T>
T get_field(const json& doc, const char* key) {
    if (!doc.contains(key)) {
        throw IoError(std::string("missing field '") + key + "'");
    }
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception& e) {
        throw IoError(std::string("field '") + key + "' has the wrong type: " + e.what());
    }
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path& path, const json& doc) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write " + tmp.string());
        }
        out << doc.dump(2) << '\n';
        if (!out) {
            throw IoError("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

}  // namespace

json record_to_json(const EmissionRecord& r) {
    json doc = {
        {"stage", stage_name(r.stage)},
        {"label", r.label},
        {"energy_kwh", r.energy_kwh},
        {"duration_s", r.duration_s},
        {"region", r.region},
        {"emissions_kg", r.emissions_kg},
        {"failed", r.failed},
        {"started_unix_ms", r.started_unix_ms},
    };
    if (r.stage == Stage::inference) {
        doc["inference_count"] = r.inference_count;
    }
    if (r.power_trace) {
        json trace = json::array();
        for (const auto& s : *r.power_trace) {
            trace.push_back({s.t, s.watts});
        }
        doc["power_trace"] = std::move(trace);
    }
    return doc;
}

EmissionRecord record_from_json(const json& doc) {
    if (!doc.is_object()) {
        throw IoError("record is not a JSON object");
    }
    EmissionRecord r;
    try {
        r.stage = parse_stage(get_field<std::string>(doc, "stage"));
    } catch (const ParameterError& e) {
        throw IoError(e.what());
    }
    r.label = get_field<std::string>(doc, "label");
    r.energy_kwh = get_field<double>(doc, "energy_kwh");
    r.duration_s = get_field<double>(doc, "duration_s");
    r.region = get_field<std::string>(doc, "region");
    r.emissions_kg = get_field<double>(doc, "emissions_kg");
    if (doc.contains("failed")) {
        r.failed = get_field<bool>(doc, "failed");
    }
    if (doc.contains("started_unix_ms")) {
        r.started_unix_ms = get_field<std::int64_t>(doc, "started_unix_ms");
    }
    if (doc.contains("inference_count")) {
        r.inference_count = get_field<std::int64_t>(doc, "inference_count");
        if (r.inference_count < 1) {
            throw IoError("inference_count must be at least 1");
        }
    }
    for (double v : {r.energy_kwh, r.duration_s, r.emissions_kg}) {
        if (!std::isfinite(v) || v < 0.0) {
            throw IoError("energy, duration and emissions must be finite and non-negative");
        }
    }
    if (doc.contains("power_trace")) {
        const auto& trace = doc.at("power_trace");
        if (!trace.is_array()) {
            throw IoError("power_trace must be an array of [t, watts]");
        }
        std::vector<PowerSample> samples;
        samples.reserve(trace.size());
        for (const auto& pair : trace) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
                throw IoError("power_trace entries must be [t, watts]");
            }
            samples.push_back({pair[0].get<double>(), pair[1].get<double>()});
        }
        r.power_trace = std::move(samples);
    }
    return r;
}

LedgerSummary summarize(const std::vector<EmissionRecord>& records, std::int64_t n_infer,
                        std::array<bool, 4> enabled_dirs) {
    LedgerSummary out;
    out.totals.enabled = enabled_dirs;
    for (const auto& r : records) {
        const int i = index_of(r.stage);
        out.totals.emissions_kg[i] += r.emissions_kg;
        out.totals.energy_kwh[i] += r.energy_kwh;
        out.totals.duration_s[i] += r.duration_s;
        out.totals.records[i] += 1;
        out.totals.enabled[i] = true;
        if (r.stage == Stage::inference) {
            out.totals.inference_count += r.inference_count;
        }
    }
    out.ledger.c_embodied = out.totals.emissions(Stage::embodied);
    out.ledger.c_developmental = out.totals.emissions(Stage::developmental);
    out.ledger.c_operational = out.totals.emissions(Stage::operational);
    out.ledger.c_inference_per_run =
        out.totals.inference_count > 0
            ? out.totals.emissions(Stage::inference) / static_cast<double>(out.totals.inference_count)
            : 0.0;
    out.degenerate = out.ledger.total(n_infer) == 0.0;
    return out;
}

json score_inputs_to_json(const ScoreInputs& in) {
    json errors = {
        {"rmse", in.errors.rmse},
        {"max_error", in.errors.max_error},
        {"mae", in.errors.mae},
        {"n_points", in.errors.n_points},
    };
    errors["relative_l2"] = in.errors.relative_l2_defined() ? json(in.errors.relative_l2) : json();
    return {
        {"model", in.model},
        {"errors", errors},
        {"alpha", in.params.alpha},
        {"beta", in.params.beta},
        {"n_infer", in.params.n_infer},
    };
}

ScoreInputs score_inputs_from_json(const json& doc) {
    ScoreInputs in;
    in.model = get_field<std::string>(doc, "model");
    if (!doc.contains("errors") || !doc.at("errors").is_object()) {
        throw IoError("missing object 'errors'");
    }
    const auto& e = doc.at("errors");
    in.errors.relative_l2 = e.contains("relative_l2") && !e.at("relative_l2").is_null()
                                ? get_field<double>(e, "relative_l2")
                                : std::nan("");
    in.errors.rmse = get_field<double>(e, "rmse");
    in.errors.max_error = get_field<double>(e, "max_error");
    in.errors.mae = get_field<double>(e, "mae");
    in.errors.n_points = get_field<std::size_t>(e, "n_points");
    in.params.alpha = get_field<double>(doc, "alpha");
    in.params.beta = get_field<double>(doc, "beta");
    in.params.n_infer = get_field<std::int64_t>(doc, "n_infer");
    return in;
}

// ---------------------------------------------------------------------------

LedgerStore::LedgerStore(fs::path root) : root_(std::move(root)) {}

LedgerStore::~LedgerStore() { release_lock(); }

LedgerStore::LedgerStore(LedgerStore&& other) noexcept
    : root_(std::move(other.root_)), locked_(std::exchange(other.locked_, false)) {}

LedgerStore& LedgerStore::operator=(LedgerStore&& other) noexcept {
    if (this != &other) {
        release_lock();
        root_ = std::move(other.root_);
        locked_ = std::exchange(other.locked_, false);
    }
    return *this;
}

fs::path LedgerStore::stage_path(Stage stage) const { return emissions_dir() / stage_dir(stage); }

void LedgerStore::lock_for_writing() {
    if (locked_) {
        return;
    }
    std::error_code ec;
    fs::create_directories(emissions_dir(), ec);
    if (ec) {
        throw IoError("cannot create " + emissions_dir().string() + ": " + ec.message());
    }
    const fs::path lock = emissions_dir() / ".lock";
    for (int attempt = 0; attempt < 2; ++attempt) {
        const int fd = ::open(lock.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd >= 0) {
            const std::string pid = std::to_string(::getpid()) + "\n";
            [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
            ::close(fd);
            locked_ = true;
            return;
        }
        if (errno != EEXIST) {
            throw IoError("cannot create lock " + lock.string() + ": " + std::strerror(errno));
        }
        // Reclaim a lock left by a process that no longer exists.
        std::ifstream in(lock);
        long holder = 0;
        if (in >> holder && holder > 0 && ::kill(static_cast<pid_t>(holder), 0) != 0 &&
            errno == ESRCH) {
            fs::remove(lock, ec);
            continue;
        }
        throw IoError("ledger " + root_.string() + " is locked by another writer (pid " +
                      std::to_string(holder) + ")");
    }
    throw IoError("could not acquire ledger lock " + lock.string());
}

void LedgerStore::release_lock() noexcept {
    if (locked_) {
        std::error_code ec;
        fs::remove(emissions_dir() / ".lock", ec);
        locked_ = false;
    }
}

void LedgerStore::enable(Stage stage) {
    lock_for_writing();
    std::error_code ec;
    fs::create_directories(stage_path(stage), ec);
    if (ec) {
        throw IoError("cannot create " + stage_path(stage).string() + ": " + ec.message());
    }
}

fs::path LedgerStore::record(const EmissionRecord& emission) {
    enable(emission.stage);
    const std::int64_t millis = std::max<std::int64_t>(emission.started_unix_ms, 0);
    const std::string stem = std::to_string(millis) + "-" + sanitize_label(emission.label);
    fs::path path = stage_path(emission.stage) / (stem + ".json");
    for (int suffix = 1; fs::exists(path); ++suffix) {
        path = stage_path(emission.stage) / (stem + "-" + std::to_string(suffix) + ".json");
    }
    write_json_file(path, record_to_json(emission));
    return path;
}

bool LedgerStore::stage_enabled(Stage stage) const { return fs::is_directory(stage_path(stage)); }

std::vector<EmissionRecord> LedgerStore::records(Stage stage) const {
    std::vector<EmissionRecord> out;
    if (!stage_enabled(stage)) {
        return out;
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(stage_path(stage))) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
        try {
            EmissionRecord r = record_from_json(read_json_file(file));
            if (r.stage != stage) {
                throw IoError("stage '" + std::string(stage_name(r.stage)) +
                              "' does not match directory " + std::string(stage_dir(stage)));
            }
            out.push_back(std::move(r));
        } catch (const IoError& e) {
            const std::string what = e.what();
            throw IoError(what.starts_with(file.string()) ? what : file.string() + ": " + what);
        }
    }
    return out;
}

std::vector<EmissionRecord> LedgerStore::all_records() const {
    std::vector<EmissionRecord> out;
    for (Stage s : kAllStages) {
        auto part = records(s);
        out.insert(out.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
    }
    return out;
}

LedgerSummary LedgerStore::aggregate(std::int64_t n_infer) const {
    std::array<bool, 4> dirs{};
    for (Stage s : kAllStages) {
        dirs[index_of(s)] = stage_enabled(s);
    }
    return summarize(all_records(), n_infer, dirs);
}

void LedgerStore::write_score_inputs(const ScoreInputs& inputs) {
    lock_for_writing();
    write_json_file(root_ / "score_inputs.json", score_inputs_to_json(inputs));
}

std::optional<ScoreInputs> LedgerStore::read_score_inputs() const {
    const fs::path path = root_ / "score_inputs.json";
    if (!fs::exists(path)) {
        return std::nullopt;
    }
    try {
        return score_inputs_from_json(read_json_file(path));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

}  // namespace ecol2
