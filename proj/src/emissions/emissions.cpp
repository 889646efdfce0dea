#include "ecol2/emissions.hpp"

#include "ecol2/csv.hpp"
#include "ecol2/errors.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <fstream>

namespace ecol2 {
namespace {

std::atomic<bool> g_sampled_active{false};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::int64_t unix_millis() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace

std::string_view stage_name(Stage stage) noexcept {
    switch (stage) {
        case Stage::embodied: return "embodied";
        case Stage::developmental: return "developmental";
        case Stage::operational: return "operational";
        case Stage::inference: return "inference";
    }
    return "operational";
}

std::string_view stage_dir(Stage stage) noexcept {
    switch (stage) {
        case Stage::embodied: return "Embodied";
        case Stage::developmental: return "Developmental";
        case Stage::operational: return "Operational";
        case Stage::inference: return "Inference";
    }
    return "Operational";
}

Stage parse_stage(std::string_view name) {
    const std::string key = lower(name);
    for (Stage s : kAllStages) {
        if (key == stage_name(s)) {
            return s;
        }
    }
    throw ParameterError("unknown stage '" + std::string(name) +
                         "' (expected embodied, developmental, operational or inference)");
}

// ---------------------------------------------------------------------------

double MonotonicClock::now() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

void VirtualClock::charge(double seconds) {
    if (!(seconds >= 0.0) || !std::isfinite(seconds)) {
        throw ParameterError("cannot charge a negative or non-finite duration");
    }
    elapsed_.fetch_add(seconds);
}

// ---------------------------------------------------------------------------

PowerModel PowerModel::sampled(double interval_s, PowerProbe probe) {
    PowerModel m;
    m.kind = Kind::sampled_hardware;
    m.sample_interval_s = interval_s;
    m.probe = std::move(probe);
    return m;
}

PowerModel PowerModel::rated(double watts) {
    PowerModel m;
    m.kind = Kind::constant_rated;
    m.watts = watts;
    return m;
}

PowerModel PowerModel::fixed(double watts) {
    PowerModel m;
    m.kind = Kind::synthetic_fixed;
    m.watts = watts;
    return m;
}

void PowerModel::validate() const {
    switch (kind) {
        case Kind::sampled_hardware:
            if (!(sample_interval_s >= 0.1 && sample_interval_s <= 60.0)) {
                throw ParameterError("sample interval must lie in [0.1, 60] s");
            }
            break;
        case Kind::constant_rated:
            if (!(watts > 0.0) || !std::isfinite(watts)) {
                throw ParameterError("rated power must be positive");
            }
            break;
        case Kind::synthetic_fixed:
            if (!(watts >= 0.0) || !std::isfinite(watts)) {
                throw ParameterError("fixed power must be non-negative");
            }
            break;
    }
}

std::string PowerModel::describe() const {
    switch (kind) {
        case Kind::sampled_hardware: return "sample";
        case Kind::constant_rated: return "rated:" + csv::format_double(watts);
        case Kind::synthetic_fixed: return "fixed:" + csv::format_double(watts);
    }
    return "";
}

PowerModel parse_power_model(std::string_view text) {
    if (text == "sample") {
        return PowerModel::sampled();
    }
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        throw ParameterError("power model must be sample, rated:<W> or fixed:<W>");
    }
    const auto kind = text.substr(0, colon);
    double watts = 0.0;
    try {
        watts = csv::parse_double(text.substr(colon + 1));
    } catch (const IoError&) {
        throw ParameterError("bad wattage in power model '" + std::string(text) + "'");
    }
    PowerModel m;
    if (kind == "rated") {
        m = PowerModel::rated(watts);
    } else if (kind == "fixed") {
        m = PowerModel::fixed(watts);
    } else {
        throw ParameterError("power model must be sample, rated:<W> or fixed:<W>");
    }
    m.validate();
    return m;
}

PowerProbe rapl_probe(const std::filesystem::path& powercap_root) {
    namespace fs = std::filesystem;

    struct Counter {
        fs::path energy;
        double max_range_uj = 0.0;
        double last_uj = 0.0;
    };
    auto read_uj = [](const fs::path& p) -> std::optional<double> {
        std::ifstream in(p);
        double v = 0.0;
        if (in >> v) {
            return v;
        }
        return std::nullopt;
    };

    std::vector<Counter> counters;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(powercap_root, ec)) {
        const std::string name = entry.path().filename().string();
        // Package domains only (intel-rapl:N); subdomains intel-rapl:N:M are contained in them.
        if (!name.starts_with("intel-rapl:") || name.find(':', 11) != std::string::npos) {
            continue;
        }
        const auto energy = read_uj(entry.path() / "energy_uj");
        if (!energy) {
            continue;
        }
        Counter c;
        c.energy = entry.path() / "energy_uj";
        c.max_range_uj = read_uj(entry.path() / "max_energy_range_uj").value_or(0.0);
        c.last_uj = *energy;
        counters.push_back(c);
    }
    if (counters.empty()) {
        throw IoError("no readable RAPL energy counters under " + powercap_root.string() +
                      "; use --power rated:<W> instead");
    }

    struct ProbeState {
        std::vector<Counter> counters;
        std::chrono::steady_clock::time_point last;
        std::mutex mutex;
    };
    auto state = std::make_shared<ProbeState>();
    state->counters = std::move(counters);
    state->last = std::chrono::steady_clock::now();

    return [state, read_uj]() -> double {
        std::lock_guard lock(state->mutex);
        const auto now = std::chrono::steady_clock::now();
        const double dt = std::chrono::duration<double>(now - state->last).count();
        double joules = 0.0;
        for (auto& c : state->counters) {
            const double cur = read_uj(c.energy).value_or(c.last_uj);
            double delta = cur - c.last_uj;
            if (delta < 0.0 && c.max_range_uj > 0.0) {
                delta += c.max_range_uj;  // counter wrapped
            }
            joules += std::max(delta, 0.0) * 1e-6;
            c.last_uj = cur;
        }
        state->last = now;
        return dt > 0.0 ? joules / dt : 0.0;
    };
}

double trapezoid_energy_j(std::span<const PowerSample> trace) {
    double joules = 0.0;
    for (std::size_t i = 1; i < trace.size(); ++i) {
        joules += 0.5 * (trace[i].watts + trace[i - 1].watts) * (trace[i].t - trace[i - 1].t);
    }
    return joules;
}

void PowerAccumulator::append(PowerSample sample) {
    std::lock_guard lock(mutex_);
    samples_.push_back(sample);
}

std::vector<PowerSample> PowerAccumulator::snapshot() const {
    std::lock_guard lock(mutex_);
    return samples_;
}

std::size_t PowerAccumulator::size() const {
    std::lock_guard lock(mutex_);
    return samples_.size();
}

// ---------------------------------------------------------------------------

RegionRegistry RegionRegistry::builtin() {
    RegionRegistry r;
    r.intensities_ = {
        {"NZ", 112.76}, {"ZA", 707.69}, {"CH", 34.84},
        {"AE", 561.14}, {"GB", 237.59}, {"US", 369.47},
    };
    return r;
}

void RegionRegistry::load_csv(const std::filesystem::path& path) {
    const csv::Table table = csv::read_file(path);
    const int code_col = table.column("iso_code");
    const int value_col = table.column("intensity_g_per_kwh");
    if (code_col < 0 || value_col < 0) {
        throw IoError(path.string() + ": expected header iso_code,intensity_g_per_kwh");
    }
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (row.size() <= static_cast<std::size_t>(std::max(code_col, value_col))) {
            throw IoError(path.string() + " row " + std::to_string(i + 2) + ": missing columns");
        }
        double value = 0.0;
        try {
            value = csv::parse_double(row[value_col]);
        } catch (const IoError& e) {
            throw IoError(path.string() + " row " + std::to_string(i + 2) + ": " + e.what());
        }
        set(row[code_col], value);
    }
}

void RegionRegistry::set(std::string iso_code, double intensity_g_per_kwh) {
    if (iso_code.empty()) {
        throw ParameterError("empty region code");
    }
    if (!(intensity_g_per_kwh > 0.0) || !std::isfinite(intensity_g_per_kwh)) {
        throw ParameterError("carbon intensity for " + iso_code + " must be positive");
    }
    std::transform(iso_code.begin(), iso_code.end(), iso_code.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    intensities_[std::move(iso_code)] = intensity_g_per_kwh;
}

bool RegionRegistry::contains(std::string_view iso_code) const {
    return intensities_.find(iso_code) != intensities_.end();
}

double RegionRegistry::lookup(std::string_view iso_code) const {
    const auto it = intensities_.find(iso_code);
    if (it == intensities_.end()) {
        std::string available;
        for (const auto& [code, value] : intensities_) {
            available += available.empty() ? code : ", " + code;
        }
        throw ParameterError("unknown region '" + std::string(iso_code) +
                             "'; available: " + available);
    }
    return it->second;
}

std::vector<std::string> RegionRegistry::codes() const {
    std::vector<std::string> out;
    for (const auto& [code, value] : intensities_) {
        out.push_back(code);
    }
    return out;
}

EmissionRecord what_if_region(const EmissionRecord& record, std::string_view target,
                              const RegionRegistry& registry) {
    const double target_intensity = registry.lookup(target);
    EmissionRecord out = record;
    out.region = std::string(target);
    if (record.region == target) {
        return out;
    }
    if (registry.contains(record.region)) {
        out.emissions_kg = record.emissions_kg * (target_intensity / registry.lookup(record.region));
    } else {
        // Source intensity unknown: fall back to the measured energy.
        out.emissions_kg = emissions_kg(record.energy_kwh, target_intensity);
    }
    return out;
}

// ---------------------------------------------------------------------------

struct EmissionSession::State {
    Stage stage;
    std::string label;
    PowerModel power;
    std::string region;
    double intensity;
    Clock* clock;
    double t0 = 0.0;
    std::int64_t started_unix_ms = 0;
    bool stopped = false;
    bool failed = false;
    std::int64_t inference_count = 1;
    bool owns_sampled_slot = false;

    PowerAccumulator trace;
    std::thread sampler;
    std::mutex wake_mutex;
    std::condition_variable wake;
    bool stop_requested = false;

    void take_sample() {
        const double t = clock->now() - t0;
        const double watts = power.probe();
        if (trace.size() == 0) {
            trace.append({0.0, watts});  // no reading exists before the first interval
        }
        trace.append({t, watts});
    }

    void join_sampler() {
        if (sampler.joinable()) {
            {
                std::lock_guard lock(wake_mutex);
                stop_requested = true;
            }
            wake.notify_all();
            sampler.join();
        }
    }

    ~State() {
        join_sampler();
        if (owns_sampled_slot) {
            g_sampled_active.store(false);
        }
    }
};

EmissionSession::EmissionSession(Stage stage, std::string label, PowerModel power,
                                 std::string region, const RegionRegistry& registry, Clock& clock)
    : EmissionSession(stage, std::move(label), std::move(power), region, registry.lookup(region),
                      clock) {}

EmissionSession::EmissionSession(Stage stage, std::string label, PowerModel power,
                                 std::string region, double intensity_g_per_kwh, Clock& clock)
    : state_(std::make_unique<State>()) {
    power.validate();
    if (!(intensity_g_per_kwh > 0.0) || !std::isfinite(intensity_g_per_kwh)) {
        throw ParameterError("carbon intensity must be positive");
    }
    auto& s = *state_;
    s.stage = stage;
    s.label = std::move(label);
    s.power = std::move(power);
    s.region = std::move(region);
    s.intensity = intensity_g_per_kwh;
    s.clock = &clock;

    if (s.power.kind == PowerModel::Kind::sampled_hardware) {
        bool expected = false;
        if (!g_sampled_active.compare_exchange_strong(expected, true)) {
            throw Error("a sampled-hardware session is already active");
        }
        s.owns_sampled_slot = true;
        if (!s.power.probe) {
            s.power.probe = rapl_probe();
        }
    }

    s.started_unix_ms = clock.deterministic() ? 0 : unix_millis();
    s.t0 = clock.now();

    if (s.power.kind == PowerModel::Kind::sampled_hardware) {
        State* raw = state_.get();
        s.sampler = std::thread([raw] {
            const auto interval = std::chrono::duration<double>(raw->power.sample_interval_s);
            std::unique_lock lock(raw->wake_mutex);
            while (!raw->wake.wait_for(lock, interval, [raw] { return raw->stop_requested; })) {
                lock.unlock();
                raw->take_sample();
                lock.lock();
            }
        });
    }
}

EmissionSession::~EmissionSession() = default;
EmissionSession::EmissionSession(EmissionSession&&) noexcept = default;
EmissionSession& EmissionSession::operator=(EmissionSession&&) noexcept = default;

bool EmissionSession::active() const noexcept { return state_ && !state_->stopped; }

double EmissionSession::accumulated_energy_j() const {
    const auto& s = *state_;
    if (s.power.kind == PowerModel::Kind::sampled_hardware) {
        const auto trace = s.trace.snapshot();
        return trapezoid_energy_j(trace);
    }
    return s.power.watts * (s.clock->now() - s.t0);
}

void EmissionSession::mark_failed() { state_->failed = true; }

void EmissionSession::set_inference_count(std::int64_t count) {
    if (count < 1) {
        throw ParameterError("inference count must be at least 1");
    }
    state_->inference_count = count;
}

EmissionRecord EmissionSession::stop() {
    if (!active()) {
        throw Error("emission session already stopped");
    }
    auto& s = *state_;
    const double duration = s.clock->now() - s.t0;

    EmissionRecord rec;
    rec.stage = s.stage;
    rec.label = s.label;
    rec.duration_s = duration;
    rec.region = s.region;
    rec.failed = s.failed;
    rec.started_unix_ms = s.started_unix_ms;
    rec.inference_count = s.stage == Stage::inference ? s.inference_count : 1;

    double joules = 0.0;
    if (s.power.kind == PowerModel::Kind::sampled_hardware) {
        s.join_sampler();
        s.take_sample();
        auto trace = s.trace.snapshot();
        joules = trapezoid_energy_j(trace);
        rec.power_trace = std::move(trace);
        g_sampled_active.store(false);
        s.owns_sampled_slot = false;
    } else {
        joules = s.power.watts * duration;
    }
    rec.energy_kwh = joules / kJoulesPerKwh;
    rec.emissions_kg = emissions_kg(rec.energy_kwh, s.intensity);
    s.stopped = true;
    return rec;
}

bool sampled_session_active() noexcept { return g_sampled_active.load(); }

}  // namespace ecol2

namespace ecol2 {

Meter::Meter(PowerModel power, std::string region, const RegionRegistry& registry, Clock& clock)
    : power_(std::move(power)), region_(std::move(region)), intensity_(registry.lookup(region_)),
      clock_(&clock) {
    power_.validate();
}

EmissionSession Meter::start(Stage stage, std::string label) const {
    return EmissionSession(stage, std::move(label), power_, region_, intensity_, *clock_);
}

}  // namespace ecol2
