#pragma once

// Energy measurement and conversion to kgCO2: C = P * t * I.
//
// Intensities are stored in gCO2/kWh and divided by 1000 when emissions are computed.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace ecol2 {

enum class Stage { embodied, developmental, operational, inference };

inline constexpr Stage kAllStages[] = {Stage::embodied, Stage::developmental, Stage::operational,
                                       Stage::inference};

/// Lower-case name: "embodied", "developmental", ...
[[nodiscard]] std::string_view stage_name(Stage stage) noexcept;
/// Ledger subdirectory: "Embodied", "Developmental", ...
[[nodiscard]] std::string_view stage_dir(Stage stage) noexcept;
/// Accepts either spelling, case-insensitively. Throws ParameterError on anything else.
[[nodiscard]] Stage parse_stage(std::string_view name);

inline constexpr double kJoulesPerKwh = 3.6e6;

[[nodiscard]] constexpr double emissions_kg(double energy_kwh, double intensity_g_per_kwh) noexcept {
    return energy_kwh * intensity_g_per_kwh / 1000.0;
}

// ---------------------------------------------------------------------------
// Clocks

/// Time source for sessions. charge() lets deterministic clocks account simulated work;
/// the monotonic clock ignores it.
class Clock {
public:
    virtual ~Clock() = default;
    [[nodiscard]] virtual double now() = 0;
    virtual void charge(double seconds) { (void)seconds; }
    /// Deterministic clocks leave wall-clock start stamps at zero so records are reproducible.
    [[nodiscard]] virtual bool deterministic() const noexcept { return false; }
};

class MonotonicClock final : public Clock {
public:
    double now() override;
};

/// Deterministic clock that only moves when charged.
class VirtualClock final : public Clock {
public:
    double now() override { return elapsed_.load(); }
    void charge(double seconds) override;
    bool deterministic() const noexcept override { return true; }

private:
    std::atomic<double> elapsed_{0.0};
};

// ---------------------------------------------------------------------------
// Power

struct PowerSample {
    double t = 0.0;  // seconds since session start
    double watts = 0.0;

    bool operator==(const PowerSample&) const = default;
};

/// Returns the current power draw in watts. Used by sampled-hardware sessions.
using PowerProbe = std::function<double()>;

struct PowerModel {
    enum class Kind { sampled_hardware, constant_rated, synthetic_fixed };

    Kind kind = Kind::synthetic_fixed;
    double watts = 0.0;             // rated or fixed wattage
    double sample_interval_s = 1.0;  // sampled-hardware only
    PowerProbe probe;               // sampled-hardware; empty means the OS energy counters

    static PowerModel sampled(double interval_s = 1.0, PowerProbe probe = {});
    static PowerModel rated(double watts);
    static PowerModel fixed(double watts);

    void validate() const;
    /// "sample", "rated:<W>" or "fixed:<W>".
    [[nodiscard]] std::string describe() const;
};

/// Parses the --power flag syntax.
[[nodiscard]] PowerModel parse_power_model(std::string_view text);

/// Power probe backed by /sys/class/powercap RAPL package counters. Throws IoError when none
/// are readable.
[[nodiscard]] PowerProbe rapl_probe(const std::filesystem::path& powercap_root =
                                        "/sys/class/powercap");

/// Trapezoidal integral of a power trace, in joules.
[[nodiscard]] double trapezoid_energy_j(std::span<const PowerSample> trace);

/// Thread-safe append/snapshot buffer shared between a sampler and its session.
class PowerAccumulator {
public:
    void append(PowerSample sample);
    [[nodiscard]] std::vector<PowerSample> snapshot() const;
    [[nodiscard]] std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::vector<PowerSample> samples_;
};

// ---------------------------------------------------------------------------
// Regions

class RegionRegistry {
public:
    /// Registry preloaded with the six built-in countries.
    static RegionRegistry builtin();

    /// Merges `iso_code,intensity_g_per_kwh` rows, overriding existing codes.
    void load_csv(const std::filesystem::path& path);
    void set(std::string iso_code, double intensity_g_per_kwh);

    [[nodiscard]] bool contains(std::string_view iso_code) const;
    /// Exact stored value. Throws ParameterError listing available codes on a miss.
    [[nodiscard]] double lookup(std::string_view iso_code) const;
    [[nodiscard]] std::vector<std::string> codes() const;

private:
    std::map<std::string, double, std::less<>> intensities_;
};

/// Region label for imported rows that carry emissions but no country.
inline constexpr std::string_view kUnknownRegion = "unknown";

// ---------------------------------------------------------------------------
// Records and sessions

struct EmissionRecord {
    Stage stage = Stage::operational;
    std::string label;
    double energy_kwh = 0.0;
    double duration_s = 0.0;
    std::string region;
    double emissions_kg = 0.0;
    std::int64_t inference_count = 1;  // inferences covered by this record (inference stage)
    std::optional<std::vector<PowerSample>> power_trace;
    bool failed = false;
    std::int64_t started_unix_ms = 0;

    [[nodiscard]] bool degenerate() const noexcept { return emissions_kg == 0.0; }
    bool operator==(const EmissionRecord&) const = default;
};

/// Copy of a record with emissions recomputed for another region's intensity.
[[nodiscard]] EmissionRecord what_if_region(const EmissionRecord& record, std::string_view target,
                                            const RegionRegistry& registry);

/// One timed measurement interval. Move-only; stop() finalizes exactly once.
class EmissionSession {
public:
    /// Starts timing immediately. The clock must outlive the session.
    EmissionSession(Stage stage, std::string label, PowerModel power, std::string region,
                    const RegionRegistry& registry, Clock& clock);
    /// Same, with an explicit intensity for a region not in any registry.
    EmissionSession(Stage stage, std::string label, PowerModel power, std::string region,
                    double intensity_g_per_kwh, Clock& clock);
    ~EmissionSession();

    EmissionSession(const EmissionSession&) = delete;
    EmissionSession& operator=(const EmissionSession&) = delete;
    EmissionSession(EmissionSession&&) noexcept;
    EmissionSession& operator=(EmissionSession&&) noexcept;

    [[nodiscard]] bool active() const noexcept;
    /// Energy so far, in joules.
    [[nodiscard]] double accumulated_energy_j() const;
    /// Marks the interval as belonging to a failed run; the record is still produced.
    void mark_failed();
    void set_inference_count(std::int64_t count);

    /// Finalizes and returns the record. Throws Error on a second call.
    EmissionRecord stop();

private:
    struct State;
    std::unique_ptr<State> state_;
};

/// True while a sampled-hardware session is running anywhere in the process.
[[nodiscard]] bool sampled_session_active() noexcept;

/// Power model, region and clock bundled so workloads can open stage sessions.
class Meter {
public:
    Meter(PowerModel power, std::string region, const RegionRegistry& registry, Clock& clock);

    [[nodiscard]] EmissionSession start(Stage stage, std::string label) const;
    /// Accounts simulated work on deterministic clocks; a no-op on the monotonic clock.
    void charge(double seconds) const { clock_->charge(seconds); }

    [[nodiscard]] const PowerModel& power() const noexcept { return power_; }
    [[nodiscard]] const std::string& region() const noexcept { return region_; }
    [[nodiscard]] double intensity() const noexcept { return intensity_; }
    [[nodiscard]] Clock& clock() const noexcept { return *clock_; }

private:
    PowerModel power_;
    std::string region_;
    double intensity_;
    Clock* clock_;
};

}  // namespace ecol2
