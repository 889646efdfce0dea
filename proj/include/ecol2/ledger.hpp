#pragma once

// Persistent lifecycle ledger.
//
// Layout under a root directory:
//   Emissions/Embodied/<unix-millis>-<label>.json
//   Emissions/Developmental/...
//   Emissions/Operational/...
//   Emissions/Inference/...
//   score_inputs.json          (optional; written by `score` and `bench`)
//
// A missing stage directory means the stage is disabled and contributes zero.

#include "ecol2/emissions.hpp"
#include "ecol2/metric.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ecol2 {

[[nodiscard]] nlohmann::json record_to_json(const EmissionRecord& record);
/// Throws IoError on missing or mistyped fields.
[[nodiscard]] EmissionRecord record_from_json(const nlohmann::json& doc);

struct StageTotals {
    std::array<double, 4> emissions_kg{};   // indexed by Stage
    std::array<double, 4> energy_kwh{};
    std::array<double, 4> duration_s{};
    std::array<std::size_t, 4> records{};
    std::array<bool, 4> enabled{};
    std::int64_t inference_count = 0;

    [[nodiscard]] double emissions(Stage s) const { return emissions_kg[static_cast<int>(s)]; }
    [[nodiscard]] bool is_enabled(Stage s) const { return enabled[static_cast<int>(s)]; }
};

struct LedgerSummary {
    CarbonLedger ledger;
    StageTotals totals;
    bool degenerate = false;  // total(n_infer) == 0
};

/// Folds records into stage totals and a CarbonLedger. Stages with no records are disabled
/// unless listed in `enabled_dirs`.
[[nodiscard]] LedgerSummary summarize(const std::vector<EmissionRecord>& records,
                                      std::int64_t n_infer,
                                      std::array<bool, 4> enabled_dirs = {});

/// Inputs needed to score a ledger without re-reading prediction files.
struct ScoreInputs {
    std::string model;
    ErrorReport errors;
    EcoL2Params params;
};

[[nodiscard]] nlohmann::json score_inputs_to_json(const ScoreInputs& inputs);
[[nodiscard]] ScoreInputs score_inputs_from_json(const nlohmann::json& doc);

class LedgerStore {
public:
    /// Opens a store rooted at `root` for reading. The directory need not exist yet.
    explicit LedgerStore(std::filesystem::path root);
    ~LedgerStore();

    LedgerStore(const LedgerStore&) = delete;
    LedgerStore& operator=(const LedgerStore&) = delete;
    LedgerStore(LedgerStore&&) noexcept;
    LedgerStore& operator=(LedgerStore&&) noexcept;

    /// Takes the writer lock (Emissions/.lock). Throws IoError if another live writer holds it.
    void lock_for_writing();
    [[nodiscard]] bool writable() const noexcept { return locked_; }

    /// Creates the Emissions directory and the given stage subdirectories.
    void enable(Stage stage);

    /// Persists one record under its stage directory; enables the stage if needed.
    /// Returns the file written, named <started_unix_ms>-<label>.json with a numeric suffix on reuse.
    std::filesystem::path record(const EmissionRecord& emission);

    [[nodiscard]] bool stage_enabled(Stage stage) const;
    /// Records of one stage in file-name order.
    [[nodiscard]] std::vector<EmissionRecord> records(Stage stage) const;
    [[nodiscard]] std::vector<EmissionRecord> all_records() const;

    /// Throws IoError naming the file when a record cannot be parsed.
    [[nodiscard]] LedgerSummary aggregate(std::int64_t n_infer) const;

    void write_score_inputs(const ScoreInputs& inputs);
    [[nodiscard]] std::optional<ScoreInputs> read_score_inputs() const;

    [[nodiscard]] const std::filesystem::path& root() const noexcept { return root_; }
    [[nodiscard]] std::filesystem::path emissions_dir() const { return root_ / "Emissions"; }
    [[nodiscard]] std::filesystem::path stage_path(Stage stage) const;

private:
    void release_lock() noexcept;

    std::filesystem::path root_;
    bool locked_ = false;
};

}  // namespace ecol2
