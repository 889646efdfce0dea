#pragma once

// Importers for externally produced emission logs and prediction/reference fields.

#include "ecol2/emissions.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ecol2 {

/// Column names in an external tracker CSV. An empty name means "not available".
struct ColumnMap {
    std::string emissions = "emissions";
    std::string energy = "energy_consumed";
    std::string duration = "duration";
    std::string country = "country_iso_code";
    /// Optional per-row stage override column.
    std::string stage_hint;
};

struct EmissionImport {
    std::vector<EmissionRecord> records;
    /// Rows whose stated emissions differ from energy x intensity by more than 5%.
    std::vector<std::string> warnings;
};

/// Relative tolerance between stated emissions and energy x intensity before a warning.
inline constexpr double kConsistencyTolerance = 0.05;

/// One record per CSV row, assigned to `stage` (or the row's stage hint when mapped).
/// Stated emissions win over energy x intensity. Rows with emissions but no country get
/// region "unknown". Throws IoError naming the row on unparsable numbers and naming the
/// columns when neither emissions nor energy + country can be read.
[[nodiscard]] EmissionImport import_emissions_csv(const std::filesystem::path& path,
                                                  const ColumnMap& columns, Stage stage,
                                                  const RegionRegistry& registry);

/// Writes records back in the mapped column layout, at full precision.
void export_emissions_csv(const std::filesystem::path& path, const std::vector<EmissionRecord>& records,
                          const ColumnMap& columns);

struct FieldPair {
    std::vector<double> prediction;  // element-wise mean over all prediction files
    std::vector<double> reference;
    std::size_t rows = 0;
    std::size_t cols = 0;
};

/// Loads numeric CSV matrices (no header). Multiple prediction files are averaged
/// element-wise. Throws IoError quoting both shapes on a mismatch.
[[nodiscard]] FieldPair import_field_csv(const std::vector<std::filesystem::path>& predictions,
                                         const std::filesystem::path& reference);

}  // namespace ecol2
